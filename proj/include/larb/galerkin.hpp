#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <memory>

#include "larb/backend.hpp"
#include "larb/fem.hpp"

namespace larb {

/// Parameter-separated operator and right-side blocks:
///   a(w,v;mu) = sum_q g_q(mu) a_q(w,v),   f(v;mu) = sum_q h_q(mu) f_q(v).
struct AffineForms {
    std::vector<const Eigen::SparseMatrix<double>*> a_blocks;
    std::vector<std::function<double(const Param&)>> g;
    std::vector<Eigen::VectorXd> f_blocks;
    std::vector<std::function<double(const Param&)>> h;
    int q_a() const { return int(a_blocks.size()); }
    int q_f() const { return int(f_blocks.size()); }
};

/// Affine coefficients of the convection-diffusion operator,
/// (10^{mu_1}, sin mu_2, cos mu_2); usable without any assembly.
Eigen::Vector3d cd_theta(const Param& mu);

/// Steady convection-diffusion on the unit square with diffusion 10^{mu_1},
/// convection direction (sin mu_2, cos mu_2), homogeneous Dirichlet data
/// except for a sawtooth profile g on the lower boundary, imposed through a
/// lifting. Snapshots are full nodal fields u = u0 + u_g; basis vectors are
/// the interior parts u0.
class ConvectionDiffusionBackend final : public ProblemBackend {
public:
    ConvectionDiffusionBackend(ParameterDomain domain, int elems_per_side, int degree,
                               ErrorNorm norm = ErrorNorm::l2);

    const ParameterDomain& domain() const override { return domain_; }
    Eigen::Index truth_dim() const override { return fem_.node_count(); }
    bool is_galerkin() const override { return true; }
    Eigen::VectorXd truth_solve(const Param& mu) const override;
    double inner_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const override;
    double error_norm_of(const Eigen::VectorXd& diff) const override;
    ErrorNorm error_norm() const override { return norm_; }
    Eigen::VectorXd lifting_vector() const override { return lifting_; }
    double local_space_error(const Param& mu,
                             const std::vector<Eigen::VectorXd>& basis) const override;
    std::string descriptor() const override;

    /// The three operator blocks, their coefficient functions, and the lifted
    /// right-side blocks f_q(v) = -a_q(u_g, v) with h_q = g_q.
    AffineForms affine_terms() const;
    Eigen::Vector3d theta(const Param& mu) const; // (10^{mu1}, sin mu2, cos mu2)

    const QuadFem& fem() const { return fem_; }

    /// Boundary profile on the lower edge: piecewise linear through
    /// (0,0), (0.5,0.5), (0.525,-0.475), (1,0).
    static double boundary_profile(double x);

    /// Assembled full operator sum_q g_q(mu) A_q over all nodes.
    Eigen::SparseMatrix<double> assemble_operator(const Param& mu) const;

private:
    ParameterDomain domain_;
    QuadFem fem_;
    ErrorNorm norm_;
    Eigen::VectorXd lifting_;
    std::vector<Eigen::Index> free_;
    Eigen::SparseMatrix<double> k_ff_, cx_ff_, cy_ff_; // free-dof blocks, common pattern
    Eigen::VectorXd k_ug_, cx_ug_, cy_ug_;             // (A_q u_g) restricted to free dofs
};

} // namespace larb
