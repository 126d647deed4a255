#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "larb/families.hpp"
#include "larb/grid.hpp"
#include "larb/params.hpp"

namespace larb {

enum class ErrorNorm { linf, l2, h1 };

ErrorNorm error_norm_from_string(const std::string& s);
std::string error_norm_to_string(ErrorNorm n);

/// The truth layer: a parametrized solution family over a spatial
/// discretization, with an inner product and an error norm. A snapshot is the
/// coefficient vector of the truth solution; the basis vector of a snapshot
/// is the snapshot minus the lifting (which is zero except for Galerkin
/// problems with nonhomogeneous Dirichlet data).
class ProblemBackend {
public:
    virtual ~ProblemBackend() = default;

    virtual const ParameterDomain& domain() const = 0;
    virtual Eigen::Index truth_dim() const = 0;
    virtual bool is_galerkin() const = 0;

    virtual Eigen::VectorXd truth_solve(const Param& mu) const = 0;
    virtual double inner_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const = 0;
    virtual double error_norm_of(const Eigen::VectorXd& diff) const = 0;
    virtual ErrorNorm error_norm() const = 0;

    virtual Eigen::VectorXd lifting_vector() const {
        return Eigen::VectorXd::Zero(truth_dim());
    }

    /// Exact error of the approximation built on span(basis snapshots):
    /// best-approximation error for projection backends, reduced Galerkin
    /// error for PDE backends. Near-dependent snapshots are dropped.
    virtual double local_space_error(const Param& mu,
                                     const std::vector<Eigen::VectorXd>& basis) const = 0;

    /// key=value lines describing the problem; enough to re-instantiate the
    /// backend from a stored bundle.
    virtual std::string descriptor() const = 0;
};

/// Exact approximation error of the local space spanned by `basis` at mu:
/// projection error for the analytic families, reduced Galerkin error for the
/// PDE backend. Empty basis gives the norm of the truth solution itself.
double exact_error(const ProblemBackend& backend, const Param& mu,
                   const std::vector<Eigen::VectorXd>& basis);

/// Explicit parametrized function families measured in the L2 quadrature
/// inner product of the grid; truth solves are pointwise evaluations.
class AnalyticL2Backend final : public ProblemBackend {
public:
    AnalyticL2Backend(Family family, SpatialGrid grid, ParameterDomain domain,
                      std::optional<XiMap> xi = std::nullopt,
                      ErrorNorm norm = ErrorNorm::linf);

    const ParameterDomain& domain() const override { return domain_; }
    Eigen::Index truth_dim() const override { return grid_.node_count(); }
    bool is_galerkin() const override { return false; }
    Eigen::VectorXd truth_solve(const Param& mu) const override;
    double inner_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const override;
    double error_norm_of(const Eigen::VectorXd& diff) const override;
    ErrorNorm error_norm() const override { return norm_; }
    double local_space_error(const Param& mu,
                             const std::vector<Eigen::VectorXd>& basis) const override;
    std::string descriptor() const override;

    const SpatialGrid& grid() const { return grid_; }
    Family family() const { return family_; }
    const std::optional<XiMap>& xi() const { return xi_; }

    /// Separable axis factors of a truth solution (values only, no weights);
    /// inner products of two such factorizations need O(n1 + n2) work.
    struct Factors {
        Eigen::VectorXd fx, fy;
    };
    Factors factors(const Param& mu) const;
    double inner_product(const Factors& a, const Factors& b) const;

private:
    Family family_;
    SpatialGrid grid_;
    ParameterDomain domain_;
    std::optional<XiMap> xi_;
    ErrorNorm norm_;
    Eigen::VectorXd wx_, wy_; // per-axis quadrature weights
};

} // namespace larb
