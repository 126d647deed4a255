#pragma once

#include <memory>
#include <optional>
#include <string>

#include "larb/backend.hpp"
#include "larb/bundle.hpp"
#include "larb/greedy.hpp"

namespace larb {

struct ReducedSystem {
    Matrix matrix;      // sum_q g_q(mu) * gamma A^q_sub gamma^T
    Eigen::VectorXd rhs; // sum_q h_q(mu) * gamma f^q_sub
};

/// Assembles the reduced operator for the local index subset. Only meaningful
/// for bundles carrying affine blocks (the Galerkin problem).
ReducedSystem assemble_reduced(const OfflineBundle& bundle, const std::vector<int>& local,
                               const Matrix& gamma, const Param& mu);

struct StageTimes {
    double search_ms = 0.0;
    double ortho_ms = 0.0;
    double solve_ms = 0.0;
};

struct ReducedSolution {
    Param mu;
    std::vector<int> local_indices; // sample ids actually used, nearest first
    double radius = 0.0;            // distance to the farthest used sample
    Eigen::VectorXd zeta_coeffs;    // in the orthonormalized basis
    Eigen::VectorXd basis_coeffs;   // gamma^T zeta, on the stored basis vectors
    std::optional<double> error;    // exact error, when validation ran
    StageTimes times;
    std::int64_t ortho_mul_adds = 0;
    std::string note;
};

/// Executes the online stage against a loaded bundle: metric neighbor search,
/// Gram-only orthonormalization, then a reduced Galerkin solve (affine
/// bundles) or an inner-product projection (validation mode with snapshots).
/// Queries are independent; the solver is safe for concurrent use.
class OnlineSolver {
public:
    /// `validator` re-instantiates the truth problem for error validation and
    /// for projection coefficients of the analytic families.
    OnlineSolver(std::shared_ptr<const OfflineBundle> bundle,
                 std::shared_ptr<const ProblemBackend> validator = nullptr);

    ReducedSolution solve(const Param& mu, bool validate = false) const;

    const OfflineBundle& bundle() const { return *bundle_; }
    bool is_galerkin() const { return !bundle_->a_reduced.empty(); }

    /// Reconstruction in the truth space; requires snapshots.
    Eigen::VectorXd reconstruct(const ReducedSolution& sol) const;

private:
    std::shared_ptr<const OfflineBundle> bundle_;
    std::shared_ptr<const ProblemBackend> validator_;
    MetricField field_;
    std::vector<Matrix> sample_tensors_;
};

} // namespace larb
