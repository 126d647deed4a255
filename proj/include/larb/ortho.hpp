#pragma once

#include <cstdint>
#include <optional>

#include "larb/params.hpp"

namespace larb {

/// Outcome of the recursive orthonormalization pass over a Gram submatrix.
/// `beta` and `beta_tilde` follow the recursion
///     alpha    = (G_nn - sum_j |bt_nj|^2)^(1/2)
///     b_nn     = 1/alpha
///     b_nj     = bt_nj / alpha
///     bt_kn    = -b_nn G_nk + sum_j b_nj bt_kj
/// where bt_kn stands for -<v_k, zeta_n>. `mul_adds` counts scalar
/// multiply-add operations, for cost auditing.
struct BetaResult {
    Matrix beta;        // lower triangular, positive diagonal
    Matrix beta_tilde;  // workspace of projections
    std::int64_t mul_adds = 0;
    int failed_index = -1; // >= 0: row where alpha^2 fell below the guard
    bool ok() const { return failed_index < 0; }
};

/// Gram-only Gram-Schmidt coefficients. Fails (without throwing) at the first
/// index whose residual norm alpha^2 drops below rel_guard * G_nn, signalling
/// linear dependence; the caller drops that snapshot.
BetaResult compute_beta(const Matrix& gram, double rel_guard = 1e-12);

/// Accumulates beta into the change-of-basis gamma with zeta_n = sum_i
/// gamma_ni v_i: gamma_ni = sum_{k<n} beta_nk gamma_ki below the diagonal,
/// gamma_nn = beta_nn. Adds its multiply-add count to `mul_adds`.
Matrix compute_gamma(const Matrix& beta, std::int64_t* mul_adds = nullptr);

/// compute_beta + compute_gamma in one step; nullopt carries no information
/// beyond "dependent at failed_index" so callers needing the index use
/// compute_beta directly.
std::optional<Matrix> try_orthonormalize(const Matrix& gram, std::int64_t* mul_adds = nullptr,
                                         double rel_guard = 1e-12);

/// Orthonormalization over a subset of a global Gram matrix with the
/// near-dependence policy: a snapshot whose residual norm collapses is
/// dropped and the next candidate from `order` takes its place, keeping the
/// basis size where possible.
struct LocalOrtho {
    std::vector<int> ids; // kept entries, preference order preserved
    Matrix gamma;
    std::int64_t mul_adds = 0;
};

LocalOrtho orthonormalize_local(const Matrix& gram, std::vector<int> initial,
                                const std::vector<int>& order, double rel_guard = 1e-12);

} // namespace larb
