#include "larb/online.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "larb/galerkin.hpp"
#include "larb/ortho.hpp"

namespace larb {

namespace {

double ms_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

bool descriptor_is_cd(const std::string& desc) {
    return desc.find("problem.kind = cd") != std::string::npos;
}

} // namespace

ReducedSystem assemble_reduced(const OfflineBundle& bundle, const std::vector<int>& local,
                               const Matrix& gamma, const Param& mu) {
    if (bundle.a_reduced.empty())
        throw std::logic_error("assemble_reduced: bundle carries no affine blocks");
    if (!descriptor_is_cd(bundle.problem_descriptor))
        throw std::logic_error("assemble_reduced: unknown coefficient functions");
    const Eigen::Vector3d g = cd_theta(mu);
    const int m = int(local.size());
    ReducedSystem rs;
    rs.matrix = Matrix::Zero(m, m);
    rs.rhs = Eigen::VectorXd::Zero(m);
    Matrix sub(m, m);
    Eigen::VectorXd fsub(m);
    for (std::size_t q = 0; q < bundle.a_reduced.size(); ++q) {
        for (int i = 0; i < m; ++i) {
            fsub[i] = bundle.f_reduced[q][local[std::size_t(i)]];
            for (int j = 0; j < m; ++j)
                sub(i, j) = bundle.a_reduced[q](local[std::size_t(i)], local[std::size_t(j)]);
        }
        rs.matrix += g[Eigen::Index(q)] * (gamma * sub * gamma.transpose());
        rs.rhs += g[Eigen::Index(q)] * (gamma * fsub);
    }
    return rs;
}

OnlineSolver::OnlineSolver(std::shared_ptr<const OfflineBundle> bundle,
                           std::shared_ptr<const ProblemBackend> validator)
    : bundle_(std::move(bundle)), validator_(std::move(validator)),
      field_(bundle_->metric_nodes) {
    if (bundle_->sample_points.empty())
        throw std::invalid_argument("OnlineSolver: bundle has no sample points");
    sample_tensors_.resize(bundle_->sample_points.size());
    const int p = bundle_->param_dim();
    for (std::size_t i = 0; i < bundle_->sample_points.size(); ++i)
        sample_tensors_[i] = field_.empty() ? Matrix::Identity(p, p)
                                            : field_.at(bundle_->sample_points[i]).first;
}

ReducedSolution OnlineSolver::solve(const Param& mu, bool validate) const {
    ReducedSolution sol;
    sol.mu = mu;

    // stage 1: metric distances to all sample points, keep the N nearest
    auto t0 = std::chrono::steady_clock::now();
    const int p = bundle_->param_dim();
    const Matrix tensor_mu =
        field_.empty() ? Matrix::Identity(p, p) : field_.at(mu).first;
    const LocalSet ls = local_sample_set(mu, tensor_mu, bundle_->sample_points,
                                         sample_tensors_, bundle_->basis_size);
    sol.times.search_ms = ms_since(t0);

    // stage 2: Gram-only orthonormalization with the dependence guard
    t0 = std::chrono::steady_clock::now();
    LocalOrtho ol = orthonormalize_local(bundle_->gram, ls.indices, ls.order);
    sol.times.ortho_ms = ms_since(t0);
    sol.ortho_mul_adds = ol.mul_adds;
    sol.local_indices = ol.ids;
    double radius = 0.0;
    for (int id : ol.ids)
        radius = std::max(radius,
                          metric_distance(tensor_mu, mu, sample_tensors_[std::size_t(id)],
                                          bundle_->sample_points[std::size_t(id)]));
    sol.radius = radius;
    const int m = int(ol.ids.size());
    if (m == 0) {
        sol.note = "no usable basis vectors";
        return sol;
    }

    // stage 3: reduced solve (affine bundle) or projection (validation mode)
    t0 = std::chrono::steady_clock::now();
    if (is_galerkin()) {
        const ReducedSystem rs = assemble_reduced(*bundle_, ol.ids, ol.gamma, mu);
        Eigen::PartialPivLU<Matrix> lu(rs.matrix);
        sol.zeta_coeffs = lu.solve(rs.rhs);
        const double resid = (rs.matrix * sol.zeta_coeffs - rs.rhs).cwiseAbs().maxCoeff();
        const double scale = std::max(rs.rhs.cwiseAbs().maxCoeff(), 1e-300);
        if (!(resid <= 1e-6 * std::max(scale, 1.0))) {
            Eigen::JacobiSVD<Matrix> svd(rs.matrix);
            const double cond = svd.singularValues()(0) /
                                std::max(svd.singularValues().tail(1)(0), 1e-300);
            std::ostringstream os;
            os << "online_solve: singular reduced matrix at mu = (" << mu.transpose()
               << "), condition estimate " << cond;
            throw std::runtime_error(os.str());
        }
    } else if (validator_ && bundle_->has_snapshots()) {
        // L2 projection path: coefficients from the truth snapshot
        const Eigen::VectorXd truth = validator_->truth_solve(mu);
        Eigen::VectorXd b(m);
        for (int i = 0; i < m; ++i)
            b[i] = validator_->inner_product(truth, bundle_->snapshots[std::size_t(ol.ids[i])]);
        sol.zeta_coeffs = ol.gamma * b;
    } else {
        sol.note = bundle_->has_snapshots()
                       ? "projection coefficients need a validation backend"
                       : "snapshots unavailable";
        sol.times.solve_ms = ms_since(t0);
        return sol;
    }
    sol.basis_coeffs = ol.gamma.transpose() * sol.zeta_coeffs;
    sol.times.solve_ms = ms_since(t0);

    if (validate) {
        if (!validator_ || !bundle_->has_snapshots()) {
            sol.note = sol.note.empty() ? "snapshots unavailable" : sol.note;
        } else {
            const Eigen::VectorXd truth = validator_->truth_solve(mu);
            sol.error = validator_->error_norm_of(truth - reconstruct(sol));
        }
    }
    return sol;
}

Eigen::VectorXd OnlineSolver::reconstruct(const ReducedSolution& sol) const {
    if (!bundle_->has_snapshots())
        throw std::logic_error("reconstruct: bundle saved without snapshots");
    const bool lifted = bundle_->lifting.size() > 0;
    Eigen::VectorXd out = lifted
                              ? bundle_->lifting
                              : Eigen::VectorXd::Zero(bundle_->snapshots[0].size());
    for (std::size_t i = 0; i < sol.local_indices.size(); ++i) {
        const auto& snap = bundle_->snapshots[std::size_t(sol.local_indices[i])];
        if (lifted)
            out += sol.basis_coeffs[Eigen::Index(i)] * (snap - bundle_->lifting);
        else
            out += sol.basis_coeffs[Eigen::Index(i)] * snap;
    }
    return out;
}

} // namespace larb
