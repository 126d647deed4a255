#include "larb/backend.hpp"

#include <cmath>
#include <sstream>

#include "larb/csv.hpp"
#include "larb/ortho.hpp"

namespace larb {

ErrorNorm error_norm_from_string(const std::string& s) {
    if (s == "linf") return ErrorNorm::linf;
    if (s == "l2") return ErrorNorm::l2;
    if (s == "h1") return ErrorNorm::h1;
    throw std::invalid_argument("unknown error norm: " + s);
}

std::string error_norm_to_string(ErrorNorm n) {
    switch (n) {
        case ErrorNorm::linf: return "linf";
        case ErrorNorm::l2: return "l2";
        case ErrorNorm::h1: return "h1";
    }
    throw std::logic_error("unreachable");
}

AnalyticL2Backend::AnalyticL2Backend(Family family, SpatialGrid grid, ParameterDomain domain,
                                     std::optional<XiMap> xi, ErrorNorm norm)
    : family_(family), grid_(std::move(grid)), domain_(std::move(domain)), xi_(xi),
      norm_(norm) {
    if (grid_.dim() != 2)
        throw std::invalid_argument("AnalyticL2Backend: grid must be 2-dimensional");
    if (domain_.dim() != 2)
        throw std::invalid_argument("AnalyticL2Backend: parameter domain must be 2-dimensional");
    if (norm_ == ErrorNorm::h1)
        throw std::invalid_argument("AnalyticL2Backend: h1 norm not available");
    wx_ = Eigen::Map<const Eigen::VectorXd>(grid_.axis_weights(0).data(), grid_.count(0));
    wy_ = Eigen::Map<const Eigen::VectorXd>(grid_.axis_weights(1).data(), grid_.count(1));
}

AnalyticL2Backend::Factors AnalyticL2Backend::factors(const Param& mu) const {
    const FamilyShape s = family_shape(family_, mu, xi_);
    Factors f;
    f.fx.resize(grid_.count(0));
    f.fy.resize(grid_.count(1));
    const auto& xs = grid_.axis(0);
    const auto& ys = grid_.axis(1);
    for (int i = 0; i < grid_.count(0); ++i)
        f.fx[i] = std::exp(-(xs[i] - s.c1) * (xs[i] - s.c1) / s.d1);
    for (int j = 0; j < grid_.count(1); ++j)
        f.fy[j] = std::exp(-(ys[j] - s.c2) * (ys[j] - s.c2) / s.d2);
    return f;
}

Eigen::VectorXd AnalyticL2Backend::truth_solve(const Param& mu) const {
    if (!domain_.contains(mu, 1e-12))
        throw std::invalid_argument("truth_solve: mu outside the parameter domain");
    const Factors f = factors(mu);
    const int nx = grid_.count(0), ny = grid_.count(1);
    Eigen::VectorXd v(grid_.node_count());
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            v[Eigen::Index(j) * nx + i] = f.fx[i] * f.fy[j];
    return v;
}

double AnalyticL2Backend::inner_product(const Eigen::VectorXd& u,
                                        const Eigen::VectorXd& v) const {
    if (u.size() != grid_.node_count() || v.size() != grid_.node_count())
        throw std::invalid_argument("inner_product: dimension mismatch");
    return u.cwiseProduct(v).dot(grid_.weights());
}

double AnalyticL2Backend::inner_product(const Factors& a, const Factors& b) const {
    const double sx = a.fx.cwiseProduct(b.fx).dot(wx_);
    const double sy = a.fy.cwiseProduct(b.fy).dot(wy_);
    return sx * sy;
}

double AnalyticL2Backend::error_norm_of(const Eigen::VectorXd& diff) const {
    if (norm_ == ErrorNorm::linf) return diff.cwiseAbs().maxCoeff();
    return std::sqrt(std::max(0.0, diff.cwiseProduct(diff).dot(grid_.weights())));
}

std::string AnalyticL2Backend::descriptor() const {
    std::ostringstream os;
    os << "problem.kind = analytic\n";
    os << "problem.family = " << family_to_string(family_) << "\n";
    os << "problem.domain = " << format_double(domain_.lower()[0]) << " "
       << format_double(domain_.upper()[0]) << " " << format_double(domain_.lower()[1])
       << " " << format_double(domain_.upper()[1]) << "\n";
    os << "problem.grid = " << grid_.count(0) << " " << grid_.count(1) << "\n";
    os << "problem.omega = " << format_double(grid_.axis(0).front()) << " "
       << format_double(grid_.axis(0).back()) << " " << format_double(grid_.axis(1).front())
       << " " << format_double(grid_.axis(1).back()) << "\n";
    if (xi_)
        os << "problem.xi = " << format_double(xi_->a1) << " " << format_double(xi_->b1)
           << " " << format_double(xi_->a2) << " " << format_double(xi_->b2) << "\n";
    os << "problem.error_norm = " << error_norm_to_string(norm_) << "\n";
    return os.str();
}

double AnalyticL2Backend::local_space_error(const Param& mu,
                                            const std::vector<Eigen::VectorXd>& basis) const {
    const Eigen::VectorXd target = truth_solve(mu);
    std::vector<const Eigen::VectorXd*> kept;
    kept.reserve(basis.size());
    for (const auto& b : basis) kept.push_back(&b);

    // orthonormalize via the Gram-only recursion, dropping dependent vectors
    while (true) {
        const int m = int(kept.size());
        if (m == 0) return error_norm_of(target);
        Matrix gram(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j <= i; ++j) {
                gram(i, j) = inner_product(*kept[i], *kept[j]);
                gram(j, i) = gram(i, j);
            }
        BetaResult br = compute_beta(gram);
        if (!br.ok()) {
            kept.erase(kept.begin() + br.failed_index);
            continue;
        }
        Matrix gamma = compute_gamma(br.beta);
        Eigen::VectorXd b(m);
        for (int i = 0; i < m; ++i) b[i] = inner_product(target, *kept[i]);
        const Eigen::VectorXd zeta_coeffs = gamma * b;
        const Eigen::VectorXd basis_coeffs = gamma.transpose() * zeta_coeffs;
        Eigen::VectorXd residual = target;
        for (int i = 0; i < m; ++i) residual -= basis_coeffs[i] * (*kept[i]);
        return error_norm_of(residual);
    }
}

double exact_error(const ProblemBackend& backend, const Param& mu,
                   const std::vector<Eigen::VectorXd>& basis) {
    return backend.local_space_error(mu, basis);
}

} // namespace larb
