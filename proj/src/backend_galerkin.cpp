#include "larb/galerkin.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <sstream>

#include "larb/csv.hpp"
#include "larb/ortho.hpp"

namespace larb {

namespace {

Eigen::SparseMatrix<double> restrict_block(const Eigen::SparseMatrix<double>& a,
                                           const std::vector<Eigen::Index>& keep) {
    std::vector<Eigen::Index> where(a.rows(), -1);
    for (std::size_t i = 0; i < keep.size(); ++i) where[keep[i]] = Eigen::Index(i);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(a.nonZeros());
    for (int col = 0; col < a.outerSize(); ++col) {
        if (where[col] < 0) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator it(a, col); it; ++it) {
            if (where[it.row()] < 0) continue;
            trips.emplace_back(where[it.row()], where[col], it.value());
        }
    }
    Eigen::SparseMatrix<double> out(keep.size(), keep.size());
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

} // namespace

double ConvectionDiffusionBackend::boundary_profile(double x) {
    if (x <= 0.5) return x;
    if (x <= 0.525) return 0.5 - 39.0 * (x - 0.5);
    return x - 1.0;
}

ConvectionDiffusionBackend::ConvectionDiffusionBackend(ParameterDomain domain,
                                                       int elems_per_side, int degree,
                                                       ErrorNorm norm)
    : domain_(std::move(domain)), fem_(elems_per_side, elems_per_side, degree), norm_(norm) {
    if (domain_.dim() != 2)
        throw std::invalid_argument("ConvectionDiffusionBackend: parameter dim must be 2");

    // resolution guard: reject cell Peclet numbers above 20 at the smallest
    // diffusion in the parameter box (|beta| = 1)
    const double eps_min = std::pow(10.0, domain_.lower()[0]);
    const double h = fem_.hx() / degree;
    const double peclet = h / (2.0 * eps_min);
    if (peclet > 20.0) {
        std::ostringstream os;
        os << "ConvectionDiffusionBackend: cell Peclet " << peclet
           << " exceeds 20 at eps = " << eps_min << "; refine the mesh (h = " << h << ")";
        throw std::invalid_argument(os.str());
    }

    lifting_ = Eigen::VectorXd::Zero(fem_.node_count());
    for (int ix = 0; ix < fem_.nodes_x(); ++ix)
        lifting_[fem_.node_id(ix, 0)] = boundary_profile(fem_.node_x(ix));
    // profile vanishes at the lower corners, so the lifting is continuous

    free_ = fem_.free_nodes();
    k_ff_ = restrict_block(fem_.stiffness(), free_);
    cx_ff_ = restrict_block(fem_.convection_x(), free_);
    cy_ff_ = restrict_block(fem_.convection_y(), free_);

    auto free_part = [&](const Eigen::VectorXd& full) {
        Eigen::VectorXd out(free_.size());
        for (std::size_t i = 0; i < free_.size(); ++i) out[Eigen::Index(i)] = full[free_[i]];
        return out;
    };
    k_ug_ = free_part(fem_.stiffness() * lifting_);
    cx_ug_ = free_part(fem_.convection_x() * lifting_);
    cy_ug_ = free_part(fem_.convection_y() * lifting_);
}

Eigen::Vector3d cd_theta(const Param& mu) {
    return {std::pow(10.0, mu[0]), std::sin(mu[1]), std::cos(mu[1])};
}

Eigen::Vector3d ConvectionDiffusionBackend::theta(const Param& mu) const {
    return cd_theta(mu);
}

Eigen::SparseMatrix<double> ConvectionDiffusionBackend::assemble_operator(
    const Param& mu) const {
    const Eigen::Vector3d g = theta(mu);
    Eigen::SparseMatrix<double> a = g[0] * fem_.stiffness();
    a += g[1] * fem_.convection_x();
    a += g[2] * fem_.convection_y();
    return a;
}

Eigen::VectorXd ConvectionDiffusionBackend::truth_solve(const Param& mu) const {
    if (!domain_.contains(mu, 1e-12))
        throw std::invalid_argument("truth_solve: mu outside the parameter domain");
    const Eigen::Vector3d g = theta(mu);
    Eigen::SparseMatrix<double> a = g[0] * k_ff_;
    a += g[1] * cx_ff_;
    a += g[2] * cy_ff_;
    const Eigen::VectorXd rhs = -(g[0] * k_ug_ + g[1] * cx_ug_ + g[2] * cy_ug_);

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(a);
    if (lu.info() != Eigen::Success) {
        std::ostringstream os;
        os << "truth_solve: singular operator at mu = (" << mu.transpose() << ")";
        throw std::runtime_error(os.str());
    }
    const Eigen::VectorXd u0 = lu.solve(rhs);

    Eigen::VectorXd full = lifting_;
    for (std::size_t i = 0; i < free_.size(); ++i) full[free_[i]] += u0[Eigen::Index(i)];
    return full;
}

double ConvectionDiffusionBackend::inner_product(const Eigen::VectorXd& u,
                                                 const Eigen::VectorXd& v) const {
    if (u.size() != fem_.node_count() || v.size() != fem_.node_count())
        throw std::invalid_argument("inner_product: dimension mismatch");
    return u.dot(fem_.mass() * v);
}

double ConvectionDiffusionBackend::error_norm_of(const Eigen::VectorXd& diff) const {
    switch (norm_) {
        case ErrorNorm::linf: return diff.cwiseAbs().maxCoeff();
        case ErrorNorm::l2: return std::sqrt(std::max(0.0, diff.dot(fem_.mass() * diff)));
        case ErrorNorm::h1:
            return std::sqrt(std::max(0.0, diff.dot(fem_.mass() * diff) +
                                               diff.dot(fem_.stiffness() * diff)));
    }
    throw std::logic_error("unreachable");
}

AffineForms ConvectionDiffusionBackend::affine_terms() const {
    AffineForms af;
    af.a_blocks = {&fem_.stiffness(), &fem_.convection_x(), &fem_.convection_y()};
    af.g = {[](const Param& mu) { return std::pow(10.0, mu[0]); },
            [](const Param& mu) { return std::sin(mu[1]); },
            [](const Param& mu) { return std::cos(mu[1]); }};
    af.f_blocks = {-(fem_.stiffness() * lifting_), -(fem_.convection_x() * lifting_),
                   -(fem_.convection_y() * lifting_)};
    af.h = af.g;
    return af;
}

double ConvectionDiffusionBackend::local_space_error(
    const Param& mu, const std::vector<Eigen::VectorXd>& basis) const {
    const Eigen::VectorXd truth = truth_solve(mu);
    if (basis.empty()) return error_norm_of(truth);

    std::vector<Eigen::VectorXd> interior;
    interior.reserve(basis.size());
    for (const auto& b : basis) interior.push_back(b - lifting_);

    while (!interior.empty()) {
        const int m = int(interior.size());
        Matrix gram(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j <= i; ++j) {
                gram(i, j) = inner_product(interior[i], interior[j]);
                gram(j, i) = gram(i, j);
            }
        BetaResult br = compute_beta(gram);
        if (!br.ok()) {
            interior.erase(interior.begin() + br.failed_index);
            continue;
        }
        const Matrix gamma = compute_gamma(br.beta);

        // reduced Galerkin system in the orthonormalized basis
        const Eigen::Vector3d g = theta(mu);
        const AffineForms af = affine_terms();
        Matrix reduced = Matrix::Zero(m, m);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
        for (int q = 0; q < 3; ++q) {
            Matrix aq(m, m);
            Eigen::VectorXd fq(m);
            for (int j = 0; j < m; ++j) {
                const Eigen::VectorXd av = *af.a_blocks[q] * interior[j];
                for (int i = 0; i < m; ++i) aq(i, j) = interior[i].dot(av);
            }
            for (int i = 0; i < m; ++i) fq[i] = af.f_blocks[q].dot(interior[i]);
            reduced += g[q] * (gamma * aq * gamma.transpose());
            rhs += g[q] * (gamma * fq);
        }
        Eigen::PartialPivLU<Matrix> lu(reduced);
        const Eigen::VectorXd zeta_coeffs = lu.solve(rhs);
        const Eigen::VectorXd coeffs = gamma.transpose() * zeta_coeffs;

        Eigen::VectorXd approx = lifting_;
        for (int i = 0; i < m; ++i) approx += coeffs[i] * interior[i];
        return error_norm_of(truth - approx);
    }
    return error_norm_of(truth);
}

std::string ConvectionDiffusionBackend::descriptor() const {
    std::ostringstream os;
    os << "problem.kind = cd\n";
    os << "problem.domain = " << format_double(domain_.lower()[0]) << " "
       << format_double(domain_.upper()[0]) << " " << format_double(domain_.lower()[1])
       << " " << format_double(domain_.upper()[1]) << "\n";
    os << "problem.fem_elems = " << int(std::lround(1.0 / fem_.hx())) << "\n";
    os << "problem.fem_degree = " << fem_.degree() << "\n";
    os << "problem.error_norm = " << error_norm_to_string(norm_) << "\n";
    return os.str();
}

} // namespace larb
