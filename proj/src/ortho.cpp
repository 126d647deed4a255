#include "larb/ortho.hpp"

#include <cmath>
#include <stdexcept>

namespace larb {

BetaResult compute_beta(const Matrix& gram, double rel_guard) {
    const auto n = gram.rows();
    if (gram.cols() != n)
        throw std::invalid_argument("compute_beta: Gram matrix must be square");

    BetaResult r;
    r.beta = Matrix::Zero(n, n);
    r.beta_tilde = Matrix::Zero(n, n);
    std::int64_t ops = 0;

    for (Eigen::Index k = 0; k < n; ++k) {
        if (!(gram(k, k) > 0.0)) {
            r.failed_index = int(k);
            r.mul_adds = ops;
            return r;
        }
    }

    for (Eigen::Index nn = 0; nn < n; ++nn) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < nn; ++j) {
            s += r.beta_tilde(nn, j) * r.beta_tilde(nn, j);
            ++ops;
        }
        const double alpha2 = gram(nn, nn) - s;
        if (!(alpha2 > rel_guard * gram(nn, nn))) {
            r.failed_index = int(nn);
            r.mul_adds = ops;
            return r;
        }
        const double alpha = std::sqrt(alpha2);
        r.beta(nn, nn) = 1.0 / alpha;
        for (Eigen::Index j = 0; j < nn; ++j) {
            r.beta(nn, j) = r.beta_tilde(nn, j) / alpha;
            ++ops;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
            double v = -r.beta(nn, nn) * gram(nn, k);
            ++ops;
            for (Eigen::Index j = 0; j < nn; ++j) {
                v += r.beta(nn, j) * r.beta_tilde(k, j);
                ++ops;
            }
            r.beta_tilde(k, nn) = v;
        }
    }
    r.mul_adds = ops;
    return r;
}

Matrix compute_gamma(const Matrix& beta, std::int64_t* mul_adds) {
    const auto n = beta.rows();
    Matrix gamma = Matrix::Zero(n, n);
    std::int64_t ops = 0;
    for (Eigen::Index nn = 0; nn < n; ++nn) {
        gamma(nn, nn) = beta(nn, nn);
        for (Eigen::Index i = 0; i < nn; ++i) {
            double v = 0.0;
            for (Eigen::Index k = i; k < nn; ++k) { // gamma_ki = 0 for k < i
                v += beta(nn, k) * gamma(k, i);
                ++ops;
            }
            gamma(nn, i) = v;
        }
    }
    if (mul_adds) *mul_adds += ops;
    return gamma;
}

std::optional<Matrix> try_orthonormalize(const Matrix& gram, std::int64_t* mul_adds,
                                         double rel_guard) {
    BetaResult r = compute_beta(gram, rel_guard);
    if (!r.ok()) return std::nullopt;
    if (mul_adds) *mul_adds += r.mul_adds;
    return compute_gamma(r.beta, mul_adds);
}

LocalOrtho orthonormalize_local(const Matrix& gram, std::vector<int> initial,
                                const std::vector<int>& order, double rel_guard) {
    LocalOrtho out;
    std::size_t next = 0;
    {
        std::vector<char> in_use(std::size_t(gram.rows()), 0);
        for (int id : initial) in_use[std::size_t(id)] = 1;
        while (next < order.size() && in_use[std::size_t(order[next])]) ++next;
    }
    std::vector<int>& ids = initial;
    while (!ids.empty()) {
        const int m = int(ids.size());
        Matrix g(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) g(i, j) = gram(ids[i], ids[j]);
        BetaResult br = compute_beta(g, rel_guard);
        if (br.ok()) {
            out.ids = std::move(ids);
            out.mul_adds = br.mul_adds;
            out.gamma = compute_gamma(br.beta, &out.mul_adds);
            return out;
        }
        ids.erase(ids.begin() + br.failed_index);
        if (next < order.size()) ids.push_back(order[next++]);
    }
    out.gamma = Matrix(0, 0);
    return out;
}

} // namespace larb
