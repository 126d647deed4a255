#include "larb/fem.hpp"

#include <cmath>
#include <stdexcept>

namespace larb {

namespace {

// Gauss-Legendre rule on [0,1], exact up to degree 2n-1
void gauss_rule(int n, std::vector<double>& pts, std::vector<double>& wts) {
    switch (n) {
        case 1:
            pts = {0.5};
            wts = {1.0};
            return;
        case 2: {
            const double d = 0.5 / std::sqrt(3.0);
            pts = {0.5 - d, 0.5 + d};
            wts = {0.5, 0.5};
            return;
        }
        case 3: {
            const double d = 0.5 * std::sqrt(3.0 / 5.0);
            pts = {0.5 - d, 0.5, 0.5 + d};
            wts = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
            return;
        }
        case 4: {
            const double a = 0.5 * std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
            const double b = 0.5 * std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
            const double wa = (18.0 + std::sqrt(30.0)) / 72.0;
            const double wb = (18.0 - std::sqrt(30.0)) / 72.0;
            pts = {0.5 - b, 0.5 - a, 0.5 + a, 0.5 + b};
            wts = {wb, wa, wa, wb};
            return;
        }
        default:
            throw std::invalid_argument("gauss_rule: unsupported point count");
    }
}

// Lagrange basis on equispaced nodes i/q of [0,1]
double lagrange_value(int q, int i, double t) {
    double v = 1.0;
    for (int j = 0; j <= q; ++j) {
        if (j == i) continue;
        v *= (t - double(j) / q) / (double(i) / q - double(j) / q);
    }
    return v;
}

double lagrange_deriv(int q, int i, double t) {
    double sum = 0.0;
    for (int k = 0; k <= q; ++k) {
        if (k == i) continue;
        double prod = 1.0 / (double(i) / q - double(k) / q);
        for (int j = 0; j <= q; ++j) {
            if (j == i || j == k) continue;
            prod *= (t - double(j) / q) / (double(i) / q - double(j) / q);
        }
        sum += prod;
    }
    return sum;
}

} // namespace

QuadFem::QuadFem(int elems_x, int elems_y, int degree)
    : elems_x_(elems_x), elems_y_(elems_y), degree_(degree) {
    if (elems_x < 1 || elems_y < 1)
        throw std::invalid_argument("QuadFem: need at least one element per direction");
    if (degree < 1 || degree > 3)
        throw std::invalid_argument("QuadFem: degree must be in 1..3");
    nodes_x_ = elems_x_ * degree_ + 1;
    nodes_y_ = elems_y_ * degree_ + 1;
    hx_ = 1.0 / elems_x_;
    hy_ = 1.0 / elems_y_;

    // 1D reference matrices on [0,1]: mass, stiffness, first-derivative form
    const int q = degree_;
    const int nloc = q + 1;
    std::vector<double> gp, gw;
    gauss_rule(q + 1, gp, gw);
    Matrix m1 = Matrix::Zero(nloc, nloc); // int L_i L_j
    Matrix k1 = Matrix::Zero(nloc, nloc); // int L_i' L_j'
    Matrix c1 = Matrix::Zero(nloc, nloc); // int L_j' L_i  (trial derivative)
    for (std::size_t g = 0; g < gp.size(); ++g) {
        for (int i = 0; i < nloc; ++i) {
            const double vi = lagrange_value(q, i, gp[g]);
            const double di = lagrange_deriv(q, i, gp[g]);
            for (int j = 0; j < nloc; ++j) {
                const double vj = lagrange_value(q, j, gp[g]);
                const double dj = lagrange_deriv(q, j, gp[g]);
                m1(i, j) += gw[g] * vi * vj;
                k1(i, j) += gw[g] * di * dj;
                c1(i, j) += gw[g] * dj * vi; // row i = test, col j = trial
            }
        }
    }

    // tensorized local matrices with uniform-mesh scalings
    // mass: hx*hy (m1 x m1); stiffness: (hy/hx)(k1 x m1) + (hx/hy)(m1 x k1)
    // conv_x: hy (c1 x m1); conv_y: hx (m1 x c1)
    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> tm, tk, tcx, tcy;
    const std::size_t guess =
        std::size_t(elems_x_) * elems_y_ * nloc * nloc * nloc * nloc;
    tm.reserve(guess);
    tk.reserve(guess);
    tcx.reserve(guess);
    tcy.reserve(guess);

    for (int ey = 0; ey < elems_y_; ++ey) {
        for (int ex = 0; ex < elems_x_; ++ex) {
            for (int ia = 0; ia < nloc; ++ia)
                for (int ib = 0; ib < nloc; ++ib) {
                    const Eigen::Index row = node_id(ex * q + ia, ey * q + ib);
                    for (int ja = 0; ja < nloc; ++ja)
                        for (int jb = 0; jb < nloc; ++jb) {
                            const Eigen::Index col = node_id(ex * q + ja, ey * q + jb);
                            const double mm = m1(ia, ja) * m1(ib, jb);
                            const double kk = (hy_ / hx_) * k1(ia, ja) * m1(ib, jb) +
                                              (hx_ / hy_) * m1(ia, ja) * k1(ib, jb);
                            const double cx = hy_ * c1(ia, ja) * m1(ib, jb);
                            const double cy = hx_ * m1(ia, ja) * c1(ib, jb);
                            tm.emplace_back(row, col, hx_ * hy_ * mm);
                            tk.emplace_back(row, col, kk);
                            tcx.emplace_back(row, col, cx);
                            tcy.emplace_back(row, col, cy);
                        }
                }
        }
    }
    const Eigen::Index n = node_count();
    mass_.resize(n, n);
    stiffness_.resize(n, n);
    conv_x_.resize(n, n);
    conv_y_.resize(n, n);
    mass_.setFromTriplets(tm.begin(), tm.end());
    stiffness_.setFromTriplets(tk.begin(), tk.end());
    conv_x_.setFromTriplets(tcx.begin(), tcx.end());
    conv_y_.setFromTriplets(tcy.begin(), tcy.end());

    for (int iy = 0; iy < nodes_y_; ++iy)
        for (int ix = 0; ix < nodes_x_; ++ix)
            if (!is_boundary(ix, iy)) free_nodes_.push_back(node_id(ix, iy));
}

} // namespace larb
