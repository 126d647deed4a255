#include "larb/metric.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_map>

namespace larb {

Matrix estimate_hessian(const std::function<Eigen::VectorXd(const Param&)>& coeffs,
                        const Param& mu, const Eigen::VectorXd& delta,
                        const ParameterDomain& domain) {
    const int p = domain.dim();
    if (mu.size() != p || delta.size() != p)
        throw std::invalid_argument("estimate_hessian: dimension mismatch");
    for (int i = 0; i < p; ++i) {
        if (!(delta[i] > 0.0))
            throw std::invalid_argument("estimate_hessian: delta must be positive");
        if (2.0 * delta[i] > domain.extent(i))
            throw std::invalid_argument("estimate_hessian: stencil wider than domain");
    }
    if (!domain.contains(mu, 1e-12 * domain.extent(0)))
        throw std::invalid_argument("estimate_hessian: mu outside domain");

    // shift the stencil center inward so all stencil points stay in P
    Param c = mu;
    for (int i = 0; i < p; ++i)
        c[i] = std::min(std::max(c[i], domain.lower()[i] + delta[i]),
                        domain.upper()[i] - delta[i]);

    const Eigen::VectorXd w = coeffs(c);

    std::vector<Eigen::VectorXd> plus(p), minus(p);
    for (int i = 0; i < p; ++i) {
        Param q = c;
        q[i] = c[i] + delta[i];
        plus[i] = coeffs(q);
        q[i] = c[i] - delta[i];
        minus[i] = coeffs(q);
    }

    Matrix h = Matrix::Zero(p, p);
    for (int i = 0; i < p; ++i) {
        const Eigen::VectorXd dii = (plus[i] - 2.0 * w + minus[i]) / (delta[i] * delta[i]);
        h(i, i) = w.dot(dii);
        for (int j = i + 1; j < p; ++j) {
            Param q = c;
            q[i] = c[i] + delta[i];
            q[j] = c[j] + delta[j];
            Eigen::VectorXd pp = coeffs(q);
            q[j] = c[j] - delta[j];
            Eigen::VectorXd pm = coeffs(q);
            q[i] = c[i] - delta[i];
            Eigen::VectorXd mm = coeffs(q);
            q[j] = c[j] + delta[j];
            Eigen::VectorXd mp = coeffs(q);
            const Eigen::VectorXd dij = (pp - mp - pm + mm) / (4.0 * delta[i] * delta[j]);
            h(i, j) = w.dot(dij);
            h(j, i) = h(i, j);
        }
    }
    return 0.5 * (h + h.transpose());
}

Matrix clamp_psd(const Matrix& m) {
    if (m.rows() == 2 && m.cols() == 2) {
        // closed-form symmetric 2x2 eigendecomposition; this sits on the hot
        // path of every interpolated metric query
        const double a = m(0, 0), b = 0.5 * (m(0, 1) + m(1, 0)), c = m(1, 1);
        const double half = 0.5 * (a + c);
        const double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
        const double l1 = half + rad, l2 = half - rad;
        if (l2 >= 0.0) {
            Matrix out(2, 2);
            out << a, b, b, c;
            return out;
        }
        // eigenvector for l1; the complementary projector carries l2 -> 0
        double vx, vy;
        if (std::abs(b) > 1e-300) {
            vx = l1 - c;
            vy = b;
        } else {
            vx = a >= c ? 1.0 : 0.0;
            vy = a >= c ? 0.0 : 1.0;
        }
        const double nrm2 = vx * vx + vy * vy;
        Matrix out(2, 2);
        if (nrm2 <= 0.0 || l1 <= 0.0) {
            out.setZero();
            return out;
        }
        const double s = std::max(l1, 0.0) / nrm2;
        out << s * vx * vx, s * vx * vy, s * vx * vy, s * vy * vy;
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    Matrix out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

Matrix metric_from_hessian(const Matrix& hessian) {
    if (hessian.rows() != hessian.cols())
        throw std::invalid_argument("metric_from_hessian: matrix must be square");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (hessian + hessian.transpose()));
    Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
    Matrix m = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (m + m.transpose());
}

namespace {

double quad_form(const Matrix& m, const Param& d) {
    const double q = d.dot(m * d);
    if (q < 0.0) {
        const double scale = m.cwiseAbs().maxCoeff() * d.squaredNorm();
        if (q < -1e-10 * std::max(scale, 1e-300))
            throw std::logic_error("metric_distance: tensor not positive semi-definite");
        return 0.0;
    }
    return q;
}

} // namespace

double metric_distance(const Matrix& m1, const Param& mu1,
                       const Matrix& m2, const Param& mu2) {
    const Param d = mu2 - mu1;
    return 0.5 * std::sqrt(quad_form(m1, d)) + 0.5 * std::sqrt(quad_form(m2, d));
}

std::size_t MetricField::CoordHash::operator()(const std::vector<double>& v) const {
    std::size_t h = 1469598103934665603ull;
    for (double x : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof bits);
        h ^= bits;
        h *= 1099511628211ull;
    }
    return h;
}

MetricField::MetricField(std::vector<MetricNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) return;
    dim_ = static_cast<int>(nodes_[0].point.size());
    exact_.reserve(nodes_.size() * 2);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        std::vector<double> key(nodes_[i].point.data(), nodes_[i].point.data() + dim_);
        auto [it, fresh] = exact_.emplace(std::move(key), int(i));
        if (!fresh) throw std::invalid_argument("MetricField: duplicate node points");
    }
    if (dim_ != 2 || nodes_.size() < 3) return;

    // structured lattice? exact tensor-grid check
    std::vector<double> xs, ys;
    xs.reserve(nodes_.size());
    ys.reserve(nodes_.size());
    for (const auto& nd : nodes_) {
        xs.push_back(nd.point[0]);
        ys.push_back(nd.point[1]);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    if (xs.size() >= 2 && ys.size() >= 2 && xs.size() * ys.size() == nodes_.size()) {
        lat_id_.assign(nodes_.size(), -1);
        bool ok = true;
        for (std::size_t i = 0; i < nodes_.size() && ok; ++i) {
            auto ix = std::lower_bound(xs.begin(), xs.end(), nodes_[i].point[0]) - xs.begin();
            auto iy = std::lower_bound(ys.begin(), ys.end(), nodes_[i].point[1]) - ys.begin();
            std::size_t slot = std::size_t(iy) * xs.size() + std::size_t(ix);
            if (lat_id_[slot] != -1)
                ok = false;
            else
                lat_id_[slot] = int(i);
        }
        if (ok) {
            lat_x_ = std::move(xs);
            lat_y_ = std::move(ys);
            return;
        }
        lat_id_.clear();
    }

    std::vector<std::array<double, 2>> pts(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        pts[i] = {nodes_[i].point[0], nodes_[i].point[1]};
    if (auto tri = Delaunay2D::build(pts))
        tri_ = std::make_shared<const Delaunay2D>(std::move(*tri));
    // else: IDW fallback handles all queries
}

std::pair<Matrix, double> MetricField::blend(const int* ids, const double* w, int count) const {
    Matrix m = Matrix::Zero(dim_, dim_);
    double r = 0.0;
    for (int k = 0; k < count; ++k) {
        m += w[k] * nodes_[ids[k]].tensor;
        r += w[k] * nodes_[ids[k]].radius;
    }
    return {clamp_psd(m), std::max(r, 0.0)};
}

std::pair<Matrix, double> MetricField::idw_at(const Param& mu) const {
    const int take = std::min<int>(2 * dim_, int(nodes_.size()));
    std::vector<std::pair<double, int>> dist(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        dist[i] = {(nodes_[i].point - mu).norm(), int(i)};
    std::partial_sort(dist.begin(), dist.begin() + take, dist.end());
    if (dist[0].first == 0.0) {
        const MetricNode& nd = nodes_[dist[0].second];
        return {nd.tensor, nd.radius};
    }
    double wsum = 0.0;
    std::vector<int> ids(take);
    std::vector<double> w(take);
    for (int k = 0; k < take; ++k) {
        ids[k] = dist[k].second;
        w[k] = 1.0 / (dist[k].first * dist[k].first);
        wsum += w[k];
    }
    for (double& x : w) x /= wsum;
    return blend(ids.data(), w.data(), take);
}

std::pair<Matrix, double> MetricField::at(const Param& mu) const {
    if (nodes_.empty())
        throw std::logic_error("MetricField::at: empty field");
    if (mu.size() != dim_)
        throw std::invalid_argument("MetricField::at: dimension mismatch");

    { // stored values, exactly, at a node
        std::vector<double> key(mu.data(), mu.data() + dim_);
        auto it = exact_.find(key);
        if (it != exact_.end()) {
            const MetricNode& nd = nodes_[it->second];
            return {nd.tensor, nd.radius};
        }
    }
    if (nodes_.size() == 1) {
        const MetricNode& nd = nodes_[0];
        return {nd.tensor, nd.radius};
    }

    if (!lat_x_.empty()) {
        const double x = mu[0], y = mu[1];
        if (x >= lat_x_.front() && x <= lat_x_.back() && y >= lat_y_.front() &&
            y <= lat_y_.back()) {
            auto cell = [](const std::vector<double>& v, double q) {
                auto it = std::upper_bound(v.begin(), v.end(), q);
                std::size_t i = it - v.begin();
                if (i == 0) return std::size_t(0);
                if (i >= v.size()) return v.size() - 2;
                return i - 1;
            };
            const std::size_t cx = cell(lat_x_, x), cy = cell(lat_y_, y);
            const double s = (x - lat_x_[cx]) / (lat_x_[cx + 1] - lat_x_[cx]);
            const double t = (y - lat_y_[cy]) / (lat_y_[cy + 1] - lat_y_[cy]);
            const int v00 = lat_id_[cy * lat_x_.size() + cx];
            const int v10 = lat_id_[cy * lat_x_.size() + cx + 1];
            const int v01 = lat_id_[(cy + 1) * lat_x_.size() + cx];
            const int v11 = lat_id_[(cy + 1) * lat_x_.size() + cx + 1];
            // cell split along the (v00, v11) diagonal
            if (t <= s) {
                const int ids[3] = {v00, v10, v11};
                const double w[3] = {1.0 - s, s - t, t};
                return blend(ids, w, 3);
            }
            const int ids[3] = {v00, v11, v01};
            const double w[3] = {1.0 - t, s, t - s};
            return blend(ids, w, 3);
        }
        return idw_at(mu);
    }

    if (tri_) {
        if (auto hit = tri_->locate(mu[0], mu[1])) {
            int ids[3] = {hit->vertex[0], hit->vertex[1], hit->vertex[2]};
            double w[3] = {hit->weight[0], hit->weight[1], hit->weight[2]};
            // snap tiny negative barycentric weights
            double sum = 0.0;
            for (double& x : w) {
                x = std::max(x, 0.0);
                sum += x;
            }
            for (double& x : w) x /= sum;
            return blend(ids, w, 3);
        }
    }
    return idw_at(mu);
}

} // namespace larb
