#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <chrono>
#include <cstdio>
#include <unordered_set>

#include "larb/greedy.hpp"
#include "larb/parallel.hpp"

namespace larb {

namespace {

// flattened symmetric 2x2 tensor with its anchor point, for the hot loops
struct Flat2 {
    double x, y, a, b, c;
};

double flat2_dist(const Flat2& u, const Flat2& v) {
    const double dx = v.x - u.x, dy = v.y - u.y;
    const double qu = u.a * dx * dx + 2.0 * u.b * dx * dy + u.c * dy * dy;
    const double qv = v.a * dx * dx + 2.0 * v.b * dx * dy + v.c * dy * dy;
    return 0.5 * std::sqrt(std::max(qu, 0.0)) + 0.5 * std::sqrt(std::max(qv, 0.0));
}

double flat2_max_eig(const Flat2& t) {
    const double half = 0.5 * (t.a + t.c);
    const double rad = std::sqrt(0.25 * (t.a - t.c) * (t.a - t.c) + t.b * t.b);
    return half + rad;
}

std::string key_of(const Param& mu) {
    std::string s(std::size_t(mu.size()) * sizeof(double), '\0');
    std::memcpy(s.data(), mu.data(), s.size());
    return s;
}

} // namespace

TrainingSet generate_training_set(const MetricModel& metric, int q_target,
                                  const ParameterDomain& domain, std::mt19937_64& rng,
                                  const TrainingGenOptions& opts) {
    const int p = domain.dim();
    const auto corners = domain.corners();
    const int n_corners = int(corners.size());
    if (q_target < n_corners)
        throw std::invalid_argument("generate_training_set: Q below the corner count");

    TrainingSet ts;
    ts.points = corners;
    if (q_target == n_corners) return ts;

    // dense uniform candidate pool; the ball-scaled tensor M(mu)/r(mu)^2 is
    // cached per point
    const std::size_t pool_n = std::size_t(opts.pool_factor) * std::size_t(q_target);
    std::vector<Param> pool(pool_n);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < pool_n; ++i) {
        Param mu(p);
        for (int d = 0; d < p; ++d)
            mu[d] = domain.lower()[d] + domain.extent(d) * unit(rng);
        pool[i] = std::move(mu);
    }

    auto scaled_tensor = [&](const Param& mu) {
        auto [m, r] = metric.tensor_radius_at(mu);
        const double rr = std::max(r, 1e-150);
        return Matrix((m / (rr * rr)).eval());
    };

    if (p == 2) {
        auto tick = std::chrono::steady_clock::now();
        auto lap = [&tick](const char* name) {
            if (!std::getenv("LARB_PROFILE_GEN")) return;
            auto now = std::chrono::steady_clock::now();
            std::fprintf(stderr, "[gen] %s %.0f ms\n", name,
                         std::chrono::duration<double, std::milli>(now - tick).count());
            tick = now;
        };
        std::vector<Flat2> pool_flat(pool_n);
        parallel_for(pool_n, [&](std::size_t i) {
            const Matrix t = scaled_tensor(pool[i]);
            pool_flat[i] = {pool[i][0], pool[i][1], t(0, 0), t(0, 1), t(1, 1)};
        });

        lap("pool tensors");
        // floor the equidistribution tensor so flat directions cannot collapse
        // the sampling; the field itself stays untouched
        double lam_max = 0.0;
        for (const auto& f : pool_flat) lam_max = std::max(lam_max, flat2_max_eig(f));
        const double floor = lam_max > 0.0 ? 1e-6 * lam_max : 1.0;
        for (auto& f : pool_flat) {
            f.a += floor;
            f.c += floor;
        }

        std::vector<Flat2> sel_flat;
        sel_flat.reserve(std::size_t(q_target));
        for (const auto& c : corners) {
            const Matrix t = scaled_tensor(c);
            sel_flat.push_back({c[0], c[1], t(0, 0) + floor, t(0, 1), t(1, 1) + floor});
        }

        std::vector<double> mind(pool_n);
        parallel_for(pool_n, [&](std::size_t i) {
            double m = flat2_dist(pool_flat[i], sel_flat[0]);
            for (int cidx = 1; cidx < n_corners; ++cidx)
                m = std::min(m, flat2_dist(pool_flat[i], sel_flat[std::size_t(cidx)]));
            mind[i] = m;
        });

        // farthest-point insertion
        while (int(sel_flat.size()) < q_target) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < pool_n; ++i)
                if (mind[i] > mind[best]) best = i;
            if (!(mind[best] > 0.0)) {
                // pool exhausted of distinct points (tiny domains); give up early
                break;
            }
            const Flat2 nf = pool_flat[best];
            sel_flat.push_back(nf);
            mind[best] = -1.0;
            parallel_for(pool_n, [&](std::size_t i) {
                if (mind[i] < 0.0) return;
                mind[i] = std::min(mind[i], flat2_dist(pool_flat[i], nf));
            });
        }

        lap("fps");
        // Lloyd relaxation on a pool subsample; corners stay pinned
        const std::size_t lloyd_n =
            std::min(pool_n, std::size_t(opts.lloyd_pool_factor) * std::size_t(q_target));
        std::vector<int> assign(lloyd_n);
        for (int sweep = 0; sweep < opts.lloyd_sweeps; ++sweep) {
            parallel_for(lloyd_n, [&](std::size_t i) {
                int bestj = 0;
                double bestd = flat2_dist(pool_flat[i], sel_flat[0]);
                for (std::size_t j = 1; j < sel_flat.size(); ++j) {
                    const double d = flat2_dist(pool_flat[i], sel_flat[j]);
                    if (d < bestd) {
                        bestd = d;
                        bestj = int(j);
                    }
                }
                assign[i] = bestj;
            });
            std::vector<double> sx(sel_flat.size(), 0.0), sy(sel_flat.size(), 0.0);
            std::vector<int> cnt(sel_flat.size(), 0);
            for (std::size_t i = 0; i < lloyd_n; ++i) {
                sx[std::size_t(assign[i])] += pool_flat[i].x;
                sy[std::size_t(assign[i])] += pool_flat[i].y;
                ++cnt[std::size_t(assign[i])];
            }
            parallel_for(sel_flat.size(), [&](std::size_t j) {
                if (int(j) < n_corners || cnt[j] == 0) return;
                Param mu(2);
                mu[0] = std::clamp(sx[j] / cnt[j], domain.lower()[0], domain.upper()[0]);
                mu[1] = std::clamp(sy[j] / cnt[j], domain.lower()[1], domain.upper()[1]);
                const Matrix t = scaled_tensor(mu);
                sel_flat[j] = {mu[0], mu[1], t(0, 0) + floor, t(0, 1), t(1, 1) + floor};
            });
        }

        lap("lloyd");
        ts.points.clear();
        ts.points.reserve(sel_flat.size());
        std::unordered_set<std::string> seen;
        for (const auto& f : sel_flat) {
            Param mu(2);
            mu[0] = f.x;
            mu[1] = f.y;
            if (seen.insert(key_of(mu)).second) ts.points.push_back(std::move(mu));
        }
        // duplicates after relaxation are rare; replace them with farthest picks
        while (int(ts.points.size()) < q_target) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < pool_n; ++i)
                if (mind[i] > mind[best]) best = i;
            if (!(mind[best] > 0.0)) break;
            mind[best] = -1.0;
            if (seen.insert(key_of(pool[best])).second) ts.points.push_back(pool[best]);
        }
        return ts;
    }

    // generic dimension: same scheme over full tensors
    std::vector<Matrix> pool_t(pool_n);
    parallel_for(pool_n, [&](std::size_t i) { pool_t[i] = scaled_tensor(pool[i]); });
    double lam_max = 0.0;
    for (const auto& t : pool_t)
        lam_max = std::max(lam_max,
                           Eigen::SelfAdjointEigenSolver<Matrix>(t).eigenvalues().maxCoeff());
    const double floor = lam_max > 0.0 ? 1e-6 * lam_max : 1.0;
    for (auto& t : pool_t) t += floor * Matrix::Identity(p, p);

    std::vector<Param> sel = corners;
    std::vector<Matrix> sel_t;
    for (const auto& c : corners)
        sel_t.push_back(scaled_tensor(c) + floor * Matrix::Identity(p, p));

    std::vector<double> mind(pool_n);
    parallel_for(pool_n, [&](std::size_t i) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < sel.size(); ++j)
            m = std::min(m, metric_distance(pool_t[i], pool[i], sel_t[j], sel[j]));
        mind[i] = m;
    });
    while (int(sel.size()) < q_target) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < pool_n; ++i)
            if (mind[i] > mind[best]) best = i;
        if (!(mind[best] > 0.0)) break;
        sel.push_back(pool[best]);
        sel_t.push_back(pool_t[best]);
        mind[best] = -1.0;
        const Param& np = sel.back();
        const Matrix& nt = sel_t.back();
        parallel_for(pool_n, [&](std::size_t i) {
            if (mind[i] < 0.0) return;
            mind[i] = std::min(mind[i], metric_distance(pool_t[i], pool[i], nt, np));
        });
    }
    ts.points = std::move(sel);
    return ts;
}

TrainingSet generate_training_set(const MetricField& field, int q_target,
                                  const ParameterDomain& domain, std::mt19937_64& rng,
                                  const TrainingGenOptions& opts) {
    if (field.empty())
        throw std::invalid_argument("generate_training_set: empty metric field");
    return generate_training_set(MetricModel::from_field(field), q_target, domain, rng,
                                 opts);
}

} // namespace larb
