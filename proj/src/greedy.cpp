#include "larb/greedy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iostream>
#include <sstream>
#include <unordered_set>

#include "larb/galerkin.hpp"
#include "larb/ortho.hpp"
#include "larb/parallel.hpp"

namespace larb {

namespace {

std::string param_key(const Param& mu) {
    std::string s(std::size_t(mu.size()) * sizeof(double), '\0');
    std::memcpy(s.data(), mu.data(), s.size());
    return s;
}

} // namespace

LocalSet local_sample_set(const Param& mu, const Matrix& tensor_mu,
                          const std::vector<Param>& sample_points,
                          const std::vector<Matrix>& sample_tensors, int want_n) {
    const int k = int(sample_points.size());
    if (k == 0) throw std::invalid_argument("local_sample_set: empty sample set");
    std::vector<std::pair<double, int>> dist(k);
    for (int i = 0; i < k; ++i)
        dist[i] = {metric_distance(tensor_mu, mu, sample_tensors[i], sample_points[i]), i};
    std::sort(dist.begin(), dist.end()); // ties broken by insertion index

    LocalSet out;
    const int take = std::min(want_n, k);
    out.indices.reserve(take);
    out.dists.reserve(take);
    out.order.reserve(k);
    for (int i = 0; i < k; ++i) out.order.push_back(dist[i].second);
    for (int i = 0; i < take; ++i) {
        out.indices.push_back(dist[i].second);
        out.dists.push_back(dist[i].first);
    }
    out.radius = take > 0 ? dist[take - 1].first : 0.0;
    return out;
}

LocalSet local_sample_set(const Param& mu, const SampleSet& samples, int want_n,
                          const MetricModel& metric) {
    std::vector<Matrix> tensors(samples.points.size());
    for (std::size_t i = 0; i < samples.points.size(); ++i)
        tensors[i] = metric.tensor_at(samples.points[i]);
    return local_sample_set(mu, metric.tensor_at(mu), samples.points, tensors, want_n);
}

bool domain_of_influence_excludes(const Param& candidate, const Param& new_point,
                                  const MetricField& field) {
    const auto [tc, rc] = field.at(candidate);
    const auto [tn, rn] = field.at(new_point);
    const double d = metric_distance(tc, candidate, tn, new_point);
    return d <= rn || d <= rc;
}

int q_of_err(double err, double tol, int q_min, int q_max) {
    if (!(tol > 0.0 && tol < 1.0))
        throw std::invalid_argument("q_of_err: tol must lie in (0, 1)");
    if (!(err > 0.0)) throw std::invalid_argument("q_of_err: err must be positive");
    if (q_min < 0 || q_min > q_max)
        throw std::invalid_argument("q_of_err: need 0 <= q_min <= q_max");
    const double e = std::clamp(err, tol, 1.0);
    const double raw = double(q_max - q_min) / std::log(tol) * std::log(e) + double(q_min);
    const int q = int(std::ceil(raw));
    return std::clamp(q, q_min, q_max);
}

std::vector<int> enrichment_pass(const std::vector<Param>& train_points,
                                 const std::vector<double>& errors, const MetricField& field,
                                 const std::vector<Param>& existing_samples, double tol) {
    if (train_points.size() != errors.size())
        throw std::invalid_argument("enrichment_pass: errors/points size mismatch");

    std::unordered_set<std::string> taken;
    taken.reserve(existing_samples.size() * 2);
    for (const auto& s : existing_samples) taken.insert(param_key(s));

    std::vector<char> active(train_points.size(), 1);
    std::vector<int> added;

    // cache node data for the active points once; train points are field nodes
    std::vector<Matrix> tensors(train_points.size());
    std::vector<double> radii(train_points.size());
    for (std::size_t i = 0; i < train_points.size(); ++i) {
        auto [t, r] = field.at(train_points[i]);
        tensors[i] = std::move(t);
        radii[i] = r;
    }

    while (true) {
        int best = -1;
        for (std::size_t i = 0; i < train_points.size(); ++i)
            if (active[i] && (best < 0 || errors[i] > errors[best])) best = int(i);
        if (best < 0 || errors[best] <= tol) break;

        if (taken.count(param_key(train_points[best]))) {
            active[best] = 0; // already a sample; its cached error is stale
            continue;
        }
        added.push_back(best);
        taken.insert(param_key(train_points[best]));

        for (std::size_t i = 0; i < train_points.size(); ++i) {
            if (!active[i]) continue;
            const double d = metric_distance(tensors[i], train_points[i], tensors[best],
                                             train_points[best]);
            if (d <= radii[best] || d <= radii[i]) active[i] = 0;
        }
    }
    return added;
}

// ---------------------------------------------------------------------------

namespace {

using OrthoLocal = LocalOrtho;

class Engine {
public:
    Engine(const ProblemBackend& backend, GreedyOptions opts)
        : backend_(backend), opts_(std::move(opts)), domain_(backend.domain()),
          rng_(opts_.seed), metric_(MetricModel::identity(domain_.dim())) {
        ana_ = dynamic_cast<const AnalyticL2Backend*>(&backend);
        gal_ = dynamic_cast<const ConvectionDiffusionBackend*>(&backend);
        if (gal_) {
            affine_ = gal_->affine_terms();
            lifting_ = gal_->lifting_vector();
            a_red_.resize(affine_.q_a());
            f_red_.resize(affine_.q_f());
        }
        const int p = domain_.dim();
        delta_.resize(p);
        for (int i = 0; i < p; ++i) delta_[i] = opts_.delta_rel * domain_.extent(i);
        gram_.resize(0, 0);
    }

    GreedyResult run();
    GreedyResult run_classical(const TrainingSet& train, int count);

private:
    // --- sample registration -------------------------------------------------
    Eigen::VectorXd compute_truth(const Param& mu) const {
        return backend_.truth_solve(mu);
    }

    const Eigen::VectorXd& cached_truth(const Param& mu) const {
        auto it = truth_cache_.find(param_key(mu));
        if (it == truth_cache_.end())
            throw std::logic_error("internal: truth not prefetched");
        return it->second;
    }

    void prefetch_truths(const std::vector<Param>& pts) {
        if (!gal_) return; // analytic truths are cheap to evaluate in place
        std::vector<int> missing;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (!truth_cache_.count(param_key(pts[i]))) missing.push_back(int(i));
        if (missing.empty()) return;
        std::vector<Eigen::VectorXd> solved(missing.size());
        parallel_for(missing.size(),
                     [&](std::size_t i) { solved[i] = compute_truth(pts[missing[i]]); });
        for (std::size_t i = 0; i < missing.size(); ++i)
            truth_cache_.emplace(param_key(pts[missing[i]]), std::move(solved[i]));
    }

    void add_sample(const Param& mu) {
        Eigen::VectorXd snap;
        if (gal_) {
            auto it = truth_cache_.find(param_key(mu));
            snap = it != truth_cache_.end() ? it->second : compute_truth(mu);
        } else {
            snap = compute_truth(mu);
        }
        samples_.points.push_back(mu);
        Eigen::VectorXd basis = gal_ ? Eigen::VectorXd(snap - lifting_) : snap;
        samples_.snapshots.push_back(std::move(snap));
        if (ana_) factors_.push_back(ana_->factors(mu));

        const int k = samples_.size();
        gram_.conservativeResize(k, k);
        if (gal_) {
            const Eigen::VectorXd mass_b = gal_->fem().mass() * basis;
            for (int i = 0; i < k - 1; ++i) {
                const double v = basis_[i].dot(mass_b);
                gram_(k - 1, i) = v;
                gram_(i, k - 1) = v;
            }
            gram_(k - 1, k - 1) = basis.dot(mass_b);
            for (int q = 0; q < affine_.q_a(); ++q) {
                a_red_[q].conservativeResize(k, k);
                const Eigen::VectorXd ab = *affine_.a_blocks[q] * basis;
                const Eigen::VectorXd atb = affine_.a_blocks[q]->transpose() * basis;
                for (int i = 0; i < k - 1; ++i) {
                    a_red_[q](i, k - 1) = basis_[i].dot(ab);  // a_q(new, v_i)
                    a_red_[q](k - 1, i) = atb.dot(basis_[i]); // a_q(v_i, new)
                }
                a_red_[q](k - 1, k - 1) = basis.dot(ab);
                f_red_[q].conservativeResize(k);
                f_red_[q][k - 1] = affine_.f_blocks[q].dot(basis);
            }
        } else {
            for (int i = 0; i < k - 1; ++i) {
                const double v = ana_->inner_product(factors_[k - 1], factors_[i]);
                gram_(k - 1, i) = v;
                gram_(i, k - 1) = v;
            }
            gram_(k - 1, k - 1) =
                ana_->inner_product(factors_[k - 1], factors_[k - 1]);
        }
        basis_.push_back(std::move(basis));
        sample_tensors_.push_back(metric_.tensor_at(mu));
    }

    // --- error evaluation ----------------------------------------------------
    LocalSet local_set_at(const Param& mu, const Matrix& tensor) const {
        return local_sample_set(mu, tensor, samples_.points, sample_tensors_,
                                std::min(opts_.basis_size, samples_.size()));
    }

    /// zeta-basis coefficients of the reduced approximation at mu over a
    /// fixed local basis (projection for analytic, Galerkin solve for PDE).
    Eigen::VectorXd reduced_coeffs(const Param& mu, const OrthoLocal& ol,
                                   const std::vector<Matrix>* aq_hat,
                                   const std::vector<Eigen::VectorXd>* fq_hat) const {
        const int m = int(ol.ids.size());
        if (m == 0) return Eigen::VectorXd();
        if (!gal_) {
            const auto f = ana_->factors(mu);
            Eigen::VectorXd b(m);
            for (int i = 0; i < m; ++i)
                b[i] = ana_->inner_product(f, factors_[ol.ids[i]]);
            return ol.gamma * b;
        }
        const Eigen::Vector3d g = gal_->theta(mu);
        Matrix reduced = Matrix::Zero(m, m);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
        for (int q = 0; q < affine_.q_a(); ++q) {
            reduced += g[q] * (*aq_hat)[q];
            rhs += g[q] * (*fq_hat)[q];
        }
        return reduced.partialPivLu().solve(rhs);
    }

    /// Reduced blocks in the orthonormal local basis, precomputed once per
    /// local space so stencil evaluations stay O(N^2).
    void reduced_blocks(const OrthoLocal& ol, std::vector<Matrix>& aq_hat,
                        std::vector<Eigen::VectorXd>& fq_hat) const {
        const int m = int(ol.ids.size());
        aq_hat.assign(affine_.q_a(), Matrix());
        fq_hat.assign(affine_.q_f(), Eigen::VectorXd());
        for (int q = 0; q < affine_.q_a(); ++q) {
            Matrix sub(m, m);
            Eigen::VectorXd fsub(m);
            for (int i = 0; i < m; ++i) {
                fsub[i] = f_red_[q][ol.ids[i]];
                for (int j = 0; j < m; ++j) sub(i, j) = a_red_[q](ol.ids[i], ol.ids[j]);
            }
            aq_hat[q] = ol.gamma * sub * ol.gamma.transpose();
            fq_hat[q] = ol.gamma * fsub;
        }
    }

    double error_at(const Param& mu, const OrthoLocal& ol) const {
        const int m = int(ol.ids.size());
        Eigen::VectorXd target =
            gal_ ? Eigen::VectorXd(cached_truth(mu) - lifting_) : compute_truth(mu);
        if (m == 0) return backend_.error_norm_of(target);
        Eigen::VectorXd zeta;
        if (gal_) {
            std::vector<Matrix> aq_hat;
            std::vector<Eigen::VectorXd> fq_hat;
            reduced_blocks(ol, aq_hat, fq_hat);
            zeta = reduced_coeffs(mu, ol, &aq_hat, &fq_hat);
        } else {
            zeta = reduced_coeffs(mu, ol, nullptr, nullptr);
        }
        const Eigen::VectorXd coeffs = ol.gamma.transpose() * zeta;
        for (int i = 0; i < m; ++i) target -= coeffs[i] * basis_[ol.ids[i]];
        return backend_.error_norm_of(target);
    }

    // --- sweeps ---------------------------------------------------------------
    struct SweepData {
        std::vector<double> errors;
        std::vector<LocalSet> locals;
        std::vector<OrthoLocal> orthos;
        double max_err = 0.0;
        int argmax = -1;
    };

    SweepData error_sweep(bool classical) {
        const std::size_t q = train_.points.size();
        SweepData sw;
        sw.errors.assign(q, 0.0);
        sw.locals.resize(q);
        sw.orthos.resize(q);
        prefetch_truths(train_.points);

        std::vector<Matrix> train_tensors(q);
        parallel_for(q, [&](std::size_t t) {
            train_tensors[t] = metric_.tensor_at(train_.points[t]);
        });

        parallel_for(q, [&](std::size_t t) {
            if (classical) {
                LocalSet ls;
                ls.indices.resize(samples_.size());
                for (int i = 0; i < samples_.size(); ++i) ls.indices[i] = i;
                ls.order = ls.indices;
                sw.locals[t] = std::move(ls);
            } else {
                sw.locals[t] = local_set_at(train_.points[t], train_tensors[t]);
            }
            sw.orthos[t] = orthonormalize_local(gram_, sw.locals[t].indices,
                                                sw.locals[t].order);
            sw.errors[t] = error_at(train_.points[t], sw.orthos[t]);
        });

        for (std::size_t t = 0; t < q; ++t)
            if (sw.argmax < 0 || sw.errors[t] > sw.errors[std::size_t(sw.argmax)])
                sw.argmax = int(t);
        sw.max_err = sw.argmax >= 0 ? sw.errors[std::size_t(sw.argmax)] : 0.0;

        ++iteration_;
        total_evals_ += std::int64_t(q);
        history_.push_back({iteration_, samples_.size(), sw.max_err, std::int64_t(q),
                            int(q)});
        if (opts_.verbose)
            std::cerr << "[larb] iter " << iteration_ << " K=" << samples_.size()
                      << " max_err=" << sw.max_err << " train=" << q << "\n";
        return sw;
    }

    /// Hessian/metric refresh at all training points, then radii from the
    /// updated tensors. Reuses the error sweep's local bases.
    void update_metric(const SweepData& sw) {
        const std::size_t q = train_.points.size();
        std::vector<MetricNode> nodes(q);

        if (opts_.anisotropic) {
            parallel_for(q, [&](std::size_t t) {
                const OrthoLocal& ol = sw.orthos[t];
                std::vector<Matrix> aq_hat;
                std::vector<Eigen::VectorXd> fq_hat;
                if (gal_) reduced_blocks(ol, aq_hat, fq_hat);
                auto coeffs = [&](const Param& s) {
                    return reduced_coeffs(s, ol, gal_ ? &aq_hat : nullptr,
                                          gal_ ? &fq_hat : nullptr);
                };
                const Matrix h = estimate_hessian(coeffs, train_.points[t], delta_, domain_);
                nodes[t] = {train_.points[t], metric_from_hessian(h), 0.0};
            });
        } else {
            const int p = domain_.dim();
            for (std::size_t t = 0; t < q; ++t)
                nodes[t] = {train_.points[t], Matrix::Identity(p, p), 0.0};
        }

        // tensors at samples under the refreshed field, then ball radii
        MetricField interim(nodes);
        MetricModel interim_model = MetricModel::from_field(std::move(interim));
        parallel_for(samples_.points.size(), [&](std::size_t i) {
            sample_tensors_[i] = interim_model.tensor_at(samples_.points[i]);
        });
        std::vector<double> radii(q);
        parallel_for(q, [&](std::size_t t) {
            radii[t] = local_set_at(train_.points[t], nodes[t].tensor).radius;
        });
        for (std::size_t t = 0; t < q; ++t)
            nodes[t].radius = std::max(radii[t], 1e-300);
        metric_ = MetricModel::from_field(MetricField(std::move(nodes)));
    }

    void refresh_radii() {
        if (!metric_.has_field()) return;
        std::vector<MetricNode> nodes = metric_.field().nodes();
        parallel_for(samples_.points.size(), [&](std::size_t i) {
            sample_tensors_[i] = metric_.tensor_at(samples_.points[i]);
        });
        parallel_for(nodes.size(), [&](std::size_t t) {
            nodes[t].radius =
                std::max(local_set_at(nodes[t].point, nodes[t].tensor).radius, 1e-300);
        });
        metric_ = MetricModel::from_field(MetricField(std::move(nodes)));
    }

    int pick_first_index() {
        if (opts_.random_first_point) {
            std::uniform_int_distribution<std::size_t> pick(0, train_.points.size() - 1);
            return int(pick(rng_));
        }
        const Param c = domain_.centroid();
        int best = 0;
        double best_d = (train_.points[0] - c).norm();
        for (std::size_t i = 1; i < train_.points.size(); ++i) {
            const double d = (train_.points[i] - c).norm();
            if (d < best_d) {
                best_d = d;
                best = int(i);
            }
        }
        return best;
    }

    TrainingSet lattice_training_set() const {
        const int p = domain_.dim();
        if (int(opts_.lattice.size()) != p)
            throw std::invalid_argument("offline_drive: lattice dims != parameter dims");
        std::size_t total = 1;
        for (int n : opts_.lattice) {
            if (n < 2) throw std::invalid_argument("offline_drive: lattice n >= 2 required");
            total *= std::size_t(n);
        }
        TrainingSet ts;
        ts.points.reserve(total);
        for (std::size_t flat = 0; flat < total; ++flat) {
            Param mu(p);
            std::size_t rem = flat;
            for (int i = 0; i < p; ++i) {
                const int n = opts_.lattice[i];
                const int idx = int(rem % std::size_t(n));
                rem /= std::size_t(n);
                mu[i] = domain_.lower()[i] + domain_.extent(i) * double(idx) / double(n - 1);
            }
            ts.points.push_back(std::move(mu));
        }
        return ts;
    }

    bool bootstrap(int count, GreedyResult& res) {
        const int first = pick_first_index();
        add_sample(train_.points[std::size_t(first)]);
        taken_.insert(param_key(train_.points[std::size_t(first)]));
        while (samples_.size() < count) {
            SweepData sw = error_sweep(/*classical=*/true);
            last_max_err_ = sw.max_err;
            if (sw.max_err <= opts_.tol) {
                res.converged = true;
                return true; // tolerance met during the bootstrap
            }
            if (taken_.count(param_key(train_.points[std::size_t(sw.argmax)]))) {
                res.diagnostic = "bootstrap: argmax already selected and still above tol";
                return true;
            }
            add_sample(train_.points[std::size_t(sw.argmax)]);
            taken_.insert(param_key(train_.points[std::size_t(sw.argmax)]));
        }
        return false;
    }

    GreedyResult finalize(bool converged, std::string diag,
                          const std::vector<double>& last_errors) {
        refresh_radii();
        GreedyResult res;
        res.samples = samples_;
        res.train = train_;
        res.metric = metric_;
        res.history = history_;
        res.final_errors = last_errors;
        res.total_eta_evals = total_evals_;
        res.final_max_err = last_max_err_;
        res.converged = converged;
        res.diagnostic = std::move(diag);
        res.gram = gram_;
        res.a_reduced = a_red_;
        res.f_reduced = f_red_;
        return res;
    }

    const ProblemBackend& backend_;
    const AnalyticL2Backend* ana_ = nullptr;
    const ConvectionDiffusionBackend* gal_ = nullptr;
    GreedyOptions opts_;
    const ParameterDomain& domain_;
    std::mt19937_64 rng_;

    AffineForms affine_;
    Eigen::VectorXd lifting_;
    Eigen::VectorXd delta_;

    SampleSet samples_;
    std::vector<Eigen::VectorXd> basis_;
    std::vector<AnalyticL2Backend::Factors> factors_;
    std::vector<Matrix> sample_tensors_;
    Matrix gram_;
    std::vector<Matrix> a_red_;
    std::vector<Eigen::VectorXd> f_red_;

    TrainingSet train_;
    MetricModel metric_;
    std::unordered_map<std::string, Eigen::VectorXd> truth_cache_;
    std::unordered_set<std::string> taken_;

    std::vector<IterationRecord> history_;
    std::int64_t total_evals_ = 0;
    int iteration_ = 0;
    double last_max_err_ = 0.0;
};

GreedyResult Engine::run_classical(const TrainingSet& train, int count) {
    train_ = train;
    GreedyResult res;
    bootstrap(count, res);
    return finalize(res.converged, res.diagnostic, {});
}

GreedyResult Engine::run() {
    // initial training set
    if (opts_.adaptive_train) {
        if (opts_.q_min < (1 << domain_.dim()) || opts_.q_min > opts_.q_max)
            throw std::invalid_argument("offline_drive: invalid adaptive bounds");
        train_ = generate_training_set(metric_, opts_.q_min, domain_, rng_,
                                       opts_.train_gen);
    } else {
        train_ = lattice_training_set();
    }

    GreedyResult early;
    if (bootstrap(opts_.basis_size + 1, early))
        return finalize(early.converged, early.diagnostic, {});

    // stage 2: local error sweeps, metric refresh, enrichment, regeneration
    std::vector<double> recent_errs;
    int zero_addition_streak = 0;
    for (int outer = 0; outer < opts_.max_outer_iterations; ++outer) {
        SweepData sw = error_sweep(/*classical=*/false);
        last_max_err_ = sw.max_err;
        if (sw.max_err <= opts_.tol)
            return finalize(true, "", sw.errors);

        // stagnation guard: the error can hover (even rise) while the greedy
        // grinds through an under-resolved region, so only a window with no
        // error progress and no snapshot additions counts as stagnation
        recent_errs.push_back(sw.max_err);

        update_metric(sw);

        const std::vector<int> picked = enrichment_pass(
            train_.points, sw.errors, metric_.field(), samples_.points, opts_.tol);
        for (int idx : picked) {
            add_sample(train_.points[std::size_t(idx)]);
            taken_.insert(param_key(train_.points[std::size_t(idx)]));
        }
        const bool no_err_progress =
            recent_errs.size() >= 4 &&
            !(recent_errs[recent_errs.size() - 4] -
                  *std::min_element(recent_errs.end() - 3, recent_errs.end()) >
              1e-12 * recent_errs[recent_errs.size() - 4]);
        zero_addition_streak = picked.empty() ? zero_addition_streak + 1 : 0;
        if (zero_addition_streak >= 3 && no_err_progress)
            return finalize(false,
                            "stagnation: no error decrease and no additions over three "
                            "iterations",
                            sw.errors);
        if (samples_.size() > opts_.max_snapshots)
            return finalize(false, "sample cap exceeded before reaching tolerance",
                            sw.errors);

        if (opts_.adaptive_train) {
            const int q = q_of_err(sw.max_err, opts_.tol, opts_.q_min, opts_.q_max);
            train_ = generate_training_set(metric_, q, domain_, rng_, opts_.train_gen);
            train_.generation = outer + 1;
        }
    }
    return finalize(false, "outer iteration cap exceeded", {});
}

} // namespace

GreedyResult offline_drive(const ProblemBackend& backend, const GreedyOptions& opts) {
    Engine e(backend, opts);
    return e.run();
}

GreedyResult classical_greedy(const ProblemBackend& backend, const TrainingSet& train,
                              int count, double tol, std::uint64_t seed,
                              bool random_first_point) {
    if (count < 1) throw std::invalid_argument("classical_greedy: count >= 1 required");
    if (train.points.empty())
        throw std::invalid_argument("classical_greedy: empty training set");
    GreedyOptions opts;
    opts.basis_size = count;
    opts.tol = tol;
    opts.seed = seed;
    opts.random_first_point = random_first_point;
    Engine e(backend, opts);
    return e.run_classical(train, count);
}

} // namespace larb
