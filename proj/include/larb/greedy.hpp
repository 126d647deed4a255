#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "larb/backend.hpp"
#include "larb/metric.hpp"
#include "larb/params.hpp"

namespace larb {

/// Ordered set of selected sample parameters with their truth snapshots.
struct SampleSet {
    std::vector<Param> points;
    std::vector<Eigen::VectorXd> snapshots;
    int size() const { return int(points.size()); }
};

struct TrainingSet {
    std::vector<Param> points;
    int generation = 0;
    int size() const { return int(points.size()); }
};

/// Either the default Euclidean metric or an interpolated tensor field.
class MetricModel {
public:
    static MetricModel identity(int dim) {
        MetricModel m;
        m.dim_ = dim;
        return m;
    }
    static MetricModel from_field(MetricField field) {
        MetricModel m;
        m.dim_ = field.empty() ? 0 : int(field.nodes()[0].point.size());
        m.field_ = std::move(field);
        return m;
    }

    bool has_field() const { return field_.has_value(); }
    const MetricField& field() const { return *field_; }
    int dim() const { return dim_; }

    Matrix tensor_at(const Param& mu) const {
        if (!field_) return Matrix::Identity(mu.size(), mu.size());
        return field_->at(mu).first;
    }
    std::pair<Matrix, double> tensor_radius_at(const Param& mu) const {
        if (!field_) return {Matrix::Identity(mu.size(), mu.size()), 1.0};
        return field_->at(mu);
    }

private:
    int dim_ = 0;
    std::optional<MetricField> field_;
};

/// N nearest sample points under the metric, sorted by (distance, insertion
/// index); radius is the distance to the last kept point. `order` holds the
/// full sorted candidate sequence so near-dependent snapshots can be replaced
/// by the next-nearest one.
struct LocalSet {
    std::vector<int> indices;
    std::vector<double> dists;
    double radius = 0.0;
    std::vector<int> order;
};

LocalSet local_sample_set(const Param& mu, const Matrix& tensor_mu,
                          const std::vector<Param>& sample_points,
                          const std::vector<Matrix>& sample_tensors, int want_n);

/// Convenience overload evaluating tensors through the metric model.
LocalSet local_sample_set(const Param& mu, const SampleSet& samples, int want_n,
                          const MetricModel& metric);

/// True iff candidate lies in the ball of new_point or vice versa, with
/// tensors and radii taken from the field.
bool domain_of_influence_excludes(const Param& candidate, const Param& new_point,
                                  const MetricField& field);

/// Training-set cardinality law Q(err) = ceil((Q_M-Q_m)/log(tol) * log(err) + Q_m)
/// with err clamped to [tol, 1].
int q_of_err(double err, double tol, int q_min, int q_max);

struct TrainingGenOptions {
    int pool_factor = 50;       // farthest-point candidate pool = factor * Q
    int lloyd_sweeps = 3;
    int lloyd_pool_factor = 10; // relaxation pool cap = factor * Q
};

/// Q points approximately equidistributed under M(mu)/r(mu)^2: box corners,
/// then metric farthest-point insertion from a uniform candidate pool,
/// then Lloyd-style relaxation sweeps.
TrainingSet generate_training_set(const MetricModel& metric, int q_target,
                                  const ParameterDomain& domain, std::mt19937_64& rng,
                                  const TrainingGenOptions& opts = {});
TrainingSet generate_training_set(const MetricField& field, int q_target,
                                  const ParameterDomain& domain, std::mt19937_64& rng,
                                  const TrainingGenOptions& opts = {});

/// One enrichment pass over frozen per-point errors and frozen balls: add the
/// worst point, exclude its domain of influence, repeat until the remaining
/// maximum is at or below tol. Returns indices into train_points in selection
/// order. Points whose coordinates exactly match an existing sample are
/// skipped defensively.
std::vector<int> enrichment_pass(const std::vector<Param>& train_points,
                                 const std::vector<double>& errors, const MetricField& field,
                                 const std::vector<Param>& existing_samples, double tol);

struct GreedyOptions {
    int basis_size = 20; // N, the online system size
    double tol = 1e-4;
    bool anisotropic = true;
    double delta_rel = 0.005; // Hessian stencil increment / domain extent

    bool adaptive_train = false;
    std::vector<int> lattice{75, 75}; // fixed mode: per-dimension node counts
    int q_min = 0, q_max = 0;         // adaptive mode bounds (0 = derive from lattice)

    std::uint64_t seed = 424242;
    bool random_first_point = false; // default: training point nearest the centroid

    int max_snapshots = 4000;
    int max_outer_iterations = 400;
    TrainingGenOptions train_gen;
    bool verbose = false;
};

struct IterationRecord {
    int iteration = 0;   // 1-based, counted over every error sweep
    int basis_count = 0; // |S_K| the sweep's errors were computed with
    double max_err = 0.0;
    std::int64_t eta_evals = 0; // error evaluations in this sweep
    int train_size = 0;
};

struct GreedyResult {
    SampleSet samples;
    TrainingSet train;
    MetricModel metric;
    std::vector<IterationRecord> history;
    std::vector<double> final_errors; // per final-training-point, last sweep
    std::int64_t total_eta_evals = 0;
    double final_max_err = 0.0;
    bool converged = false;
    std::string diagnostic;

    // precomputed online data over the basis vectors (snapshot minus lifting)
    Matrix gram;                           // K x K
    std::vector<Matrix> a_reduced;         // Q_a blocks, K x K
    std::vector<Eigen::VectorXd> f_reduced; // Q_f blocks, length K
};

/// Algorithm: classical greedy bootstrap of N+1 snapshots, then loop
/// (error sweep with local spaces, metric update, enrichment pass,
/// optional training-set regeneration) until the maximum training error
/// is at or below tol.
GreedyResult offline_drive(const ProblemBackend& backend, const GreedyOptions& opts);

/// Stage-1 classical greedy on a fixed training set: global approximation
/// spaces, argmax selection, stops at `count` snapshots or err <= tol.
GreedyResult classical_greedy(const ProblemBackend& backend, const TrainingSet& train,
                              int count, double tol, std::uint64_t seed = 424242,
                              bool random_first_point = false);

} // namespace larb
