#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "larb/greedy.hpp"
#include "larb/metric.hpp"
#include "larb/params.hpp"

namespace larb {

/// Everything the online stage needs, serialized to a single file: sample
/// parameters, the Gram matrix of their basis vectors, affine operator blocks
/// restricted to the sample set, the final metric field, and run metadata.
/// Snapshot vectors are optional; the Galerkin online path works without them.
struct OfflineBundle {
    static constexpr int kFormatVersion = 1;

    std::string problem_descriptor; // key=value lines, re-instantiates the backend
    std::uint64_t seed = 0;
    int basis_size = 0; // N
    double tol = 0.0;
    bool anisotropic = true;
    bool converged = false;
    std::int64_t total_eta_evals = 0;

    std::vector<Param> sample_points;       // K, in selection order
    std::vector<Eigen::VectorXd> snapshots; // K full truth fields, or empty
    Eigen::VectorXd lifting;                // truth-dim vector, or empty
    Matrix gram;                            // K x K over basis vectors
    std::vector<Matrix> a_reduced;          // Q_a blocks, each K x K
    std::vector<Eigen::VectorXd> f_reduced; // Q_f blocks, each K

    std::vector<MetricNode> metric_nodes; // final field nodes
    std::vector<IterationRecord> history;

    int sample_count() const { return int(sample_points.size()); }
    int param_dim() const {
        return sample_points.empty() ? 0 : int(sample_points[0].size());
    }
    bool has_snapshots() const { return !snapshots.empty(); }

    MetricField build_field() const { return MetricField(metric_nodes); }

    /// Dimension consistency and Gram symmetry; throws on violation.
    void validate() const;
};

/// Single-file container: text header (format version, descriptor, dimensions,
/// per-section FNV-1a checksums) followed by little-endian binary64 arrays.
/// Refuses to overwrite an existing file unless force is set.
void save_bundle(const OfflineBundle& bundle, const std::filesystem::path& path,
                 bool force = false);

/// Re-reads a container, verifying section lengths, checksums and bundle
/// invariants; any failure is an exception naming the offending section.
OfflineBundle load_bundle(const std::filesystem::path& path);

} // namespace larb
