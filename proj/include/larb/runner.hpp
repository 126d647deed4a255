#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "larb/config.hpp"
#include "larb/params.hpp"

namespace larb {

// process exit codes
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNoConvergence = 3;
inline constexpr int kExitIo = 4;

/// Runs the offline stage and writes bundle.larb, convergence.csv,
/// samples.csv, radii.csv and metric.csv into the output directory.
int cmd_offline(const RunConfig& config);

/// Query specification for the online sweep: an explicit list, a lattice over
/// the parameter box (optionally restricted to a region), or uniform-random
/// draws; exactly one source must be set.
struct QuerySpec {
    std::vector<Param> explicit_points;
    std::array<int, 2> lattice{0, 0};
    std::optional<std::array<double, 4>> region; // lo1 hi1 lo2 hi2
    int random_count = 0;
    std::uint64_t seed = 424242;
    bool validate = false;
};

/// Runs online queries against a stored bundle; writes queries.csv and
/// summary.json into the output directory.
int cmd_online(const std::filesystem::path& bundle_path, const QuerySpec& spec,
               const std::filesystem::path& out_dir, bool force);

/// Runs (or reuses) two offline configurations and writes comparison.csv and
/// verdict.json with snapshot-count and evaluation-count ratios.
int cmd_compare(const RunConfig& a, const RunConfig& b,
                const std::filesystem::path& out_dir, bool force);

/// Prints bundle metadata to stdout.
int cmd_inspect(const std::filesystem::path& bundle_path);

} // namespace larb
