#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "larb/backend.hpp"
#include "larb/greedy.hpp"

namespace larb {

/// Thrown for malformed or inconsistent configuration; mapped to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat key=value configuration with namespaced keys (problem.*, greedy.*,
/// train.*, metric.*, out.*) plus command-line overrides.
struct RunConfig {
    // problem.*
    std::string family = "f1"; // f1 | f2 | f3 | f3xi | cd
    std::array<double, 4> domain{-0.5, 0.5, -0.5, 0.5};
    bool domain_set = false;
    std::array<int, 2> grid{75, 75};
    std::array<double, 4> omega{-1.0, 1.0, -1.0, 1.0};
    bool omega_set = false;
    XiMap xi;
    int fem_elems = 80;
    int fem_degree = 1;
    std::string error_norm; // empty = per-kind default (linf analytic, l2 cd)

    // greedy.*
    int basis_size = 20;
    double tol = 1e-4;
    int max_snapshots = 4000;
    int max_outer_iterations = 400;

    // train.*
    std::string train_mode = "fixed"; // fixed | adaptive
    std::array<int, 2> lattice{75, 75};
    int q_min = 0; // adaptive bounds; 0 = derive defaults
    int q_max = 0;

    // metric.*
    std::string metric_mode = "anisotropic"; // anisotropic | isotropic
    double delta_rel = 0.005;

    // run-level
    std::uint64_t seed = 424242;
    bool random_first_point = false;
    std::string out_dir = "out";
    bool save_snapshots = true;
    bool force = false;
    bool verbose = false;

    static RunConfig from_file(const std::filesystem::path& path);
    void apply(const std::string& key, const std::string& value);
    void validate() const;

    std::unique_ptr<ProblemBackend> make_backend() const;
    GreedyOptions greedy_options() const;
    std::string echo() const; // canonical dump, for provenance headers
};

/// Parses "key = value" lines ('#' starts a comment); order preserved for
/// duplicate detection by last-wins.
std::map<std::string, std::string> parse_kv(const std::string& text);

/// Rebuilds the truth backend from a bundle's problem descriptor.
std::unique_ptr<ProblemBackend> backend_from_descriptor(const std::string& descriptor);

} // namespace larb
