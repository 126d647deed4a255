#include "larb/runner.hpp"

#include <cmath>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "larb/bundle.hpp"
#include "larb/csv.hpp"
#include "larb/online.hpp"
#include "larb/parallel.hpp"

namespace larb {

namespace {

using nlohmann::json;

std::string seed_comment(std::uint64_t seed) { return "seed=" + std::to_string(seed); }

OfflineBundle make_bundle(const GreedyResult& res, const ProblemBackend& backend,
                          const RunConfig& cfg) {
    OfflineBundle b;
    b.problem_descriptor = backend.descriptor();
    b.seed = cfg.seed;
    b.basis_size = cfg.basis_size;
    b.tol = cfg.tol;
    b.anisotropic = cfg.metric_mode == "anisotropic";
    b.converged = res.converged;
    b.total_eta_evals = res.total_eta_evals;
    b.sample_points = res.samples.points;
    if (cfg.save_snapshots) b.snapshots = res.samples.snapshots;
    if (backend.is_galerkin()) b.lifting = backend.lifting_vector();
    b.gram = res.gram;
    b.a_reduced = res.a_reduced;
    b.f_reduced = res.f_reduced;
    if (res.metric.has_field()) b.metric_nodes = res.metric.field().nodes();
    b.history = res.history;
    return b;
}

void write_offline_outputs(const std::filesystem::path& dir, const GreedyResult& res,
                           const RunConfig& cfg) {
    const std::string comment = seed_comment(cfg.seed);
    {
        CsvWriter csv(dir / "convergence.csv", comment,
                      {"iteration", "K", "max_err", "eta_evals", "train_size"});
        for (const auto& h : res.history)
            csv.row({std::to_string(h.iteration), std::to_string(h.basis_count),
                     format_double(h.max_err), std::to_string(h.eta_evals),
                     std::to_string(h.train_size)});
        csv.close();
    }
    {
        CsvWriter csv(dir / "samples.csv", comment, {"index", "mu1", "mu2"});
        for (std::size_t i = 0; i < res.samples.points.size(); ++i)
            csv.row({std::to_string(i), format_double(res.samples.points[i][0]),
                     format_double(res.samples.points[i][1])});
        csv.close();
    }
    {
        CsvWriter csv(dir / "radii.csv", comment, {"mu1", "mu2", "r"});
        if (res.metric.has_field())
            for (const auto& node : res.metric.field().nodes())
                csv.row({format_double(node.point[0]), format_double(node.point[1]),
                         format_double(node.radius)});
        csv.close();
    }
    {
        CsvWriter csv(dir / "metric.csv", comment,
                      {"mu1", "mu2", "m11", "m12", "m21", "m22"});
        if (res.metric.has_field())
            for (const auto& node : res.metric.field().nodes())
                csv.row({format_double(node.point[0]), format_double(node.point[1]),
                         format_double(node.tensor(0, 0)), format_double(node.tensor(0, 1)),
                         format_double(node.tensor(1, 0)),
                         format_double(node.tensor(1, 1))});
        csv.close();
    }
}

} // namespace

int cmd_offline(const RunConfig& cfg) {
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        std::filesystem::create_directories(cfg.out_dir);
        const auto backend = cfg.make_backend();
        const GreedyResult res = offline_drive(*backend, cfg.greedy_options());

        const OfflineBundle bundle = make_bundle(res, *backend, cfg);
        save_bundle(bundle, std::filesystem::path(cfg.out_dir) / "bundle.larb", cfg.force);
        write_offline_outputs(cfg.out_dir, res, cfg);

        std::cout << "offline: K=" << res.samples.size()
                  << " max_err=" << format_double(res.final_max_err)
                  << " eta_evals=" << res.total_eta_evals
                  << " iterations=" << res.history.size()
                  << (res.converged ? "" : " NOT-CONVERGED") << "\n";
        if (!res.converged) {
            std::cerr << "error: offline stage did not converge: " << res.diagnostic
                      << "\n";
            return kExitNoConvergence;
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}

int cmd_online(const std::filesystem::path& bundle_path, const QuerySpec& spec,
               const std::filesystem::path& out_dir, bool force) {
    try {
        auto bundle = std::make_shared<OfflineBundle>(load_bundle(bundle_path));
        std::shared_ptr<const ProblemBackend> validator;
        if (spec.validate)
            validator = backend_from_descriptor(bundle->problem_descriptor);
        OnlineSolver solver(bundle, validator);

        // the parameter box comes straight from the descriptor; lattice and
        // random query generation are possible without any backend
        const auto kv = parse_kv(bundle->problem_descriptor);
        std::array<double, 4> box{};
        {
            auto it = kv.find("problem.domain");
            if (it == kv.end()) throw ConfigError("bundle descriptor lacks problem.domain");
            std::istringstream ss(it->second);
            ss >> box[0] >> box[1] >> box[2] >> box[3];
            if (!ss) throw ConfigError("bundle descriptor has malformed problem.domain");
        }
        std::vector<Param> queries = spec.explicit_points;
        if (spec.lattice[0] > 0) {
            std::array<double, 4> reg = spec.region.value_or(box);
            for (int j = 0; j < spec.lattice[1]; ++j)
                for (int i = 0; i < spec.lattice[0]; ++i) {
                    Param mu(2);
                    mu[0] = reg[0] + (reg[1] - reg[0]) * double(i) /
                                         double(std::max(1, spec.lattice[0] - 1));
                    mu[1] = reg[2] + (reg[3] - reg[2]) * double(j) /
                                         double(std::max(1, spec.lattice[1] - 1));
                    queries.push_back(std::move(mu));
                }
        }
        if (spec.random_count > 0) {
            std::mt19937_64 rng(spec.seed);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (int i = 0; i < spec.random_count; ++i) {
                Param mu(2);
                mu[0] = box[0] + (box[1] - box[0]) * unit(rng);
                mu[1] = box[2] + (box[3] - box[2]) * unit(rng);
                queries.push_back(std::move(mu));
            }
        }
        if (queries.empty()) {
            std::cerr << "error: no queries given\n";
            return kExitConfig;
        }

        std::filesystem::create_directories(out_dir);
        const auto csv_path = out_dir / "queries.csv";
        if (std::filesystem::exists(csv_path) && !force) {
            std::cerr << "error: " << csv_path << " exists; use --force\n";
            return kExitIo;
        }

        struct Row {
            ReducedSolution sol;
            bool failed = false;
            std::string what;
        };
        std::vector<Row> rows(queries.size());
        parallel_for(queries.size(), [&](std::size_t i) {
            try {
                rows[i].sol = solver.solve(queries[i], spec.validate);
            } catch (const std::exception& e) {
                rows[i].failed = true;
                rows[i].what = e.what();
            }
        });

        CsvWriter csv(csv_path, seed_comment(spec.seed),
                      {"mu1", "mu2", "r", "local_indices", "error", "search_ms",
                       "ortho_ms", "solve_ms", "note"});
        std::size_t failures = 0, above_tol = 0, validated = 0;
        double max_err = 0.0, sum_err = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            if (r.failed) {
                ++failures;
                csv.row({format_double(queries[i][0]), format_double(queries[i][1]), "", "",
                         "", "", "", "", r.what});
                continue;
            }
            std::string idxs;
            for (std::size_t j = 0; j < r.sol.local_indices.size(); ++j)
                idxs += (j ? ";" : "") + std::to_string(r.sol.local_indices[j]);
            std::string err;
            if (r.sol.error) {
                err = format_double(*r.sol.error);
                ++validated;
                max_err = std::max(max_err, *r.sol.error);
                sum_err += *r.sol.error;
                if (*r.sol.error > bundle->tol) ++above_tol;
            }
            csv.row({format_double(queries[i][0]), format_double(queries[i][1]),
                     format_double(r.sol.radius), idxs, err,
                     format_double(r.sol.times.search_ms),
                     format_double(r.sol.times.ortho_ms),
                     format_double(r.sol.times.solve_ms), r.sol.note});
        }
        csv.close();

        json summary;
        summary["bundle"] = bundle_path.string();
        summary["seed"] = spec.seed;
        summary["queries"] = queries.size();
        summary["failures"] = failures;
        summary["tol"] = bundle->tol;
        if (validated > 0) {
            summary["validated"] = validated;
            summary["max_error"] = max_err;
            summary["mean_error"] = sum_err / double(validated);
            summary["fraction_above_tol"] = double(above_tol) / double(validated);
        }
        std::ofstream js(out_dir / "summary.json");
        js << summary.dump(2) << "\n";
        js.close();

        std::cout << "online: " << queries.size() << " queries, " << failures
                  << " failures";
        if (validated > 0)
            std::cout << ", max_error=" << format_double(max_err) << ", above_tol="
                      << format_double(double(above_tol) / double(validated));
        std::cout << "\n";
        return failures == queries.size() ? kExitIo : kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}

int cmd_compare(const RunConfig& a, const RunConfig& b,
                const std::filesystem::path& out_dir, bool force) {
    try {
        if (a.family != b.family) {
            std::cerr << "error: compare requires matching problem selections ("
                      << a.family << " vs " << b.family << ")\n";
            return kExitConfig;
        }
        RunConfig ca = a, cb = b;
        ca.out_dir = (out_dir / "A").string();
        cb.out_dir = (out_dir / "B").string();
        ca.force = cb.force = force;
        const int rc_a = cmd_offline(ca);
        if (rc_a != kExitOk && rc_a != kExitNoConvergence) return rc_a;
        const int rc_b = cmd_offline(cb);
        if (rc_b != kExitOk && rc_b != kExitNoConvergence) return rc_b;

        const OfflineBundle ba = load_bundle(std::filesystem::path(ca.out_dir) / "bundle.larb");
        const OfflineBundle bb = load_bundle(std::filesystem::path(cb.out_dir) / "bundle.larb");

        std::filesystem::create_directories(out_dir);
        CsvWriter csv(out_dir / "comparison.csv", seed_comment(a.seed),
                      {"iteration", "K_a", "max_err_a", "K_b", "max_err_b"});
        const std::size_t rows = std::max(ba.history.size(), bb.history.size());
        for (std::size_t i = 0; i < rows; ++i) {
            std::string ka, ea, kb, eb;
            if (i < ba.history.size()) {
                ka = std::to_string(ba.history[i].basis_count);
                ea = format_double(ba.history[i].max_err);
            }
            if (i < bb.history.size()) {
                kb = std::to_string(bb.history[i].basis_count);
                eb = format_double(bb.history[i].max_err);
            }
            csv.row({std::to_string(i + 1), ka, ea, kb, eb});
        }
        csv.close();

        json verdict;
        verdict["snapshots_a"] = ba.sample_count();
        verdict["snapshots_b"] = bb.sample_count();
        verdict["snapshot_ratio"] = bb.sample_count() > 0
                                        ? double(ba.sample_count()) / bb.sample_count()
                                        : 0.0;
        verdict["eta_evals_a"] = ba.total_eta_evals;
        verdict["eta_evals_b"] = bb.total_eta_evals;
        verdict["eta_eval_ratio"] = bb.total_eta_evals > 0
                                        ? double(ba.total_eta_evals) /
                                              double(bb.total_eta_evals)
                                        : 0.0;
        verdict["converged_a"] = ba.converged;
        verdict["converged_b"] = bb.converged;
        std::ofstream js(out_dir / "verdict.json");
        js << verdict.dump(2) << "\n";
        js.close();
        std::cout << "compare: snapshot_ratio="
                  << format_double(verdict["snapshot_ratio"].get<double>())
                  << " eta_eval_ratio="
                  << format_double(verdict["eta_eval_ratio"].get<double>()) << "\n";
        return (rc_a == kExitOk && rc_b == kExitOk) ? kExitOk : kExitNoConvergence;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}

int cmd_inspect(const std::filesystem::path& bundle_path) {
    try {
        const OfflineBundle b = load_bundle(bundle_path);
        std::cout << "bundle: " << bundle_path.string() << "\n";
        std::cout << "format_version: " << OfflineBundle::kFormatVersion << "\n";
        std::cout << "seed: " << b.seed << "\n";
        std::cout << "N: " << b.basis_size << "\n";
        std::cout << "tol: " << format_double(b.tol) << "\n";
        std::cout << "metric: " << (b.anisotropic ? "anisotropic" : "isotropic") << "\n";
        std::cout << "converged: " << (b.converged ? "yes" : "no") << "\n";
        std::cout << "samples: " << b.sample_count() << "\n";
        std::cout << "snapshots stored: " << (b.has_snapshots() ? "yes" : "no") << "\n";
        std::cout << "metric nodes: " << b.metric_nodes.size() << "\n";
        std::cout << "affine blocks: " << b.a_reduced.size() << "\n";
        std::cout << "eta evaluations: " << b.total_eta_evals << "\n";
        std::cout << "iterations: " << b.history.size() << "\n";
        std::cout << "descriptor:\n" << b.problem_descriptor;
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}

} // namespace larb
