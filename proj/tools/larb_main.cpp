#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "larb/runner.hpp"

namespace {

int apply_overrides(larb::RunConfig& cfg, const std::vector<std::string>& sets) {
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
            return larb::kExitConfig;
        }
        try {
            cfg.apply(kv.substr(0, eq), kv.substr(eq + 1));
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return larb::kExitConfig;
        }
    }
    return larb::kExitOk;
}

int load_config(const std::string& path, const std::vector<std::string>& sets,
                const std::string& out, std::uint64_t seed, bool seed_set, bool force,
                larb::RunConfig& cfg) {
    try {
        if (!path.empty()) cfg = larb::RunConfig::from_file(path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return larb::kExitConfig;
    }
    if (int rc = apply_overrides(cfg, sets); rc != larb::kExitOk) return rc;
    if (!out.empty()) cfg.out_dir = out;
    if (seed_set) cfg.seed = seed;
    if (force) cfg.force = true;
    return larb::kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"locally adaptive reduced-basis sampling tool"};
    app.require_subcommand(1);

    // offline
    std::string off_config, off_out;
    std::vector<std::string> off_sets;
    std::uint64_t off_seed = 0;
    bool off_force = false;
    auto* offline = app.add_subcommand("offline", "run the offline sampling stage");
    offline->add_option("--config", off_config, "key=value config file");
    offline->add_option("--set", off_sets, "override, e.g. --set greedy.N=20");
    offline->add_option("--out", off_out, "output directory");
    auto* off_seed_opt = offline->add_option("--seed", off_seed, "64-bit RNG seed");
    offline->add_flag("--force", off_force, "overwrite existing outputs");

    // online
    std::string on_bundle, on_out = "online_out";
    std::vector<std::string> on_mus;
    std::vector<int> on_lattice;
    std::vector<double> on_region;
    int on_random = 0;
    std::uint64_t on_seed = 424242;
    bool on_validate = false, on_force = false;
    auto* online = app.add_subcommand("online", "query a stored bundle");
    online->add_option("bundle", on_bundle, "path to bundle.larb")->required();
    online->add_option("--out", on_out, "output directory");
    online->add_option("--mu", on_mus, "explicit query point 'mu1,mu2' (repeatable)");
    online->add_option("--lattice", on_lattice, "lattice query 'nx ny'")->expected(2);
    online->add_option("--region", on_region, "lattice region 'lo1 hi1 lo2 hi2'")
        ->expected(4);
    online->add_option("--random", on_random, "number of uniform random queries");
    online->add_option("--seed", on_seed, "seed for random queries");
    online->add_flag("--validate", on_validate, "compute exact errors against the truth");
    online->add_flag("--force", on_force, "overwrite existing outputs");

    // compare
    std::string cmp_a, cmp_b, cmp_out = "compare_out";
    std::vector<std::string> cmp_sets_a, cmp_sets_b;
    bool cmp_force = false;
    auto* compare = app.add_subcommand("compare", "run two configs and compare");
    compare->add_option("config_a", cmp_a, "first config file")->required();
    compare->add_option("config_b", cmp_b, "second config file")->required();
    compare->add_option("--set-a", cmp_sets_a, "override for config A");
    compare->add_option("--set-b", cmp_sets_b, "override for config B");
    compare->add_option("--out", cmp_out, "output directory");
    compare->add_flag("--force", cmp_force, "overwrite existing outputs");

    // inspect
    std::string ins_bundle;
    auto* inspect = app.add_subcommand("inspect", "print bundle metadata");
    inspect->add_option("bundle", ins_bundle, "path to bundle.larb")->required();

    CLI11_PARSE(app, argc, argv);

    if (offline->parsed()) {
        larb::RunConfig cfg;
        if (int rc = load_config(off_config, off_sets, off_out, off_seed,
                                 off_seed_opt->count() > 0, off_force, cfg);
            rc != larb::kExitOk)
            return rc;
        return larb::cmd_offline(cfg);
    }
    if (online->parsed()) {
        larb::QuerySpec spec;
        spec.validate = on_validate;
        spec.seed = on_seed;
        spec.random_count = on_random;
        if (on_lattice.size() == 2) spec.lattice = {on_lattice[0], on_lattice[1]};
        if (on_region.size() == 4)
            spec.region = std::array<double, 4>{on_region[0], on_region[1], on_region[2],
                                                on_region[3]};
        for (const auto& s : on_mus) {
            const auto comma = s.find(',');
            if (comma == std::string::npos) {
                std::cerr << "error: --mu expects 'mu1,mu2', got '" << s << "'\n";
                return larb::kExitConfig;
            }
            larb::Param mu(2);
            try {
                mu[0] = std::stod(s.substr(0, comma));
                mu[1] = std::stod(s.substr(comma + 1));
            } catch (const std::exception&) {
                std::cerr << "error: bad --mu value '" << s << "'\n";
                return larb::kExitConfig;
            }
            spec.explicit_points.push_back(std::move(mu));
        }
        return larb::cmd_online(on_bundle, spec, on_out, on_force);
    }
    if (compare->parsed()) {
        larb::RunConfig a, b;
        if (int rc = load_config(cmp_a, cmp_sets_a, "", 0, false, cmp_force, a);
            rc != larb::kExitOk)
            return rc;
        if (int rc = load_config(cmp_b, cmp_sets_b, "", 0, false, cmp_force, b);
            rc != larb::kExitOk)
            return rc;
        return larb::cmd_compare(a, b, cmp_out, cmp_force);
    }
    if (inspect->parsed()) return larb::cmd_inspect(ins_bundle);
    return larb::kExitConfig;
}
