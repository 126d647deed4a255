#include "larb/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "larb/csv.hpp"
#include "larb/galerkin.hpp"

namespace larb {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<double> parse_doubles(const std::string& v, std::size_t n, const std::string& key) {
    std::istringstream ss(v);
    std::vector<double> out;
    double x;
    while (ss >> x) out.push_back(x);
    if (out.size() != n)
        throw ConfigError("config: key '" + key + "' expects " + std::to_string(n) +
                          " numbers, got '" + v + "'");
    return out;
}

std::vector<int> parse_ints(const std::string& v, std::size_t n, const std::string& key) {
    std::istringstream ss(v);
    std::vector<int> out;
    int x;
    while (ss >> x) out.push_back(x);
    if (out.size() != n)
        throw ConfigError("config: key '" + key + "' expects " + std::to_string(n) +
                          " integers, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

} // namespace

std::map<std::string, std::string> parse_kv(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: malformed line '" + line + "'");
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    RunConfig cfg;
    for (const auto& [k, v] : parse_kv(buf.str())) cfg.apply(k, v);
    return cfg;
}

void RunConfig::apply(const std::string& key, const std::string& value) {
    if (key == "problem.family") family = value;
    else if (key == "problem.domain") {
        auto v = parse_doubles(value, 4, key);
        domain = {v[0], v[1], v[2], v[3]};
        domain_set = true;
    } else if (key == "problem.grid") {
        auto v = parse_ints(value, 2, key);
        grid = {v[0], v[1]};
    } else if (key == "problem.omega") {
        auto v = parse_doubles(value, 4, key);
        omega = {v[0], v[1], v[2], v[3]};
        omega_set = true;
    } else if (key == "problem.xi") {
        auto v = parse_doubles(value, 4, key);
        xi = {v[0], v[1], v[2], v[3]};
    } else if (key == "problem.fem_elems") fem_elems = parse_ints(value, 1, key)[0];
    else if (key == "problem.fem_degree") fem_degree = parse_ints(value, 1, key)[0];
    else if (key == "problem.error_norm") error_norm = value;
    else if (key == "greedy.N") basis_size = parse_ints(value, 1, key)[0];
    else if (key == "greedy.tol") tol = parse_doubles(value, 1, key)[0];
    else if (key == "greedy.max_snapshots") max_snapshots = parse_ints(value, 1, key)[0];
    else if (key == "greedy.max_outer_iterations")
        max_outer_iterations = parse_ints(value, 1, key)[0];
    else if (key == "train.mode") train_mode = value;
    else if (key == "train.lattice") {
        auto v = parse_ints(value, 2, key);
        lattice = {v[0], v[1]};
    } else if (key == "train.qmin") q_min = parse_ints(value, 1, key)[0];
    else if (key == "train.qmax") q_max = parse_ints(value, 1, key)[0];
    else if (key == "metric.mode") metric_mode = value;
    else if (key == "metric.delta") delta_rel = parse_doubles(value, 1, key)[0];
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "greedy.random_first_point") random_first_point = parse_bool(value, key);
    else if (key == "out.dir") out_dir = value;
    else if (key == "out.save_snapshots") save_snapshots = parse_bool(value, key);
    else if (key == "out.force") force = parse_bool(value, key);
    else if (key == "verbose") verbose = parse_bool(value, key);
    else throw ConfigError("config: unknown key '" + key + "'");
}

void RunConfig::validate() const {
    if (family != "f1" && family != "f2" && family != "f3" && family != "f3xi" &&
        family != "cd")
        throw ConfigError("config: problem.family must be one of f1|f2|f3|f3xi|cd");
    if (basis_size < 1) throw ConfigError("config: greedy.N >= 1 required");
    if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("config: greedy.tol in (0,1) required");
    if (train_mode != "fixed" && train_mode != "adaptive")
        throw ConfigError("config: train.mode must be fixed or adaptive");
    if (train_mode == "fixed" && (lattice[0] < 2 || lattice[1] < 2))
        throw ConfigError("config: train.lattice entries must be >= 2");
    if (metric_mode != "anisotropic" && metric_mode != "isotropic")
        throw ConfigError("config: metric.mode must be anisotropic or isotropic");
    if (!(delta_rel > 0.0 && delta_rel < 0.5))
        throw ConfigError("config: metric.delta must lie in (0, 0.5)");
    if (!(domain[0] < domain[1] && domain[2] < domain[3]))
        throw ConfigError("config: problem.domain must satisfy lo < hi per axis");
    if (grid[0] < 2 || grid[1] < 2) throw ConfigError("config: problem.grid entries >= 2");
    if (family == "cd") {
        if (fem_elems < 2) throw ConfigError("config: problem.fem_elems >= 2 required");
        if (fem_degree < 1 || fem_degree > 3)
            throw ConfigError("config: problem.fem_degree in 1..3");
    }
    if (train_mode == "adaptive") {
        const int qm = q_min, qM = q_max;
        if (qm != 0 || qM != 0) {
            if (qm < 4 || qm > qM)
                throw ConfigError("config: need 4 <= train.qmin <= train.qmax");
        }
    }
    if (!error_norm.empty()) error_norm_from_string(error_norm); // throws on junk
}

std::unique_ptr<ProblemBackend> RunConfig::make_backend() const {
    validate();
    if (family == "cd") {
        std::array<double, 4> dom = domain;
        if (!domain_set) dom = {-2.5, 0.0, -M_PI / 4.0, M_PI / 4.0};
        Eigen::Vector2d lo(dom[0], dom[2]), hi(dom[1], dom[3]);
        const ErrorNorm norm =
            error_norm.empty() ? ErrorNorm::l2 : error_norm_from_string(error_norm);
        return std::make_unique<ConvectionDiffusionBackend>(
            ParameterDomain(lo, hi), fem_elems, fem_degree, norm);
    }
    Eigen::Vector2d lo(domain[0], domain[2]), hi(domain[1], domain[3]);
    SpatialGrid g({grid[0], grid[1]}, {omega[0], omega[2]}, {omega[1], omega[3]});
    const ErrorNorm norm =
        error_norm.empty() ? ErrorNorm::linf : error_norm_from_string(error_norm);
    std::optional<XiMap> xim;
    if (family == "f3xi") xim = xi;
    return std::make_unique<AnalyticL2Backend>(family_from_string(family), std::move(g),
                                               ParameterDomain(lo, hi), xim, norm);
}

GreedyOptions RunConfig::greedy_options() const {
    GreedyOptions o;
    o.basis_size = basis_size;
    o.tol = tol;
    o.anisotropic = metric_mode == "anisotropic";
    o.delta_rel = delta_rel;
    o.adaptive_train = train_mode == "adaptive";
    o.lattice = {lattice[0], lattice[1]};
    if (o.adaptive_train) {
        const int full = lattice[0] * lattice[1];
        o.q_max = q_max > 0 ? q_max : full;
        o.q_min = q_min > 0 ? q_min : std::max(16, o.q_max / 16);
        if (o.q_min > o.q_max) throw ConfigError("config: train.qmin > train.qmax");
    }
    o.seed = seed;
    o.random_first_point = random_first_point;
    o.max_snapshots = max_snapshots;
    o.max_outer_iterations = max_outer_iterations;
    o.verbose = verbose;
    return o;
}

std::string RunConfig::echo() const {
    std::ostringstream os;
    os << "problem.family = " << family << "\n";
    os << "problem.domain = " << format_double(domain[0]) << " " << format_double(domain[1])
       << " " << format_double(domain[2]) << " " << format_double(domain[3]) << "\n";
    if (family == "cd") {
        os << "problem.fem_elems = " << fem_elems << "\n";
        os << "problem.fem_degree = " << fem_degree << "\n";
    } else {
        os << "problem.grid = " << grid[0] << " " << grid[1] << "\n";
        os << "problem.omega = " << format_double(omega[0]) << " " << format_double(omega[1])
           << " " << format_double(omega[2]) << " " << format_double(omega[3]) << "\n";
        if (family == "f3xi")
            os << "problem.xi = " << format_double(xi.a1) << " " << format_double(xi.b1)
               << " " << format_double(xi.a2) << " " << format_double(xi.b2) << "\n";
    }
    if (!error_norm.empty()) os << "problem.error_norm = " << error_norm << "\n";
    os << "greedy.N = " << basis_size << "\n";
    os << "greedy.tol = " << format_double(tol) << "\n";
    os << "train.mode = " << train_mode << "\n";
    os << "train.lattice = " << lattice[0] << " " << lattice[1] << "\n";
    if (train_mode == "adaptive") {
        os << "train.qmin = " << q_min << "\n";
        os << "train.qmax = " << q_max << "\n";
    }
    os << "metric.mode = " << metric_mode << "\n";
    os << "metric.delta = " << format_double(delta_rel) << "\n";
    os << "seed = " << seed << "\n";
    return os.str();
}

std::unique_ptr<ProblemBackend> backend_from_descriptor(const std::string& descriptor) {
    const auto kv = parse_kv(descriptor);
    auto need = [&](const std::string& k) {
        auto it = kv.find(k);
        if (it == kv.end())
            throw ConfigError("descriptor: missing key '" + k + "'");
        return it->second;
    };
    const std::string kind = need("problem.kind");
    if (kind == "cd") {
        auto dom = parse_doubles(need("problem.domain"), 4, "problem.domain");
        Eigen::Vector2d lo(dom[0], dom[2]), hi(dom[1], dom[3]);
        return std::make_unique<ConvectionDiffusionBackend>(
            ParameterDomain(lo, hi), std::stoi(need("problem.fem_elems")),
            std::stoi(need("problem.fem_degree")),
            error_norm_from_string(need("problem.error_norm")));
    }
    if (kind == "analytic") {
        auto dom = parse_doubles(need("problem.domain"), 4, "problem.domain");
        auto om = parse_doubles(need("problem.omega"), 4, "problem.omega");
        auto gr = parse_ints(need("problem.grid"), 2, "problem.grid");
        Eigen::Vector2d lo(dom[0], dom[2]), hi(dom[1], dom[3]);
        std::optional<XiMap> xim;
        if (kv.count("problem.xi")) {
            auto v = parse_doubles(kv.at("problem.xi"), 4, "problem.xi");
            xim = XiMap{v[0], v[1], v[2], v[3]};
        }
        return std::make_unique<AnalyticL2Backend>(
            family_from_string(need("problem.family")),
            SpatialGrid({gr[0], gr[1]}, {om[0], om[2]}, {om[1], om[3]}),
            ParameterDomain(lo, hi), xim,
            error_norm_from_string(need("problem.error_norm")));
    }
    throw ConfigError("descriptor: unknown problem.kind '" + kind + "'");
}

} // namespace larb
