#include "larb/bundle.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "larb/csv.hpp"

static_assert(std::endian::native == std::endian::little,
              "bundle container assumes a little-endian host");

namespace larb {

namespace {

std::uint64_t fnv1a(const double* data, std::size_t count) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < count * sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

struct Section {
    std::string name;
    std::vector<double> data;
};

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error(what); }

} // namespace

void OfflineBundle::validate() const {
    const int k = sample_count();
    const int p = param_dim();
    for (const auto& mu : sample_points)
        if (int(mu.size()) != p) fail("bundle: inconsistent parameter dimensions");
    if (gram.rows() != k || gram.cols() != k)
        fail("bundle: Gram matrix does not match the sample count");
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < i; ++j)
            if (gram(i, j) != gram(j, i)) fail("bundle: Gram matrix not symmetric");
    for (const auto& a : a_reduced)
        if (a.rows() != k || a.cols() != k)
            fail("bundle: affine block does not match the sample count");
    for (const auto& f : f_reduced)
        if (int(f.size()) != k) fail("bundle: right-side block does not match sample count");
    if (!snapshots.empty()) {
        if (int(snapshots.size()) != k) fail("bundle: snapshot count mismatch");
        for (const auto& s : snapshots)
            if (s.size() != snapshots[0].size()) fail("bundle: snapshot lengths differ");
        if (lifting.size() != 0 && lifting.size() != snapshots[0].size())
            fail("bundle: lifting length mismatch");
    }
    for (const auto& node : metric_nodes) {
        if (int(node.point.size()) != p && k > 0)
            fail("bundle: metric node dimension mismatch");
        if (node.tensor.rows() != node.point.size() ||
            node.tensor.cols() != node.point.size())
            fail("bundle: metric tensor dimension mismatch");
    }
    if (basis_size < 0 || tol < 0) fail("bundle: negative metadata");
}

void save_bundle(const OfflineBundle& b, const std::filesystem::path& path, bool force) {
    if (std::filesystem::exists(path) && !force)
        throw std::runtime_error("save_bundle: refusing to overwrite " + path.string() +
                                 " without force");

    const int k = b.sample_count();
    const int p = b.param_dim();
    const int t = int(b.metric_nodes.size());
    const int pm = t > 0 ? int(b.metric_nodes[0].point.size()) : p;
    const Eigen::Index m = b.snapshots.empty()
                               ? (b.lifting.size() > 0 ? b.lifting.size() : 0)
                               : b.snapshots[0].size();

    std::vector<Section> sections;
    auto push = [&sections](std::string name, std::vector<double> data) {
        sections.push_back({std::move(name), std::move(data)});
    };

    {
        std::vector<double> v;
        v.reserve(std::size_t(k) * p);
        for (const auto& mu : b.sample_points)
            for (int i = 0; i < p; ++i) v.push_back(mu[i]);
        push("sample_points", std::move(v));
    }
    {
        std::vector<double> v(b.gram.data(), b.gram.data() + b.gram.size());
        push("gram", std::move(v));
    }
    for (std::size_t q = 0; q < b.a_reduced.size(); ++q) {
        std::vector<double> v(b.a_reduced[q].data(),
                              b.a_reduced[q].data() + b.a_reduced[q].size());
        push("a_reduced_" + std::to_string(q), std::move(v));
    }
    for (std::size_t q = 0; q < b.f_reduced.size(); ++q) {
        std::vector<double> v(b.f_reduced[q].data(),
                              b.f_reduced[q].data() + b.f_reduced[q].size());
        push("f_reduced_" + std::to_string(q), std::move(v));
    }
    {
        std::vector<double> v;
        v.reserve(std::size_t(t) * (pm + pm * pm + 1));
        for (const auto& node : b.metric_nodes) {
            for (int i = 0; i < pm; ++i) v.push_back(node.point[i]);
            for (int i = 0; i < pm; ++i)
                for (int j = 0; j < pm; ++j) v.push_back(node.tensor(i, j));
            v.push_back(node.radius);
        }
        push("metric_nodes", std::move(v));
    }
    {
        std::vector<double> v(b.lifting.data(), b.lifting.data() + b.lifting.size());
        push("lifting", std::move(v));
    }
    {
        std::vector<double> v;
        v.reserve(b.snapshots.size() * std::size_t(m));
        for (const auto& s : b.snapshots)
            for (Eigen::Index i = 0; i < s.size(); ++i) v.push_back(s[i]);
        push("snapshots", std::move(v));
    }
    {
        std::vector<double> v;
        v.reserve(b.history.size() * 5);
        for (const auto& h : b.history) {
            v.push_back(double(h.iteration));
            v.push_back(double(h.basis_count));
            v.push_back(h.max_err);
            v.push_back(double(h.eta_evals));
            v.push_back(double(h.train_size));
        }
        push("history", std::move(v));
    }

    std::ostringstream head;
    head << "LARB-BUNDLE " << OfflineBundle::kFormatVersion << "\n";
    head << "seed = " << b.seed << "\n";
    head << "basis_size = " << b.basis_size << "\n";
    head << "tol = " << format_double(b.tol) << "\n";
    head << "anisotropic = " << (b.anisotropic ? 1 : 0) << "\n";
    head << "converged = " << (b.converged ? 1 : 0) << "\n";
    head << "total_eta_evals = " << b.total_eta_evals << "\n";
    head << "sample_count = " << k << "\n";
    head << "param_dim = " << p << "\n";
    head << "metric_node_count = " << t << "\n";
    head << "metric_dim = " << pm << "\n";
    head << "truth_dim = " << m << "\n";
    head << "q_a = " << b.a_reduced.size() << "\n";
    head << "q_f = " << b.f_reduced.size() << "\n";
    head << "history_rows = " << b.history.size() << "\n";
    {
        std::istringstream desc(b.problem_descriptor);
        std::vector<std::string> lines;
        std::string line;
        while (std::getline(desc, line)) lines.push_back(line);
        head << "descriptor_lines = " << lines.size() << "\n";
        for (const auto& l : lines) head << l << "\n";
    }
    head << "sections = " << sections.size() << "\n";
    for (const auto& s : sections)
        head << "section " << s.name << " " << s.data.size() << " "
             << fnv1a(s.data.data(), s.data.size()) << "\n";
    head << "BINARY\n";

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_bundle: cannot open " + path.string());
    const std::string header = head.str();
    out.write(header.data(), std::streamsize(header.size()));
    for (const auto& s : sections)
        out.write(reinterpret_cast<const char*>(s.data.data()),
                  std::streamsize(s.data.size() * sizeof(double)));
    out.flush();
    if (!out) throw std::runtime_error("save_bundle: write failure on " + path.string());
}

OfflineBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("load_bundle: cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) fail("load_bundle: empty file");
    {
        std::istringstream first(line);
        std::string magic;
        int version = -1;
        first >> magic >> version;
        if (magic != "LARB-BUNDLE") fail("load_bundle: not a bundle file");
        if (version != OfflineBundle::kFormatVersion)
            fail("load_bundle: unsupported format version " + std::to_string(version));
    }

    OfflineBundle b;
    std::map<std::string, std::string> scalars;
    struct Decl {
        std::string name;
        std::size_t count;
        std::uint64_t checksum;
    };
    std::vector<Decl> decls;
    std::string descriptor;

    auto need = [&](const std::string& key) {
        auto it = scalars.find(key);
        if (it == scalars.end()) fail("load_bundle: missing header key " + key);
        return it->second;
    };

    while (std::getline(in, line)) {
        if (line == "BINARY") break;
        if (line.rfind("section ", 0) == 0) {
            std::istringstream ss(line);
            std::string tag;
            Decl d;
            ss >> tag >> d.name >> d.count >> d.checksum;
            if (!ss) fail("load_bundle: malformed section declaration");
            decls.push_back(d);
            continue;
        }
        auto eq = line.find(" = ");
        if (eq == std::string::npos) fail("load_bundle: malformed header line: " + line);
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 3);
        if (key == "descriptor_lines") {
            const int n = std::stoi(value);
            std::ostringstream desc;
            for (int i = 0; i < n; ++i) {
                if (!std::getline(in, line)) fail("load_bundle: truncated descriptor");
                desc << line << "\n";
            }
            descriptor = desc.str();
            continue;
        }
        scalars[key] = value;
    }
    if (line != "BINARY") fail("load_bundle: missing BINARY marker");

    b.problem_descriptor = descriptor;
    b.seed = std::stoull(need("seed"));
    b.basis_size = std::stoi(need("basis_size"));
    b.tol = parse_double(need("tol"));
    b.anisotropic = need("anisotropic") == "1";
    b.converged = need("converged") == "1";
    b.total_eta_evals = std::stoll(need("total_eta_evals"));
    const int k = std::stoi(need("sample_count"));
    const int p = std::stoi(need("param_dim"));
    const int t = std::stoi(need("metric_node_count"));
    const int pm = std::stoi(need("metric_dim"));
    const Eigen::Index m = std::stoll(need("truth_dim"));
    const int qa = std::stoi(need("q_a"));
    const int qf = std::stoi(need("q_f"));
    const int hist_rows = std::stoi(need("history_rows"));

    std::map<std::string, std::vector<double>> sections;
    for (const auto& d : decls) {
        std::vector<double> data(d.count);
        in.read(reinterpret_cast<char*>(data.data()),
                std::streamsize(d.count * sizeof(double)));
        if (std::size_t(in.gcount()) != d.count * sizeof(double))
            fail("load_bundle: truncated section '" + d.name + "'");
        if (fnv1a(data.data(), data.size()) != d.checksum)
            fail("load_bundle: checksum mismatch in section '" + d.name + "'");
        sections.emplace(d.name, std::move(data));
    }

    auto take = [&](const std::string& name, std::size_t expected) -> std::vector<double> {
        auto it = sections.find(name);
        if (it == sections.end()) fail("load_bundle: missing section '" + name + "'");
        if (it->second.size() != expected)
            fail("load_bundle: section '" + name + "' has wrong length");
        return std::move(it->second);
    };

    {
        auto v = take("sample_points", std::size_t(k) * p);
        b.sample_points.resize(k);
        for (int i = 0; i < k; ++i) {
            Param mu(p);
            for (int j = 0; j < p; ++j) mu[j] = v[std::size_t(i) * p + j];
            b.sample_points[std::size_t(i)] = std::move(mu);
        }
    }
    {
        auto v = take("gram", std::size_t(k) * k);
        b.gram.resize(k, k);
        std::memcpy(b.gram.data(), v.data(), v.size() * sizeof(double));
    }
    for (int q = 0; q < qa; ++q) {
        auto v = take("a_reduced_" + std::to_string(q), std::size_t(k) * k);
        Matrix a(k, k);
        std::memcpy(a.data(), v.data(), v.size() * sizeof(double));
        b.a_reduced.push_back(std::move(a));
    }
    for (int q = 0; q < qf; ++q) {
        auto v = take("f_reduced_" + std::to_string(q), std::size_t(k));
        Eigen::VectorXd f(k);
        std::memcpy(f.data(), v.data(), v.size() * sizeof(double));
        b.f_reduced.push_back(std::move(f));
    }
    {
        auto v = take("metric_nodes", std::size_t(t) * (pm + pm * pm + 1));
        b.metric_nodes.resize(t);
        std::size_t pos = 0;
        for (int i = 0; i < t; ++i) {
            MetricNode node;
            node.point.resize(pm);
            for (int j = 0; j < pm; ++j) node.point[j] = v[pos++];
            node.tensor.resize(pm, pm);
            for (int r = 0; r < pm; ++r)
                for (int c = 0; c < pm; ++c) node.tensor(r, c) = v[pos++];
            node.radius = v[pos++];
            b.metric_nodes[std::size_t(i)] = std::move(node);
        }
    }
    {
        auto it = sections.find("lifting");
        if (it == sections.end()) fail("load_bundle: missing section 'lifting'");
        b.lifting.resize(Eigen::Index(it->second.size()));
        std::memcpy(b.lifting.data(), it->second.data(),
                    it->second.size() * sizeof(double));
    }
    {
        auto it = sections.find("snapshots");
        if (it == sections.end()) fail("load_bundle: missing section 'snapshots'");
        if (!it->second.empty()) {
            if (m <= 0 || it->second.size() != std::size_t(k) * std::size_t(m))
                fail("load_bundle: section 'snapshots' has wrong length");
            b.snapshots.resize(k);
            for (int i = 0; i < k; ++i) {
                Eigen::VectorXd s(m);
                std::memcpy(s.data(), it->second.data() + std::size_t(i) * std::size_t(m),
                            std::size_t(m) * sizeof(double));
                b.snapshots[std::size_t(i)] = std::move(s);
            }
        }
    }
    {
        auto v = take("history", std::size_t(hist_rows) * 5);
        for (int i = 0; i < hist_rows; ++i) {
            IterationRecord r;
            r.iteration = int(v[std::size_t(i) * 5 + 0]);
            r.basis_count = int(v[std::size_t(i) * 5 + 1]);
            r.max_err = v[std::size_t(i) * 5 + 2];
            r.eta_evals = std::int64_t(v[std::size_t(i) * 5 + 3]);
            r.train_size = int(v[std::size_t(i) * 5 + 4]);
            b.history.push_back(r);
        }
    }

    b.validate();
    return b;
}

} // namespace larb
