#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "larb/bundle.hpp"

using namespace larb;

namespace {

Param pt(double a, double b) {
    Param p(2);
    p << a, b;
    return p;
}

OfflineBundle sample_bundle(bool with_snapshots = true) {
    OfflineBundle b;
    b.problem_descriptor = "problem.kind = analytic\nproblem.family = f1\n";
    b.seed = 987654321;
    b.basis_size = 2;
    b.tol = 1e-4;
    b.converged = true;
    b.total_eta_evals = 123;

    std::mt19937_64 rng(61);
    std::normal_distribution<double> gauss;
    const int k = 3, m = 7;
    for (int i = 0; i < k; ++i) b.sample_points.push_back(pt(gauss(rng), gauss(rng)));
    Matrix a(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) a(i, j) = gauss(rng);
    b.gram = a * a.transpose();
    if (with_snapshots) {
        for (int i = 0; i < k; ++i) {
            Eigen::VectorXd s(m);
            for (int j = 0; j < m; ++j) s[j] = gauss(rng);
            b.snapshots.push_back(std::move(s));
        }
        b.lifting = Eigen::VectorXd::Zero(m);
    }
    for (int q = 0; q < 2; ++q) {
        Matrix blk(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) blk(i, j) = gauss(rng);
        b.a_reduced.push_back(blk);
        Eigen::VectorXd f(k);
        for (int i = 0; i < k; ++i) f[i] = gauss(rng);
        b.f_reduced.push_back(f);
    }
    for (int i = 0; i < 4; ++i) {
        Matrix t(2, 2);
        t << 1.0 + i, 0.25, 0.25, 2.0;
        b.metric_nodes.push_back({pt(double(i), -double(i)), t, 0.5 + i});
    }
    b.history = {{1, 1, 0.5, 10, 10}, {2, 2, 0.01, 10, 10}};
    return b;
}

struct TempDir {
    std::filesystem::path dir;
    TempDir() {
        dir = std::filesystem::temp_directory_path() /
              ("larb_test_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(dir);
    }
    ~TempDir() { std::filesystem::remove_all(dir); }
};

} // namespace

TEST_CASE("bundle round trip is bitwise exact") {
    TempDir tmp;
    const OfflineBundle b = sample_bundle();
    const auto path = tmp.dir / "b.larb";
    save_bundle(b, path);
    const OfflineBundle r = load_bundle(path);

    CHECK(r.problem_descriptor == b.problem_descriptor);
    CHECK(r.seed == b.seed);
    CHECK(r.basis_size == b.basis_size);
    CHECK(r.tol == b.tol);
    CHECK(r.converged == b.converged);
    CHECK(r.total_eta_evals == b.total_eta_evals);
    REQUIRE(r.sample_count() == b.sample_count());
    for (int i = 0; i < b.sample_count(); ++i)
        CHECK((r.sample_points[std::size_t(i)] - b.sample_points[std::size_t(i)])
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    CHECK((r.gram - b.gram).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(r.snapshots.size() == b.snapshots.size());
    for (std::size_t i = 0; i < b.snapshots.size(); ++i)
        CHECK((r.snapshots[i] - b.snapshots[i]).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(r.a_reduced.size() == b.a_reduced.size());
    for (std::size_t q = 0; q < b.a_reduced.size(); ++q) {
        CHECK((r.a_reduced[q] - b.a_reduced[q]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((r.f_reduced[q] - b.f_reduced[q]).cwiseAbs().maxCoeff() == 0.0);
    }
    REQUIRE(r.metric_nodes.size() == b.metric_nodes.size());
    for (std::size_t i = 0; i < b.metric_nodes.size(); ++i) {
        CHECK((r.metric_nodes[i].point - b.metric_nodes[i].point).cwiseAbs().maxCoeff() ==
              0.0);
        CHECK((r.metric_nodes[i].tensor - b.metric_nodes[i].tensor)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
        CHECK(r.metric_nodes[i].radius == b.metric_nodes[i].radius);
    }
    REQUIRE(r.history.size() == b.history.size());
    CHECK(r.history[1].max_err == b.history[1].max_err);

    // the two files written from the same bundle are identical byte for byte
    const auto path2 = tmp.dir / "b2.larb";
    save_bundle(r, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), {});
    std::string s2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(s1 == s2);
}

TEST_CASE("overwrite requires force") {
    TempDir tmp;
    const OfflineBundle b = sample_bundle();
    const auto path = tmp.dir / "b.larb";
    save_bundle(b, path);
    CHECK_THROWS(save_bundle(b, path));
    CHECK_NOTHROW(save_bundle(b, path, /*force=*/true));
}

TEST_CASE("empty bundle is a legal container") {
    TempDir tmp;
    OfflineBundle b;
    b.problem_descriptor = "problem.kind = analytic\n";
    const auto path = tmp.dir / "empty.larb";
    save_bundle(b, path);
    const OfflineBundle r = load_bundle(path);
    CHECK(r.sample_count() == 0);
    CHECK(r.metric_nodes.empty());
    CHECK(!r.has_snapshots());
}

TEST_CASE("snapshot-free bundle loads and reports no snapshots") {
    TempDir tmp;
    const OfflineBundle b = sample_bundle(/*with_snapshots=*/false);
    const auto path = tmp.dir / "nosnap.larb";
    save_bundle(b, path);
    const OfflineBundle r = load_bundle(path);
    CHECK(!r.has_snapshots());
    CHECK(r.gram.rows() == 3);
    CHECK(r.a_reduced.size() == 2);
}

TEST_CASE("truncated file names the missing section") {
    TempDir tmp;
    const OfflineBundle b = sample_bundle();
    const auto path = tmp.dir / "b.larb";
    save_bundle(b, path);
    const auto cut = tmp.dir / "cut.larb";
    {
        std::ifstream in(path, std::ios::binary);
        std::string all((std::istreambuf_iterator<char>(in)), {});
        std::ofstream out(cut, std::ios::binary);
        out.write(all.data(), std::streamsize(all.size() - 64));
    }
    CHECK_THROWS_WITH_AS(load_bundle(cut), doctest::Contains("truncated section"),
                         std::runtime_error);
}

TEST_CASE("flipped payload byte fails the section checksum") {
    TempDir tmp;
    const OfflineBundle b = sample_bundle();
    const auto path = tmp.dir / "b.larb";
    save_bundle(b, path);
    std::string all;
    {
        std::ifstream in(path, std::ios::binary);
        all.assign((std::istreambuf_iterator<char>(in)), {});
    }
    all[all.size() - 8] ^= 0x40; // inside the last section's payload
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(all.data(), std::streamsize(all.size()));
    }
    CHECK_THROWS_WITH_AS(load_bundle(path), doctest::Contains("checksum"),
                         std::runtime_error);
}

TEST_CASE("asymmetric Gram fails invariant revalidation on load") {
    TempDir tmp;
    OfflineBundle b = sample_bundle();
    b.gram(0, 1) += 1e-3; // silently corrupt the in-memory bundle
    const auto path = tmp.dir / "asym.larb";
    save_bundle(b, path); // save does not revalidate; load must
    CHECK_THROWS_WITH_AS(load_bundle(path), doctest::Contains("not symmetric"),
                         std::runtime_error);
}

TEST_CASE("version mismatch is rejected") {
    TempDir tmp;
    const auto path = tmp.dir / "v.larb";
    {
        std::ofstream out(path);
        out << "LARB-BUNDLE 999\nBINARY\n";
    }
    CHECK_THROWS_WITH_AS(load_bundle(path), doctest::Contains("version"),
                         std::runtime_error);
}
