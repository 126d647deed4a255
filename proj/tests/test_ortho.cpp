#include <doctest.h>

#include <random>

#include "larb/ortho.hpp"

using namespace larb;

namespace {

Matrix random_spd(int n, std::mt19937_64& rng, double cond = 1e3) {
    std::normal_distribution<double> gauss;
    Matrix q(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) q(i, j) = gauss(rng);
    const Eigen::HouseholderQR<Matrix> qr(q);
    const Matrix orth = qr.householderQ();
    Eigen::VectorXd ev(n);
    for (int i = 0; i < n; ++i)
        ev[i] = std::pow(cond, n == 1 ? 0.0 : -double(i) / double(n - 1));
    Matrix g = orth * ev.asDiagonal() * orth.transpose();
    return 0.5 * (g + g.transpose());
}

} // namespace

TEST_CASE("compute_beta on trivial Gram matrices") {
    Matrix g1(1, 1);
    g1 << 4.0;
    const BetaResult r1 = compute_beta(g1);
    REQUIRE(r1.ok());
    CHECK(r1.beta(0, 0) == doctest::Approx(0.5));

    const Matrix gi = Matrix::Identity(5, 5);
    const BetaResult ri = compute_beta(gi);
    REQUIRE(ri.ok());
    CHECK((ri.beta - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            if (i != j) CHECK(ri.beta_tilde(i, j) == 0.0);
}

TEST_CASE("compute_gamma on trivial inputs") {
    Matrix b1(1, 1);
    b1 << 0.5;
    CHECK(compute_gamma(b1)(0, 0) == doctest::Approx(0.5));
    const Matrix gi = compute_gamma(Matrix::Identity(4, 4));
    CHECK((gi - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gamma orthonormalizes the Gram matrix and matches Cholesky") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 10;
        const Matrix g = random_spd(n, rng, 1e4);
        std::int64_t ops = 0;
        const auto gamma_opt = try_orthonormalize(g, &ops);
        REQUIRE(gamma_opt.has_value());
        const Matrix& gamma = *gamma_opt;

        CHECK((gamma * g * gamma.transpose() - Matrix::Identity(n, n))
                  .cwiseAbs()
                  .maxCoeff() <= 1e-10);

        // the unique lower-triangular positive-diagonal change of basis with
        // gamma G gamma^T = I is the inverse of the lower Cholesky factor
        const Matrix l = Eigen::LLT<Matrix>(g).matrixL();
        const Matrix linv = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
        CHECK((gamma - linv).cwiseAbs().maxCoeff() <=
              1e-10 * linv.cwiseAbs().maxCoeff());

        for (int i = 0; i < n; ++i) {
            CHECK(gamma(i, i) > 0.0);
            for (int j = i + 1; j < n; ++j) CHECK(gamma(i, j) == 0.0);
        }
    }
}

TEST_CASE("near-dependent rows are reported, not inverted") {
    // two identical vectors: Gram [[1,1],[1,1]]
    Matrix g(2, 2);
    g << 1.0, 1.0, 1.0, 1.0;
    const BetaResult r = compute_beta(g);
    CHECK(!r.ok());
    CHECK(r.failed_index == 1);

    Matrix g0(2, 2);
    g0 << 1.0, 0.0, 0.0, 0.0; // zero diagonal entry
    CHECK(compute_beta(g0).failed_index == 1);
}

TEST_CASE("orthonormalize_local drops the dependent snapshot and extends") {
    // samples 0 and 1 identical; candidate order can pull in sample 2
    Matrix g(3, 3);
    g << 1.0, 1.0, 0.2, //
        1.0, 1.0, 0.2,  //
        0.2, 0.2, 2.0;
    const LocalOrtho ol = orthonormalize_local(g, {0, 1}, {0, 1, 2});
    REQUIRE(ol.ids.size() == 2);
    CHECK(ol.ids[0] == 0);
    CHECK(ol.ids[1] == 2);
    Matrix sub(2, 2);
    sub << g(0, 0), g(0, 2), g(2, 0), g(2, 2);
    CHECK((ol.gamma * sub * ol.gamma.transpose() - Matrix::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
}

TEST_CASE("orthonormalization cost stays cubic") {
    std::mt19937_64 rng(23);
    for (int n : {5, 10, 20}) {
        const Matrix g = random_spd(n, rng, 10.0);
        std::int64_t ops = 0;
        REQUIRE(try_orthonormalize(g, &ops).has_value());
        CHECK(ops <= 6 * std::int64_t(n) * n * n);
    }
}
