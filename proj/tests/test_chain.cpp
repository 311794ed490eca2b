#include <doctest.h>

#include <cmath>

#include "carving/chain.hpp"
#include "carving/stats.hpp"
#include "carving/truncnorm.hpp"
#include "oracles.hpp"

using namespace carving;

TEST_CASE("truncated_interval") {
    SUBCASE("no constraint rows: the whole line") {
        Vector eta = Vector::Ones(3);
        const auto [lo, hi] = truncated_interval(eta, Matrix(0, 3), Vector(), Vector::Zero(3));
        CHECK(lo == -kInf);
        CHECK(hi == kInf);
    }

    SUBCASE("one-dimensional halfline") {
        Matrix A(1, 1);
        A << 1;
        Vector b(1);
        b << 0;
        Vector eta(1), y(1);
        eta << 1;
        y << -1;
        const auto [lo, hi] = truncated_interval(eta, A, b, y);
        CHECK(lo == -kInf);
        CHECK(hi == doctest::Approx(0.0).epsilon(1e-12));
    }

    SUBCASE("agrees with a grid search oracle") {
        RngStream rng(33);
        for (int rep = 0; rep < 10; ++rep) {
            const Matrix A = oracles::random_matrix(5, 3, rng);
            const Vector y = oracles::random_vector(3, rng);
            const Vector b = A * y + 0.3 * Vector::Ones(5);
            Vector eta = oracles::random_vector(3, rng);
            const auto [lo, hi] = truncated_interval(eta, A, b, y);
            const double t0 = eta.dot(y);
            // Scan t on a fine grid and find the feasible extent of the line.
            double grid_lo = t0, grid_hi = t0;
            const double sq = eta.squaredNorm();
            for (double t = t0; t > t0 - 20.0; t -= 1e-4) {
                const Vector pt = y + (t - t0) * eta / sq;
                if (((A * pt - b).array() > 1e-12).any()) break;
                grid_lo = t;
            }
            for (double t = t0; t < t0 + 20.0; t += 1e-4) {
                const Vector pt = y + (t - t0) * eta / sq;
                if (((A * pt - b).array() > 1e-12).any()) break;
                grid_hi = t;
            }
            if (std::isfinite(lo)) CHECK(std::abs(lo - grid_lo) < 2e-4);
            if (std::isfinite(hi)) CHECK(std::abs(hi - grid_hi) < 2e-4);
            CHECK(lo <= t0);
            CHECK(hi >= t0);
        }
    }

    SUBCASE("zero direction is rejected") {
        CHECK_THROWS_AS(
            truncated_interval(Vector::Zero(2), Matrix::Identity(2, 2), Vector::Ones(2),
                               Vector::Zero(2)),
            ValidationError);
    }
}

namespace {

ConstrainedGaussianState box_state(double lo, double hi) {
    Matrix A(4, 2);
    A << 1, 0, -1, 0, 0, 1, 0, -1;
    Vector b(4);
    b << hi, -lo, hi, -lo;
    Vector start(2);
    start << 0.5 * (lo + hi), 0.5 * (lo + hi);
    return whiten(make_law(Vector::Zero(2), Matrix::Identity(2, 2)), A, b, start);
}

}  // namespace

TEST_CASE("unconstrained chain reproduces standard normal moments") {
    ConstrainedGaussianState st;
    st.law = make_law(Vector::Zero(3), Matrix::Identity(3, 3));
    st.A_w = Matrix(0, 3);
    st.b_w = Vector();
    st.sqrt_sigma = Matrix::Identity(3, 3);
    st.inv_sqrt = Matrix::Identity(3, 3);
    st.origin_point = Vector::Zero(3);
    ChainConfig cfg;
    cfg.n_samples = 20000;
    cfg.burn_in = 500;
    cfg.seed = 5;
    const auto [samples, diag] = hit_and_run(st, cfg);
    for (Eigen::Index j = 0; j < 3; ++j) {
        const double mean = samples.col(j).mean();
        const double var = (samples.col(j).array() - mean).square().mean();
        CHECK(std::abs(mean) < 0.05);
        CHECK(std::abs(var - 1.0) < 0.1);
    }
    CHECK(diag.stuck_steps == 0);
}

TEST_CASE("box-truncated chain matches a rejection-sampling oracle") {
    const ConstrainedGaussianState st = box_state(0.0, 1.0);
    ChainConfig cfg;
    cfg.n_samples = 20000;
    cfg.burn_in = 1000;
    cfg.seed = 17;
    const auto [samples, diag] = hit_and_run(st, cfg);

    // Containment with slack.
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        CHECK(((st.A_w * samples.row(i).transpose() - st.b_w).array() <= 1e-9).all());
    }

    RngStream rng(18);
    Matrix A(4, 2);
    A << 1, 0, -1, 0, 0, 1, 0, -1;
    Vector b(4);
    b << 1, 0, 1, 0;
    const auto oracle = oracles::rejection_truncated_gaussian(A, b, 2, 20000, rng);
    for (int j = 0; j < 2; ++j) {
        std::vector<double> got(static_cast<std::size_t>(samples.rows()));
        std::vector<double> want(oracle.size());
        for (Eigen::Index i = 0; i < samples.rows(); ++i) {
            got[static_cast<std::size_t>(i)] = samples(i, j);
        }
        for (std::size_t i = 0; i < oracle.size(); ++i) want[i] = oracle[i][j];
        CHECK(oracles::ks_two_sample(got, want) < 0.05);
    }
}

TEST_CASE("one-dimensional chain is stationary at the truncated normal") {
    Matrix A(2, 1);
    A << 1, -1;
    Vector b(2);
    b << 2.0, 0.5;  // -0.5 <= x <= 2
    Vector start(1);
    start << 0.3;
    const ConstrainedGaussianState st =
        whiten(make_law(Vector::Zero(1), Matrix::Identity(1, 1)), A, b, start);
    ChainConfig cfg;
    cfg.n_samples = 50000;
    cfg.burn_in = 1000;
    cfg.seed = 23;
    const auto [samples, diag] = hit_and_run(st, cfg);
    std::vector<double> x(static_cast<std::size_t>(samples.rows()));
    for (Eigen::Index i = 0; i < samples.rows(); ++i) x[static_cast<std::size_t>(i)] = samples(i, 0);
    const double flo = norm_cdf(-0.5), fhi = norm_cdf(2.0);
    const double ks =
        oracles::ks_one_sample(x, [&](double v) { return (norm_cdf(v) - flo) / (fhi - flo); });
    CHECK(ks < 0.03);
}

TEST_CASE("chains are reproducible from their seed") {
    const ConstrainedGaussianState st = box_state(-1.0, 1.0);
    ChainConfig cfg;
    cfg.n_samples = 500;
    cfg.burn_in = 50;
    cfg.seed = 3141;
    const auto [s1, d1] = hit_and_run(st, cfg);
    const auto [s2, d2] = hit_and_run(st, cfg);
    CHECK(s1 == s2);
}

TEST_CASE("a degenerate section reports a stuck chain") {
    // x must satisfy x <= 0 and -x <= 0: the single point 0 in 2-d.
    Matrix A(4, 2);
    A << 1, 0, -1, 0, 0, 1, 0, -1;
    Vector b = Vector::Zero(4);
    ConstrainedGaussianState st;
    st.law = make_law(Vector::Zero(2), Matrix::Identity(2, 2));
    st.A_w = A;
    st.b_w = b;
    st.sqrt_sigma = Matrix::Identity(2, 2);
    st.inv_sqrt = Matrix::Identity(2, 2);
    st.origin_point = Vector::Zero(2);
    ChainConfig cfg;
    cfg.n_samples = 5000;
    cfg.burn_in = 0;
    cfg.seed = 1;
    CHECK_THROWS_AS(hit_and_run(st, cfg), StuckChain);
}

TEST_CASE("minimum chain length formula") {
    // s (1 - log g) / (alpha g), rounded up.
    CHECK(min_chain_samples(10, 0.05, 0.3) ==
          static_cast<long>(std::ceil(10.0 * (1.0 - std::log(0.3)) / (0.05 * 0.3))));
    CHECK(min_chain_samples(1, 0.05, 1.0) == 20);
    CHECK_THROWS_AS(min_chain_samples(5, 0.0, 0.5), ValidationError);
}
