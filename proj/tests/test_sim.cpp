#include <doctest.h>

#include <cmath>

#include "carving/sim.hpp"
#include "oracles.hpp"

using namespace carving;

namespace {

double column_correlation(const Matrix& X, Eigen::Index a, Eigen::Index b) {
    const Vector xa = X.col(a).array() - X.col(a).mean();
    const Vector xb = X.col(b).array() - X.col(b).mean();
    return xa.dot(xb) / (xa.norm() * xb.norm());
}

}  // namespace

TEST_CASE("toeplitz design moments") {
    SUBCASE("independent columns at rho = 0") {
        const Matrix X = gen_toeplitz_design(2000, 6, 0.0, 1);
        double mean_corr = 0.0;
        int count = 0;
        for (Eigen::Index a = 0; a < 6; ++a) {
            for (Eigen::Index b = a + 1; b < 6; ++b) {
                mean_corr += column_correlation(X, a, b);
                ++count;
            }
        }
        CHECK(std::abs(mean_corr / count) < 3.0 / std::sqrt(2000.0));
    }

    SUBCASE("adjacent correlation near rho") {
        const Matrix X = gen_toeplitz_design(2000, 5, 0.6, 2);
        for (Eigen::Index j = 0; j + 1 < 5; ++j) {
            CHECK(column_correlation(X, j, j + 1) == doctest::Approx(0.6).epsilon(0.09));
        }
    }

    SUBCASE("rho = 0.9 regime generates and is finite") {
        const Matrix X = gen_toeplitz_design(50, 40, 0.9, 3);
        CHECK(X.allFinite());
        CHECK(column_correlation(X, 10, 11) > 0.7);
    }

    SUBCASE("determinism") {
        const Matrix a = gen_toeplitz_design(20, 4, 0.5, 9);
        const Matrix b = gen_toeplitz_design(20, 4, 0.5, 9);
        CHECK(a == b);
        CHECK_THROWS_AS(gen_toeplitz_design(10, 3, 1.0, 1), ValidationError);
    }
}

TEST_CASE("block design covariance entries") {
    const Matrix X = gen_block_design(2000, 4);
    REQUIRE(X.cols() == 500);
    // Population values: 0.8 inside the first block, Toeplitz elsewhere.
    CHECK(column_correlation(X, 0, 2) == doctest::Approx(0.8).epsilon(0.08));
    CHECK(column_correlation(X, 9, 11) == doctest::Approx(0.36).epsilon(0.2));
    CHECK(std::abs(column_correlation(X, 0, 400)) < 0.08);
}

TEST_CASE("ribo-like design shape and correlation") {
    const Matrix X = gen_ribo_like_design(5);
    CHECK(X.rows() == 71);
    CHECK(X.cols() == 1000);
    // Strong within-block correlation.
    CHECK(column_correlation(X, 0, 1) > 0.6);
}

TEST_CASE("snr calibration") {
    RngStream rng(6);
    const Matrix X = oracles::random_matrix(200, 10, rng);
    Vector beta = Vector::Zero(10);
    beta[0] = 1.0;
    beta[3] = -2.0;

    SUBCASE("round trip is exact") {
        const double sigma = snr_calibrate(X, beta, 16.0);
        const Vector signal = X * beta;
        const double var =
            (signal.array() - signal.mean()).square().sum() / (signal.size() - 1.0);
        CHECK(var / (sigma * sigma) == doctest::Approx(16.0).epsilon(1e-12));
    }

    SUBCASE("unit sigma when the variance equals the target") {
        const Vector signal = X * beta;
        const double var =
            (signal.array() - signal.mean()).square().sum() / (signal.size() - 1.0);
        const double sigma = snr_calibrate(X, beta, var);
        CHECK(sigma == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("zero signal is rejected") {
        CHECK_THROWS_AS(snr_calibrate(X, Vector::Zero(10), 16.0), ValidationError);
    }
}

TEST_CASE("response generation") {
    RngStream rng(8);
    const Matrix X = oracles::random_matrix(400, 5, rng);
    Vector beta(5);
    beta << 1, 0, -1, 0, 2;

    SUBCASE("noiseless response is the signal") {
        const Vector y = gen_response(X, beta, 0.0, Family::gaussian, 1);
        CHECK((y - X * beta).lpNorm<Eigen::Infinity>() == 0.0);
    }

    SUBCASE("null binomial response is balanced") {
        const Vector y = gen_response(X, Vector::Zero(5), 1.0, Family::binomial, 2);
        CHECK(std::abs(y.mean() - 0.5) < 3.0 / (2.0 * std::sqrt(400.0)));
        for (Eigen::Index i = 0; i < y.size(); ++i) CHECK((y[i] == 0.0 || y[i] == 1.0));
    }

    SUBCASE("byte-identical per seed") {
        const Vector a = gen_response(X, beta, 1.7, Family::gaussian, 3);
        const Vector b = gen_response(X, beta, 1.7, Family::gaussian, 3);
        CHECK(a == b);
    }
}

TEST_CASE("submodel targets") {
    RngStream rng(10);
    const Matrix X = oracles::random_matrix(30, 6, rng);
    Vector beta = Vector::Zero(6);
    beta[0] = 1.5;
    beta[2] = -1.0;

    SUBCASE("screening supports recover the coefficients exactly") {
        const Vector t = submodel_target(X, beta, {0, 2, 4});
        CHECK(t[0] == doctest::Approx(1.5).epsilon(1e-10));
        CHECK(t[1] == doctest::Approx(-1.0).epsilon(1e-10));
        CHECK(t[2] == doctest::Approx(0.0).epsilon(1e-10));
    }

    SUBCASE("matches the normal-equations oracle") {
        const IndexList support = {1, 3, 5};
        const Vector t = submodel_target(X, beta, support);
        Matrix Xs(30, 3);
        for (int k = 0; k < 3; ++k) Xs.col(k) = X.col(support[static_cast<std::size_t>(k)]);
        const Vector want = (Xs.transpose() * Xs).inverse() * Xs.transpose() * (X * beta);
        CHECK((t - want).lpNorm<Eigen::Infinity>() < 1e-10);
    }

    SUBCASE("rank deficiency throws") {
        Matrix Xd = X;
        Xd.col(1) = Xd.col(0);
        CHECK_THROWS_AS(submodel_target(Xd, beta, {0, 1}), SingularSubmatrix);
    }
}

TEST_CASE("sim config parsing") {
    const std::string text = R"(
# toy experiment
design = toeplitz
rho = 0.6
n = 40
p = 12
beta = 1:1, 5:1
sigma = 2
family = gaussian
runs = 2
alpha = 0.05
selector = fixed:3
sigma_mode = known
B = 1, 2
f = 0.8
gamma_min = 0.3
view = selected
seed = 77
)";
    const SimConfig cfg = SimConfig::parse(text);
    CHECK(cfg.n == 40);
    CHECK(cfg.p == 12);
    CHECK(cfg.rho == 0.6);
    REQUIRE(cfg.beta.size() == 2);
    CHECK(cfg.beta[0].first == 0);  // 1-based in the file
    CHECK(cfg.beta[1].first == 4);
    CHECK(cfg.selector == SelectorRule::fixed_size);
    CHECK(cfg.target_size == 3);
    CHECK(cfg.B_list == std::vector<long>{1, 2});
    CHECK(cfg.optimized_gamma);
    CHECK(cfg.method_grid().size() == 2);

    CHECK_THROWS_AS(SimConfig::parse("nonsense"), ValidationError);
    CHECK_THROWS_AS(SimConfig::parse("design = warp"), ValidationError);
    // snr and sigma together are ambiguous.
    CHECK_THROWS_AS(SimConfig::parse("n = 10\np = 2\nsigma = 1\nsnr = 4"), ValidationError);
}

TEST_CASE("experiment driver and metric replay") {
    SimConfig cfg;
    cfg.design = DesignKind::toeplitz;
    cfg.rho = 0.3;
    cfg.n = 40;
    cfg.p = 10;
    cfg.beta = {{0, 1.5}, {4, -1.0}};
    cfg.sigma = 1.0;
    cfg.runs = 4;
    cfg.selector = SelectorRule::fixed_size;
    cfg.target_size = 3;
    cfg.sigma_mode = SigmaMode::known;
    cfg.B_list = {2};
    cfg.f_list = {0.8};
    cfg.gamma_list = {0.3};
    cfg.master_seed = 123;
    cfg.chain_samples = 500;
    cfg.threads = 2;

    const ExperimentResult result = run_experiment(cfg);
    REQUIRE(result.records.size() == 4);

    SUBCASE("metrics are a pure function of the records") {
        const MetricsTable replay = compute_metrics(cfg, result.records);
        REQUIRE(replay.rows.size() == result.table.rows.size());
        for (std::size_t i = 0; i < replay.rows.size(); ++i) {
            CHECK(replay.rows[i].metric == result.table.rows[i].metric);
            CHECK(replay.rows[i].value == result.table.rows[i].value);
        }
    }

    SUBCASE("expected metric rows are present with sane values") {
        bool saw_fwer = false, saw_power = false, saw_adjusted = false;
        for (const auto& row : result.table.rows) {
            if (row.metric == "fwer") {
                saw_fwer = true;
                CHECK(row.value >= 0.0);
                CHECK(row.value <= 1.0);
            }
            if (row.metric == "power") saw_power = true;
            if (row.metric == "adjusted_power") saw_adjusted = true;
        }
        CHECK(saw_fwer);
        CHECK(saw_power);
        CHECK(saw_adjusted);
    }

    SUBCASE("adjusted power threshold agrees with an independent sort") {
        // Reconstruct the empirical critical value directly from the records.
        const Vector beta_true = cfg.beta_vector();
        std::vector<double> min_null;
        for (const auto& run : result.records) {
            double mn = 1.0;
            const Vector& agg = run[0].aggregated;
            for (Eigen::Index j = 0; j < cfg.p; ++j) {
                if (beta_true[j] == 0.0) mn = std::min(mn, agg[j]);
            }
            min_null.push_back(mn);
        }
        std::sort(min_null.begin(), min_null.end());
        const auto k = static_cast<std::size_t>(std::floor(cfg.alpha * min_null.size()));
        const double crit = k >= 1 ? min_null[k - 1] : 0.0;
        double adj = 0.0;
        for (const auto& run : result.records) {
            long hits = 0;
            for (const auto& [idx, val] : cfg.beta) {
                (void)val;
                if (run[0].aggregated[idx] < crit) ++hits;
            }
            adj += static_cast<double>(hits) / 2.0;
        }
        adj /= static_cast<double>(result.records.size());
        for (const auto& row : result.table.rows) {
            if (row.metric == "adjusted_power") CHECK(row.value == doctest::Approx(adj));
        }
    }

    SUBCASE("thread count does not change the records") {
        SimConfig cfg2 = cfg;
        cfg2.threads = 1;
        const ExperimentResult again = run_experiment(cfg2);
        for (std::size_t r = 0; r < result.records.size(); ++r) {
            CHECK(again.records[r][0].aggregated == result.records[r][0].aggregated);
        }
    }
}

TEST_CASE("design generators emit finite values only") {
    CHECK(gen_toeplitz_design(30, 20, 0.6, 11).allFinite());
    CHECK(gen_ribo_like_design(11).allFinite());
}

TEST_CASE("metric bookkeeping on handcrafted records") {
    SimConfig cfg;
    cfg.design = DesignKind::toeplitz;
    cfg.rho = 0.0;
    cfg.n = 10;
    cfg.p = 4;
    cfg.beta = {};  // global null: power reported as 0
    cfg.sigma = 1.0;
    cfg.runs = 4;
    cfg.sigma_mode = SigmaMode::known;
    cfg.B_list = {1};
    cfg.f_list = {0.8};
    cfg.gamma_list = {0.3};
    cfg.master_seed = 9;

    std::vector<std::vector<RunMethodResult>> records(4, std::vector<RunMethodResult>(1));
    for (int r = 0; r < 4; ++r) records[r][0].aggregated = Vector::Ones(4);
    records[1][0].aggregated[2] = 0.01;  // one run with a (false) rejection

    const MetricsTable table = compute_metrics(cfg, records);
    for (const auto& row : table.rows) {
        if (row.metric == "fwer") CHECK(row.value == doctest::Approx(0.25));
        if (row.metric == "power") CHECK(row.value == 0.0);
        if (row.metric == "adjusted_power") CHECK(row.value == 0.0);
    }
}

TEST_CASE("raising alpha never lowers the adjusted power") {
    SimConfig cfg;
    cfg.design = DesignKind::toeplitz;
    cfg.rho = 0.0;
    cfg.n = 10;
    cfg.p = 3;
    cfg.beta = {{0, 1.0}};
    cfg.sigma = 1.0;
    cfg.runs = 20;
    cfg.sigma_mode = SigmaMode::known;
    cfg.B_list = {1};
    cfg.f_list = {0.8};
    cfg.gamma_list = {0.3};
    cfg.master_seed = 10;

    RngStream rng(44);
    std::vector<std::vector<RunMethodResult>> records(20, std::vector<RunMethodResult>(1));
    for (auto& run : records) {
        Vector agg(3);
        for (Eigen::Index j = 0; j < 3; ++j) agg[j] = rng.next_uniform();
        run[0].aggregated = agg;
    }
    double prev = -1.0;
    for (const double alpha : {0.01, 0.05, 0.1, 0.2, 0.5}) {
        cfg.alpha = alpha;
        const MetricsTable table = compute_metrics(cfg, records);
        for (const auto& row : table.rows) {
            if (row.metric == "adjusted_power") {
                CHECK(row.value >= prev);
                prev = row.value;
            }
        }
    }
}
