#include <doctest.h>

#include <Eigen/QR>
#include <cmath>

#include "carving/lasso.hpp"
#include "carving/rng.hpp"
#include "oracles.hpp"

using namespace carving;

namespace {

Matrix orthonormal_design(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
    RngStream rng(seed);
    const Matrix raw = oracles::random_matrix(n, p, rng);
    Eigen::HouseholderQR<Matrix> qr(raw);
    Matrix q = qr.householderQ() * Matrix::Identity(n, p);
    return q;
}

}  // namespace

TEST_CASE("lambda at or above ||X'y||_inf forces the zero solution") {
    RngStream rng(1);
    const Matrix X = oracles::random_matrix(25, 10, rng);
    const Vector y = oracles::random_vector(25, rng);
    const double lmax = (X.transpose() * y).lpNorm<Eigen::Infinity>();
    const LassoFit fit = fit_lasso(X, y, lmax * 1.0001);
    CHECK(fit.support.empty());
    CHECK(fit.beta_hat.isZero(0.0));
}

TEST_CASE("orthonormal design reduces to soft thresholding") {
    const Matrix X = orthonormal_design(40, 8, 2);
    RngStream rng(3);
    const Vector y = oracles::random_vector(40, rng);
    const Vector z = X.transpose() * y;
    const double lambda = 0.4;
    const LassoFit fit = fit_lasso(X, y, lambda);
    for (Eigen::Index j = 0; j < 8; ++j) {
        const double want = z[j] > lambda ? z[j] - lambda : (z[j] < -lambda ? z[j] + lambda : 0.0);
        CHECK(fit.beta_hat[j] == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("random instance matches the proximal-gradient oracle") {
    RngStream rng(11);
    const Matrix X = oracles::random_matrix(20, 8, rng);
    const Vector y = oracles::random_vector(20, rng);
    const double lambda = 0.3;
    const LassoFit fit = fit_lasso(X, y, lambda);
    const Vector oracle = oracles::ista_lasso(X, y, lambda);
    CHECK((fit.beta_hat - oracle).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("KKT consistency on random instances") {
    RngStream rng(17);
    for (int rep = 0; rep < 5; ++rep) {
        const Matrix X = oracles::random_matrix(30, 50, rng);
        const Vector y = oracles::random_vector(30, rng);
        const double lambda = 0.25 * (X.transpose() * y).lpNorm<Eigen::Infinity>();
        const LassoFit fit = fit_lasso(X, y, lambda);
        CHECK(fit.kkt_residual <= 1e-6);
        const Vector corr = X.transpose() * (y - X * fit.beta_hat);
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            if (fit.beta_hat[j] == 0.0) {
                CHECK(std::abs(corr[j]) <= lambda + 1e-6);
            } else {
                CHECK(corr[j] ==
                      doctest::Approx(lambda * (fit.beta_hat[j] > 0 ? 1.0 : -1.0)).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("path is scaling equivariant and the solver is pure") {
    RngStream rng(23);
    const Matrix X = oracles::random_matrix(30, 12, rng);
    const Vector y = oracles::random_vector(30, rng);
    const double lambda = 0.2 * (X.transpose() * y).lpNorm<Eigen::Infinity>();
    const LassoFit fit = fit_lasso(X, y, lambda);
    const double c = 3.7;
    const LassoFit scaled = fit_lasso(X, c * y, c * lambda);
    REQUIRE(scaled.support == fit.support);
    for (Eigen::Index k = 0; k < fit.signs.size(); ++k) CHECK(scaled.signs[k] == fit.signs[k]);

    const LassoFit again = fit_lasso(X, y, lambda);
    CHECK(again.beta_hat == fit.beta_hat);  // bit identical
}

TEST_CASE("validation errors") {
    Matrix X = Matrix::Ones(4, 2);
    X.col(1).setZero();
    const Vector y = Vector::Ones(4);
    CHECK_THROWS_AS(fit_lasso(X, y, 0.1), ValidationError);
    Matrix X2 = Matrix::Ones(4, 1);
    Vector bad = y;
    bad[1] = std::nan("");
    CHECK_THROWS_AS(fit_lasso(X2, bad, 0.1), ValidationError);
    CHECK_THROWS_AS(fit_lasso(X2, y, -0.5), ValidationError);
}

TEST_CASE("unpenalized intercept is fit and excluded from the support") {
    RngStream rng(31);
    const Matrix X = oracles::random_matrix(50, 4, rng);
    Vector y = oracles::random_vector(50, rng);
    y.array() += 5.0;
    LassoOptions opts;
    opts.intercept = true;
    const LassoFit fit = fit_lasso(X, y, 1.0, opts);
    CHECK(fit.intercept == doctest::Approx(5.0).epsilon(0.2));
    // Centered problem: residual mean is zero at the optimum.
    const double resid_mean = (y.array() - fit.intercept - (X * fit.beta_hat).array()).mean();
    CHECK(std::abs(resid_mean) < 1e-9);
}

TEST_CASE("cross-validation") {
    RngStream rng(5);
    const Matrix X = oracles::random_matrix(60, 30, rng);
    Vector beta = Vector::Zero(30);
    beta[0] = 2.0;
    beta[3] = -1.5;
    const Vector y = X * beta + 0.7 * oracles::random_vector(60, rng);

    SUBCASE("single-candidate grid returns it under either rule") {
        Vector grid(1);
        grid << 0.37;
        const CvCurve curve = cross_validate(X, y, Family::gaussian, 5, 1, grid);
        CHECK(curve.grid[curve.min_idx] == 0.37);
        CHECK(curve.grid[curve.one_se_idx] == 0.37);
    }

    SUBCASE("one-SE lambda is never below the min-rule lambda") {
        for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
            const double lmin = cv_lambda(X, y, Family::gaussian, 5, CvRule::min, seed);
            const double l1se = cv_lambda(X, y, Family::gaussian, 5, CvRule::one_se, seed);
            CHECK(l1se >= lmin);
        }
    }

    SUBCASE("matches an explicit fold-loop oracle exactly") {
        const Vector grid = lambda_grid(X, y, Family::gaussian, 40);
        const CvCurve curve = cross_validate(X, y, Family::gaussian, 5, 99, grid);

        // Reproduce the fold assignment: shuffled order dealt round-robin.
        std::vector<Eigen::Index> perm(60);
        for (Eigen::Index i = 0; i < 60; ++i) perm[static_cast<std::size_t>(i)] = i;
        RngStream fold_rng(99);
        for (Eigen::Index i = 59; i > 0; --i) {
            const auto j = static_cast<Eigen::Index>(
                fold_rng.next_below(static_cast<std::uint64_t>(i) + 1));
            std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
        }
        std::vector<int> fold_of(60);
        for (Eigen::Index i = 0; i < 60; ++i) {
            fold_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
                static_cast<int>(i % 5);
        }
        Matrix fold_means(5, grid.size());
        for (int k = 0; k < 5; ++k) {
            IndexList tr, te;
            for (Eigen::Index i = 0; i < 60; ++i) {
                (fold_of[static_cast<std::size_t>(i)] == k ? te : tr).push_back(i);
            }
            const Matrix Xtr = take_rows(X, tr), Xte = take_rows(X, te);
            const Vector ytr = take_elems(y, tr), yte = take_elems(y, te);
            const auto dfmax = static_cast<Eigen::Index>(std::min(Xtr.rows() - 1, Xtr.cols()));
            for (Eigen::Index g = 0; g < grid.size(); ++g) {
                const Vector bhat = oracles::ista_lasso(Xtr, ytr, grid[g], 1e-11);
                fold_means(k, g) =
                    (yte - Xte * bhat).squaredNorm() / static_cast<double>(te.size());
                // Same saturation convention as the implementation: past the
                // interpolation bound the deviance is frozen.
                if ((bhat.array() != 0.0).count() >= dfmax) {
                    for (Eigen::Index h = g + 1; h < grid.size(); ++h) {
                        fold_means(k, h) = fold_means(k, g);
                    }
                    break;
                }
            }
        }
        const Vector mean_dev = fold_means.colwise().mean();
        Eigen::Index best = 0;
        for (Eigen::Index g = 1; g < grid.size(); ++g) {
            if (mean_dev[g] < mean_dev[best]) best = g;
        }
        // The chosen grid point must agree exactly; the deviance curve within
        // the interior path solver's coefficient tolerance.
        CHECK(curve.min_idx == best);
        CHECK(curve.grid[curve.min_idx] == grid[best]);
        const double rel = (curve.mean_dev - mean_dev).lpNorm<Eigen::Infinity>() /
                           mean_dev.lpNorm<Eigen::Infinity>();
        CHECK(rel < 1e-3);
    }

    SUBCASE("constant response is rejected") {
        CHECK_THROWS_AS(cv_lambda(X, Vector::Ones(60), Family::gaussian, 5, CvRule::min, 1),
                        ValidationError);
    }

    SUBCASE("binomial deviance path") {
        Vector yb(60);
        const Vector eta = X * beta;
        RngStream rb(6);
        for (Eigen::Index i = 0; i < 60; ++i) {
            yb[i] = rb.next_uniform() < 1.0 / (1.0 + std::exp(-eta[i])) ? 1.0 : 0.0;
        }
        Vector grid(1);
        grid << 0.8;
        const CvCurve single = cross_validate(X, yb, Family::binomial, 4, 3, grid);
        CHECK(single.grid[single.min_idx] == 0.8);
        const double lam = cv_lambda(X, yb, Family::binomial, 4, CvRule::one_se, 3);
        CHECK(lam >= cv_lambda(X, yb, Family::binomial, 4, CvRule::min, 3));
    }
}

TEST_CASE("fixed-size selection") {
    SUBCASE("orthonormal design picks the largest correlations") {
        const Matrix X = orthonormal_design(30, 6, 77);
        RngStream rng(78);
        const Vector y = oracles::random_vector(30, rng);
        const Vector z = (X.transpose() * y).cwiseAbs();
        const LassoFit fit = fit_lasso_fixed_size(X, y, Family::gaussian, 2);
        REQUIRE(fit.support.size() == 2);
        std::vector<std::pair<double, Eigen::Index>> order;
        for (Eigen::Index j = 0; j < 6; ++j) order.emplace_back(z[j], j);
        std::sort(order.rbegin(), order.rend());
        IndexList top = {order[0].second, order[1].second};
        std::sort(top.begin(), top.end());
        CHECK(fit.support == top);
    }

    SUBCASE("target at p on a full-rank low-dimensional design") {
        RngStream rng(79);
        const Matrix X = oracles::random_matrix(30, 5, rng);
        const Vector y = oracles::random_vector(30, rng);
        const LassoFit fit = fit_lasso_fixed_size(X, y, Family::gaussian, 5);
        CHECK(fit.support.size() <= 5);
    }

    SUBCASE("matches a dense path-grid oracle on a Toeplitz instance") {
        RngStream rng(80);
        Matrix X(100, 200);
        // AR(1)-correlated columns.
        for (Eigen::Index i = 0; i < 100; ++i) {
            double prev = rng.next_normal();
            X(i, 0) = prev;
            for (Eigen::Index j = 1; j < 200; ++j) {
                prev = 0.5 * prev + std::sqrt(1.0 - 0.25) * rng.next_normal();
                X(i, j) = prev;
            }
        }
        Vector beta = Vector::Zero(200);
        for (Eigen::Index j : {0, 20, 40, 60}) beta[j] = 1.0;
        const Vector y = X * beta + oracles::random_vector(100, rng);

        const LassoFit fit = fit_lasso_fixed_size(X, y, Family::gaussian, 16);
        CHECK(fit.support.size() <= 16);

        // Dense grid oracle: if any of 400 grid points hits exactly 16, the
        // fixed-size search must too.
        const Vector grid = lambda_grid(X, y, Family::gaussian, 400);
        bool oracle_hits = false;
        Vector warm = Vector::Zero(200);
        for (Eigen::Index g = 0; g < grid.size(); ++g) {
            const LassoFit f = detail::cd_solve(X, y, grid[g], LassoOptions{}, &warm);
            if (static_cast<Eigen::Index>(f.support.size()) == 16) {
                oracle_hits = true;
                break;
            }
            if (static_cast<Eigen::Index>(f.support.size()) > 16) break;
        }
        if (oracle_hits) CHECK(fit.support.size() == 16);
    }

    SUBCASE("preconditions") {
        RngStream rng(81);
        const Matrix X = oracles::random_matrix(10, 5, rng);
        const Vector y = oracles::random_vector(10, rng);
        CHECK_THROWS_AS(fit_lasso_fixed_size(X, y, Family::gaussian, 0), ValidationError);
        CHECK_THROWS_AS(fit_lasso_fixed_size(X, y, Family::gaussian, 10), ValidationError);
    }
}
