#include <doctest.h>

#include <cmath>

#include "carving/gaussian.hpp"
#include "carving/rng.hpp"
#include "oracles.hpp"

using namespace carving;

TEST_CASE("conditioning leaves the law unchanged for zero constraint rows") {
    const GaussianLaw law = make_law(Vector::Ones(3), 2.0 * Matrix::Identity(3, 3));
    const GaussianLaw out = condition_on_linear(law, Matrix(0, 3), Vector());
    CHECK(out.mu == law.mu);
    CHECK(out.sigma == law.sigma);
}

TEST_CASE("sum constraint on an isotropic Gaussian") {
    // mu = (1,2,3), Sigma = I, C = (1,1,1), d = 9 -> mu~ = (2,3,4), Sigma~ = I - J/3.
    Vector mu(3);
    mu << 1, 2, 3;
    Matrix C(1, 3);
    C << 1, 1, 1;
    Vector d(1);
    d << 9;
    const GaussianLaw out = condition_on_linear(make_law(mu, Matrix::Identity(3, 3)), C, d);
    Vector want_mu(3);
    want_mu << 2, 3, 4;
    CHECK((out.mu - want_mu).lpNorm<Eigen::Infinity>() < 1e-12);
    const Matrix want_sigma = Matrix::Identity(3, 3) - Matrix::Ones(3, 3) / 3.0;
    CHECK((out.sigma - want_sigma).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(out.rank == 2);
}

TEST_CASE("projection form: conditioning sigma^2 I on X' Y pins the fitted plane") {
    RngStream rng(6);
    const Matrix X = oracles::random_matrix(12, 4, rng);
    const Vector y = oracles::random_vector(12, rng);
    const double sigma2 = 2.3;
    const Matrix C = X.transpose();
    const Vector d = X.transpose() * y;
    const GaussianLaw out =
        condition_on_linear(make_law(Vector::Zero(12), sigma2 * Matrix::Identity(12, 12)), C, d);
    const Matrix proj = X * (X.transpose() * X).inverse() * X.transpose();
    CHECK((out.mu - proj * y).lpNorm<Eigen::Infinity>() < 1e-8);
    const Matrix want = sigma2 * (Matrix::Identity(12, 12) - proj);
    CHECK((out.sigma - want).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("conditioning matches the partitioned-Gaussian oracle on random instances") {
    RngStream rng(14);
    for (int rep = 0; rep < 100; ++rep) {
        const Matrix base = oracles::random_matrix(5, 5, rng);
        const Matrix sigma = base * base.transpose() + 0.4 * Matrix::Identity(5, 5);
        const Vector mu = oracles::random_vector(5, rng);
        const Matrix C = oracles::random_matrix(2, 5, rng);
        const Vector d = oracles::random_vector(2, rng);
        const GaussianLaw out = condition_on_linear(make_law(mu, sigma), C, d);
        const auto want = oracles::partitioned_conditioning(mu, sigma, C, d);
        CHECK((out.mu - want.mu).lpNorm<Eigen::Infinity>() < 1e-8);
        CHECK((out.sigma - want.sigma).lpNorm<Eigen::Infinity>() < 1e-8);
        // Projection identity: the conditioned law lives in the null space.
        CHECK((out.sigma * C.transpose()).lpNorm<Eigen::Infinity>() < 1e-8);
    }
}

TEST_CASE("degenerate conditioning is rejected") {
    Matrix C(2, 3);
    C << 1, 0, 0, 1, 0, 0;  // duplicated row
    CHECK_THROWS_AS(
        condition_on_linear(make_law(Vector::Zero(3), Matrix::Identity(3, 3)), C, Vector::Zero(2)),
        DegenerateConditioning);
}

TEST_CASE("identity whitening is the identity") {
    Matrix A(1, 2);
    A << 1, 0;
    Vector b(1);
    b << 2;
    Vector obs(2);
    obs << 0.5, -0.3;
    const ConstrainedGaussianState st =
        whiten(make_law(Vector::Zero(2), Matrix::Identity(2, 2)), A, b, obs);
    CHECK((st.b_w - b).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(st.A_w.rows() == 1);
    CHECK(st.A_w.cwiseAbs().sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((st.from_whitened(st.origin_point) - obs).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("anisotropic whitening rescales the constraint row") {
    // Sigma = diag(4,1), A = (1,0), b = 2: whitened row has norm 2, offset 2.
    Matrix sigma = Matrix::Zero(2, 2);
    sigma(0, 0) = 4.0;
    sigma(1, 1) = 1.0;
    Matrix A(1, 2);
    A << 1, 0;
    Vector b(1);
    b << 2;
    Vector obs(2);
    obs << 0.4, 0.7;
    const ConstrainedGaussianState st = whiten(make_law(Vector::Zero(2), sigma), A, b, obs);
    CHECK(st.b_w[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(st.A_w.row(0).norm() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("whitened constraints are equivalent to the original ones") {
    RngStream rng(21);
    const Matrix base = oracles::random_matrix(4, 4, rng);
    const Matrix sigma = base * base.transpose() + 0.3 * Matrix::Identity(4, 4);
    const Vector mu = oracles::random_vector(4, rng);
    const Matrix A = oracles::random_matrix(6, 4, rng);
    Vector obs = mu + oracles::random_vector(4, rng);
    Vector b = A * obs + Vector::Ones(6) * 0.5;  // obs strictly feasible
    const ConstrainedGaussianState st = whiten(make_law(mu, sigma), A, b, obs);
    for (int rep = 0; rep < 100; ++rep) {
        const Vector x = oracles::random_vector(st.origin_point.size(), rng);
        const bool in_whitened = ((st.A_w * x - st.b_w).array() <= 1e-8).all();
        const bool in_original = ((A * st.from_whitened(x) - b).array() <= 1e-8).all();
        CHECK(in_whitened == in_original);
    }
}

TEST_CASE("round trip through the whitening maps on the support") {
    RngStream rng(22);
    // Rank-deficient covariance: 5-dim law supported on a 3-dim plane.
    const Matrix base = oracles::random_matrix(5, 3, rng);
    const Matrix sigma = base * base.transpose();
    const Vector mu = oracles::random_vector(5, rng);
    const Vector on_support = mu + base * oracles::random_vector(3, rng);
    const ConstrainedGaussianState st =
        whiten(make_law(mu, sigma), Matrix(0, 5), Vector(), on_support);
    CHECK(st.law.rank == 3);
    CHECK((st.from_whitened(st.to_whitened(on_support)) - on_support).lpNorm<Eigen::Infinity>() <
          1e-8);
}

TEST_CASE("infeasible or off-support start points are rejected") {
    Matrix A(1, 2);
    A << 1, 0;
    Vector b(1);
    b << 0;
    Vector outside(2);
    outside << 1.0, 0.0;
    CHECK_THROWS_AS(whiten(make_law(Vector::Zero(2), Matrix::Identity(2, 2)), A, b, outside),
                    InvalidStartPoint);

    // Point off the covariance support.
    Matrix rank1 = Matrix::Zero(2, 2);
    rank1(0, 0) = 1.0;
    Vector off(2);
    off << 0.0, 1.0;
    CHECK_THROWS_AS(whiten(make_law(Vector::Zero(2), rank1), Matrix(0, 2), Vector(), off),
                    InvalidStartPoint);
}
