#pragma once

#include <cstdint>
#include <optional>

#include "carving/types.hpp"

namespace carving {

struct LassoFit {
    Vector beta_hat;      // in the coordinates of the X that was fit
    double lambda = 0.0;
    IndexList support;    // sorted indices of nonzero coefficients
    Vector signs;         // +-1 per support entry
    double kkt_residual = 0.0;
    double intercept = 0.0;  // 0 unless fit with an unpenalized intercept
    long sweeps = 0;
};

struct LassoOptions {
    double tol_gap = 1e-9;   // relative duality-gap stop
    long max_sweeps = 100000;
    bool intercept = false;   // unpenalized, excluded from support
    bool best_effort = false; // return the current iterate at max_sweeps
                              // instead of throwing (path/CV interior fits)
    double tol_coef = 0.0;    // > 0: stop on full-sweep coefficient change
                              // instead of the duality gap (path mode)
};

// Minimizer of 0.5*||y - X b||^2 + lambda*||b||_1 by cyclic coordinate
// descent with active-set iterations. Deterministic; pure function of its
// inputs.
LassoFit fit_lasso(const Matrix& X, const Vector& y, double lambda,
                   const LassoOptions& opts = {});

// Descending log-spaced grid from lambda_max(X, y, family) over `decades`.
Vector lambda_grid(const Matrix& X, const Vector& y, Family family,
                   int size = 100, double decades = 4.0);

struct CvCurve {
    Vector grid;       // descending lambdas
    Vector mean_dev;   // mean over folds of per-fold mean deviance
    Vector se;         // standard error of that mean across folds
    Eigen::Index min_idx = 0;
    Eigen::Index one_se_idx = 0;
};

enum class CvRule { min, one_se };

CvCurve cross_validate(const Matrix& X, const Vector& y, Family family,
                       int n_folds, std::uint64_t seed,
                       const Vector& grid = Vector());

double cv_lambda(const Matrix& X, const Vector& y, Family family, int n_folds,
                 CvRule rule, std::uint64_t seed);

// Walks a decreasing lambda path and returns the first fit with exactly
// target_size selected variables (bisecting between grid points when the path
// jumps over it), otherwise the largest fit with fewer.
LassoFit fit_lasso_fixed_size(const Matrix& X, const Vector& y, Family family,
                              Eigen::Index target_size);

namespace detail {

// Unvalidated coordinate-descent core; zero-norm columns stay at zero.
// Warm-startable through beta. Throws ConvergenceError past max_sweeps.
LassoFit cd_solve(const Matrix& X, const Vector& y, double lambda,
                  const LassoOptions& opts, Vector* warm_beta = nullptr);

}  // namespace detail

}  // namespace carving
