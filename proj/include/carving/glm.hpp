#pragma once

#include "carving/lasso.hpp"
#include "carving/multi.hpp"
#include "carving/types.hpp"

namespace carving {

struct IrlsState {
    Vector beta;
    Vector pi;       // fitted probabilities, clamped to [1e-5, 1 - 1e-5]
    Vector W_diag;   // pi * (1 - pi)
    Vector y_adj;    // X*beta + (y - pi) / W
    Matrix X_w;      // sqrt(W) * X
    Vector y_w;      // sqrt(W) * y_adj
    double deviance = 0.0;
    long iterations = 0;
    LassoFit fit;    // the weighted-lasso view of beta on (X_w, y_w)
};

// Penalized IRLS: every iteration solves the weighted Lasso exactly; stops
// when the max coefficient change drops below tol. The returned state is
// evaluated at the final beta, so (X_w, y_w) are the self-consistent
// transformed data the carving stage works on.
IrlsState irls_logistic_lasso(const Matrix& X, const Vector& y, double lambda,
                              double tol = 1e-8, long max_iter = 200,
                              Vector* warm_beta = nullptr,
                              const LassoOptions& inner = LassoOptions{});

// Logistic weights/adjusted response at a given coefficient vector, extended
// to arbitrary rows (used to carry the selection-stage fit onto the full data).
void logistic_transform(const Matrix& X, const Vector& y, const Vector& beta,
                        Vector& pi, Vector& w_diag, Vector& y_adj);

// Test hook: freezes the IRLS transform (weights 1/4, y_adj as supplied), which
// reduces the logistic pipeline to the Gaussian one on transformed data.
struct LogisticTestHook {
    Vector y_adj;
    double fixed_lambda = 0.0;
};

// Multicarving for the binomial family: per split, penalized IRLS on the
// selection rows, polyhedron on the weighted data, then the Gaussian carving
// machinery on (X_w, y_w) with unit variance.
InferenceReport carve_logistic(const Dataset& data, const MulticarveConfig& cfg,
                               const LogisticTestHook* hook = nullptr);

}  // namespace carving
