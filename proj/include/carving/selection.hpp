#pragma once

#include <optional>

#include "carving/lasso.hpp"
#include "carving/types.hpp"

namespace carving {

// Polyhedral description {y1 : A y1 <= b} of the observed Lasso support and
// signs, in the coordinates of the design the fit was computed on.
struct SelectionEvent {
    SplitPlan split;
    LassoFit fit;
    Matrix A;  // s~ x n1, active (sign) constraints
    Vector b;
    std::optional<Matrix> inactive_A;  // 2(p - s~) x n1, verification only
    std::optional<Vector> inactive_b;
    Vector col_scales;  // per-column scaling applied before the fit (1 if none)

    const IndexList& support() const { return fit.support; }
    const Vector& signs() const { return fit.signs; }
    Eigen::Index s() const { return static_cast<Eigen::Index>(fit.support.size()); }
};

// Active constraints A = -diag(xi) (X1_S^T X1_S)^-1 X1_S^T and
// b = -lambda diag(xi) (X1_S^T X1_S)^-1 xi; optionally the inactive system.
// X1 must be the matrix `fit` was computed on.
SelectionEvent selection_event(const Matrix& X1, const Vector& y1, const LassoFit& fit,
                               bool include_inactive = false);

// Columns scaled to unit Euclidean norm; scales returned for unscaling.
// Zero-norm columns keep scale 1 and are left untouched.
Matrix standardize_columns(const Matrix& X, Vector& scales);

}  // namespace carving
