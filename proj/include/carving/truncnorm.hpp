#pragma once

#include <utility>

#include "carving/rng.hpp"
#include "carving/types.hpp"

namespace carving {

// Maximal interval [lo, hi] of t such that A (y + (t - eta'y) eta / ||eta||^2)
// stays inside {A x <= b}; the Lee-style truncation of eta'Y with the
// projection orthogonal to eta held fixed. Rows with |A eta| / ||eta||^2 below
// 1e-12 are parallel to the section and contribute no bound.
std::pair<double, double> truncated_interval(const Vector& eta, const Matrix& A,
                                             const Vector& b, const Vector& y);

// One draw from N(0,1) restricted to [lo, hi] by inverse CDF, with a
// tail-stable rejection fallback once the CDF mass underflows. Never NaN.
double sample_truncated_std_normal(double lo, double hi, RngStream& rng);

}  // namespace carving
