#pragma once

#include <cmath>

#include "carving/types.hpp"

namespace carving {

// Standard normal density, CDF and survival function. The survival form keeps
// full relative precision in the right tail where 1 - Phi(x) would cancel.
inline double norm_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779399461;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.7071067811865475244008444);
}

inline double norm_sf(double x) {
    return 0.5 * std::erfc(x * 0.7071067811865475244008444);
}

// Inverse standard normal CDF (Wichura's AS 241, double precision).
double norm_quantile(double p);

// Mills ratio Phi(-x)/phi(x) for x >= 0, stable far beyond erfc underflow.
double mills_ratio(double x);

// P[X >= x | a <= X <= b] for X ~ N(0,1), a < b, a <= x <= b.
// Stable in deep tails (log/Mills-ratio branch once erfc underflows).
double truncnorm_tail(double a, double b, double x);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

// One-sided Clopper-Pearson lower confidence bound for a binomial proportion:
// largest q such that P[Bin(n, q) >= k] <= 1 - level. Zero when k == 0.
double binomial_lower_bound(long k, long n, double level);

// Kolmogorov-Smirnov: sup-distance of a sample against a CDF given as sorted
// probability-integral transforms, plus the asymptotic critical value.
double ks_statistic_uniform(const double* sorted, long n);
double ks_critical(long n, double alpha);

}  // namespace carving
