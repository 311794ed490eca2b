#include "carving/truncnorm.hpp"

#include <algorithm>
#include <cmath>

#include "carving/stats.hpp"

namespace carving {

std::pair<double, double> truncated_interval(const Vector& eta, const Matrix& A,
                                             const Vector& b, const Vector& y) {
    const double eta_sq = eta.squaredNorm();
    if (!(eta_sq > 0.0)) throw ValidationError("truncated_interval: eta is zero");
    double lo = -kInf, hi = kInf;
    if (A.rows() == 0) return {lo, hi};
    if (A.cols() != y.size() || eta.size() != y.size() || b.size() != A.rows()) {
        throw ValidationError("truncated_interval: dimension mismatch");
    }

    const double t0 = eta.dot(y);
    const Vector slack = b - A * y;
    if (slack.minCoeff() < -1e-9 * std::max(1.0, b.lpNorm<Eigen::Infinity>())) {
        throw ValidationError("truncated_interval: y violates A y <= b");
    }
    const Vector c = (A * eta) / eta_sq;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        if (c[i] > 1e-12) {
            hi = std::min(hi, t0 + slack[i] / c[i]);
        } else if (c[i] < -1e-12) {
            lo = std::max(lo, t0 + slack[i] / c[i]);
        }
        // |c| < 1e-12: row parallel to the section, no bound contributed.
    }
    return {lo, hi};
}

namespace {

// Robert (1995) exponential-proposal rejection for the deep right tail.
double tail_rejection(double lo, double hi, RngStream& rng) {
    const double rate = 0.5 * (lo + std::sqrt(lo * lo + 4.0));
    for (int attempt = 0; attempt < 200; ++attempt) {
        const double x = lo - std::log(rng.next_uniform()) / rate;
        if (x > hi) continue;
        const double d = x - rate;
        if (std::log(rng.next_uniform()) <= -0.5 * d * d + 0.5 * (lo - rate) * (lo - rate)) {
            return x;
        }
    }
    // Essentially zero-width slice this deep in the tail: the conditional
    // density is flat there, a uniform draw is exact to double precision.
    return std::isfinite(hi) ? lo + (hi - lo) * rng.next_uniform() : lo;
}

}  // namespace

double sample_truncated_std_normal(double lo, double hi, RngStream& rng) {
    if (!(lo < hi)) throw ValidationError("sample_truncated_std_normal: need lo < hi");
    if (lo == -kInf && hi == kInf) return norm_quantile(rng.next_uniform());
    if (hi <= 0.0) return -sample_truncated_std_normal(-hi, -lo, rng);

    const double u = rng.next_uniform();
    double x;
    if (lo >= 0.0) {
        const double s_lo = norm_sf(lo);
        if (s_lo < 1e-290) {
            x = tail_rejection(lo, hi, rng);
        } else {
            const double s_hi = hi == kInf ? 0.0 : norm_sf(hi);
            x = -norm_quantile(s_lo + u * (s_hi - s_lo));
        }
    } else {
        // Interval straddles zero; pick the representation whose mass point
        // stays below 1/2 so norm_quantile keeps absolute precision.
        const double c_lo = norm_cdf(lo), c_hi = hi == kInf ? 1.0 : norm_cdf(hi);
        const double c = c_lo + u * (c_hi - c_lo);
        if (c <= 0.5) {
            x = norm_quantile(c);
        } else {
            const double s_lo = norm_sf(lo);
            const double s_hi = hi == kInf ? 0.0 : norm_sf(hi);
            x = -norm_quantile(s_lo + u * (s_hi - s_lo));
        }
    }
    if (std::isnan(x)) x = 0.5 * (std::max(lo, -37.0) + std::min(hi, 37.0));
    return std::clamp(x, lo, hi);
}

}  // namespace carving
