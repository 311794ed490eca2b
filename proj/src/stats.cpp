#include "carving/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace carving {

double norm_quantile(double p) {
    // Wichura (1988), algorithm AS 241, PPND16.
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -kInf;
        if (p == 1.0) return kInf;
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                  3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

double mills_ratio(double x) {
    if (x < 0.0) throw std::invalid_argument("mills_ratio: x must be >= 0");
    if (x < 17.0) return norm_sf(x) / norm_pdf(x);
    // Laplace continued fraction, ~30 levels is far beyond double precision here.
    double cf = 0.0;
    for (int k = 30; k >= 1; --k) cf = k / (x + cf);
    return 1.0 / (x + cf);
}

double truncnorm_tail(double a, double b, double x) {
    if (!(a <= x && x <= b) || !(a < b)) {
        throw std::invalid_argument("truncnorm_tail: need a <= x <= b, a < b");
    }
    // Reflect so that the bulk of the interval sits on the right half-axis;
    // the survival-function form is then the numerically safe one.
    if (a <= 0.0 && b <= 0.0) return 1.0 - truncnorm_tail(-b, -a, -x);
    if (a < 0.0) {
        // Interval straddles 0: plain CDF differences are well conditioned.
        const double fa = norm_cdf(a), fb = norm_cdf(b), fx = norm_cdf(x);
        return std::clamp((fb - fx) / (fb - fa), 0.0, 1.0);
    }
    const double sa = norm_sf(a), sb = (b == kInf) ? 0.0 : norm_sf(b);
    if (sa > 1e-290) {
        const double sx = norm_sf(x);
        return std::clamp((sx - sb) / (sa - sb), 0.0, 1.0);
    }
    // Deep right tail: factor out exp(-a^2/2) through Mills ratios.
    const double ma = mills_ratio(a);
    const double mx = mills_ratio(x) * std::exp(0.5 * (a - x) * (a + x));
    const double mb = (b == kInf) ? 0.0 : mills_ratio(b) * std::exp(0.5 * (a - b) * (a + b));
    return std::clamp((mx - mb) / (ma - mb), 0.0, 1.0);
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - ln_beta);
    if (x > (a + 1.0) / (a + b + 2.0)) {
        return 1.0 - incomplete_beta(b, a, 1.0 - x);
    }
    // Lentz's continued fraction.
    const double tiny = 1e-300;
    double c = 1.0, d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 400; ++m) {
        const double m2 = 2.0 * m;
        double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-15) break;
    }
    return front * h / a;
}

double binomial_lower_bound(long k, long n, double level) {
    if (n <= 0) throw std::invalid_argument("binomial_lower_bound: n <= 0");
    if (k <= 0) return 0.0;
    if (k >= n) {
        // Exact CP bound: (1 - level)^(1/n).
        return std::pow(1.0 - level, 1.0 / static_cast<double>(n));
    }
    // Solve I_q(k, n-k+1) = level for q (CDF of Beta(k, n-k+1) is the
    // P[Bin >= k] tail as a function of q).
    const double a = static_cast<double>(k);
    const double b = static_cast<double>(n - k + 1);
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (incomplete_beta(a, b, mid) < 1.0 - level) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-12) break;
    }
    return 0.5 * (lo + hi);
}

double ks_statistic_uniform(const double* sorted, long n) {
    double d = 0.0;
    for (long i = 0; i < n; ++i) {
        const double u = sorted[i];
        const double hi = (i + 1.0) / n - u;
        const double lo = u - static_cast<double>(i) / n;
        d = std::max(d, std::max(hi, lo));
    }
    return d;
}

double ks_critical(long n, double alpha) {
    // Asymptotic Kolmogorov quantile c(alpha)/sqrt(n).
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c / std::sqrt(static_cast<double>(n));
}

}  // namespace carving
