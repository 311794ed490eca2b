#include "carving/chain.hpp"

#include <cmath>

#include "carving/truncnorm.hpp"

namespace carving {

HitAndRunChain::HitAndRunChain(const ConstrainedGaussianState& state, std::uint64_t seed)
    : A_(state.A_w), b_(state.b_w), x_(state.origin_point), rng_(seed) {
    if (x_.size() == 0) throw ValidationError("hit_and_run: zero-dimensional state");
    ax_ = A_.rows() > 0 ? Vector(A_ * x_) : Vector();
    dir_.resize(x_.size());
    diag_.seed = seed;
}

void HitAndRunChain::step() {
    // Isotropic unit direction.
    double norm_sq = 0.0;
    do {
        for (Eigen::Index i = 0; i < dir_.size(); ++i) dir_[i] = rng_.next_normal();
        norm_sq = dir_.squaredNorm();
    } while (!(norm_sq > 1e-24));
    dir_ /= std::sqrt(norm_sq);

    const double t0 = dir_.dot(x_);
    double lo = -kInf, hi = kInf;
    if (A_.rows() > 0) {
        for (Eigen::Index i = 0; i < A_.rows(); ++i) {
            const double c = A_.row(i).dot(dir_);
            const double slack = b_[i] - ax_[i];
            if (c > 1e-12) {
                hi = std::min(hi, t0 + slack / c);
            } else if (c < -1e-12) {
                lo = std::max(lo, t0 + slack / c);
            }
        }
    }
    ++diag_.steps;
    if (!(hi - lo > 1e-12)) {
        ++diag_.stuck_steps;
        if (++consecutive_stuck_ > 1000) {
            throw StuckChain("hit_and_run: line section degenerate for >1000 consecutive steps");
        }
        return;
    }
    consecutive_stuck_ = 0;

    const double t = sample_truncated_std_normal(lo, hi, rng_);
    const double delta = t - t0;
    x_.noalias() += delta * dir_;
    if (A_.rows() > 0) {
        ax_.noalias() += delta * (A_ * dir_);
        if (diag_.steps % 4096 == 0) ax_ = A_ * x_;  // curb drift
    }
}

std::pair<Matrix, ChainDiagnostics> hit_and_run(const ConstrainedGaussianState& state,
                                                const ChainConfig& cfg) {
    if (cfg.n_samples < 1) throw ValidationError("hit_and_run: n_samples must be >= 1");
    HitAndRunChain chain(state, cfg.seed);
    for (long i = 0; i < cfg.burn_in; ++i) chain.step();
    Matrix samples(cfg.n_samples, state.origin_point.size());
    const long thin = std::max<long>(1, cfg.thin);
    for (long s = 0; s < cfg.n_samples; ++s) {
        for (long t = 0; t < thin; ++t) chain.step();
        samples.row(s) = chain.current().transpose();
    }
    ChainDiagnostics diag = chain.diagnostics();
    diag.samples = cfg.n_samples;
    return {std::move(samples), diag};
}

long min_chain_samples(Eigen::Index s, double alpha, double gamma_min) {
    if (!(alpha > 0.0) || !(gamma_min > 0.0 && gamma_min <= 1.0)) {
        throw ValidationError("min_chain_samples: bad alpha or gamma_min");
    }
    const double v = static_cast<double>(s) * (1.0 - std::log(gamma_min)) / (alpha * gamma_min);
    return static_cast<long>(std::ceil(v));
}

}  // namespace carving
