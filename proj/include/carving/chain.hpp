#pragma once

#include <utility>

#include "carving/gaussian.hpp"
#include "carving/rng.hpp"
#include "carving/types.hpp"

namespace carving {

struct ChainDiagnostics {
    long steps = 0;
    long stuck_steps = 0;
    long samples = 0;
    bool aborted = false;
    std::uint64_t seed = 0;
};

// Hit-and-run over {x : A_w x <= b_w} targeting N(0, I_r): each step draws an
// isotropic random direction, truncates the line against the polyhedron and
// moves by a univariate truncated standard normal draw.
class HitAndRunChain {
public:
    HitAndRunChain(const ConstrainedGaussianState& state, std::uint64_t seed);

    void step();
    const Vector& current() const { return x_; }
    const ChainDiagnostics& diagnostics() const { return diag_; }
    Eigen::Index dim() const { return x_.size(); }

private:
    Matrix A_;
    Vector b_;
    Vector x_;
    Vector ax_;
    Vector dir_;
    RngStream rng_;
    ChainDiagnostics diag_;
    long consecutive_stuck_ = 0;
};

// Runs burn-in plus n_samples * thin steps and returns the thinned states
// (rows) in whitened coordinates.
std::pair<Matrix, ChainDiagnostics> hit_and_run(const ConstrainedGaussianState& state,
                                                const ChainConfig& cfg);

// Chain length floor for optimized-quantile aggregation:
// ceil(s * (1 - log(gamma_min)) / (alpha * gamma_min)).
long min_chain_samples(Eigen::Index s, double alpha, double gamma_min);

}  // namespace carving
