#pragma once

#include <cstdint>
#include <optional>

#include "carving/types.hpp"

namespace carving {

struct GaussianLaw {
    Vector mu;
    Matrix sigma;  // symmetric PSD, possibly rank deficient
    Eigen::Index rank = 0;
};

GaussianLaw make_law(Vector mu, Matrix sigma);

// Law of Z | C Z = d for Z ~ N(mu, Sigma):
//   mu~    = Sigma C' (C Sigma C')^-1 d + (I - Sigma C' (C Sigma C')^-1 C) mu
//   Sigma~ = Sigma - Sigma C' (C Sigma C')^-1 C Sigma
// Zero-row C returns the law unchanged. Singular C Sigma C' throws
// DegenerateConditioning.
GaussianLaw condition_on_linear(const GaussianLaw& law, const Matrix& C, const Vector& d);

struct EarlyAbort {
    double threshold = 0.0;  // largest raw p that could still matter downstream
    long check_every = 500;
    double confidence = 0.99;
};

struct ChainConfig {
    long n_samples = 1000;
    long burn_in = 100;
    long thin = 1;
    std::uint64_t seed = 0;
    std::optional<EarlyAbort> early_abort;
};

// Sampling representation after whitening: A_w x <= b_w on x ~ N(0, I_r),
// with affine maps between original and whitened coordinates.
struct ConstrainedGaussianState {
    GaussianLaw law;
    Matrix A_w;           // k x r
    Vector b_w;
    Matrix sqrt_sigma;    // m x r, forward factor of Sigma
    Matrix inv_sqrt;      // r x m
    Vector origin_point;  // whitened image of the observed point

    Vector to_whitened(const Vector& x) const { return inv_sqrt * (x - law.mu); }
    Vector from_whitened(const Vector& w) const { return sqrt_sigma * w + law.mu; }
};

// Eigendecomposition-based whitening of `law` with constraints A x <= b and
// the observed point mapped to the origin of the chain. Eigenvalues below
// 1e-10 * max are treated as zero.
ConstrainedGaussianState whiten(const GaussianLaw& law, const Matrix& A, const Vector& b,
                                const Vector& observed);

}  // namespace carving
