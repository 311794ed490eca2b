#include "carving/gaussian.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace carving {

namespace {

Eigen::Index psd_rank(const Vector& eigs) {
    const double emax = eigs.maxCoeff();
    if (!(emax > 0.0)) return 0;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
        if (eigs[i] > 1e-10 * emax) ++r;
    }
    return r;
}

}  // namespace

GaussianLaw make_law(Vector mu, Matrix sigma) {
    GaussianLaw law;
    law.mu = std::move(mu);
    law.sigma = 0.5 * (sigma + sigma.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(law.sigma, Eigen::EigenvaluesOnly);
    law.rank = psd_rank(es.eigenvalues());
    return law;
}

GaussianLaw condition_on_linear(const GaussianLaw& law, const Matrix& C, const Vector& d) {
    if (C.rows() == 0) return law;
    if (C.cols() != law.mu.size() || d.size() != C.rows()) {
        throw ValidationError("condition_on_linear: dimension mismatch");
    }
    const Matrix SC = law.sigma * C.transpose();          // m x q
    const Matrix M = C * SC;                              // q x q
    Eigen::SelfAdjointEigenSolver<Matrix> es(M);
    const double emax = es.eigenvalues().maxCoeff();
    if (!(emax > 0.0) || es.eigenvalues().minCoeff() <= 1e-12 * emax) {
        throw DegenerateConditioning("condition_on_linear: C Sigma C^T is singular");
    }
    const Matrix Minv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                        es.eigenvectors().transpose();

    GaussianLaw out;
    out.mu = SC * (Minv * d) + law.mu - SC * (Minv * (C * law.mu));
    Matrix sigma = law.sigma - SC * Minv * SC.transpose();
    out.sigma = 0.5 * (sigma + sigma.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es2(out.sigma, Eigen::EigenvaluesOnly);
    out.rank = psd_rank(es2.eigenvalues());
    return out;
}

ConstrainedGaussianState whiten(const GaussianLaw& law, const Matrix& A, const Vector& b,
                                const Vector& observed) {
    if (A.rows() != b.size() || (A.rows() > 0 && A.cols() != law.mu.size()) ||
        observed.size() != law.mu.size()) {
        throw ValidationError("whiten: dimension mismatch");
    }
    if (A.rows() > 0) {
        const Vector slack = b - A * observed;
        if (slack.minCoeff() < -1e-9 * std::max(1.0, b.lpNorm<Eigen::Infinity>())) {
            throw InvalidStartPoint("whiten: observed point outside the polyhedron");
        }
    }

    Eigen::SelfAdjointEigenSolver<Matrix> es(law.sigma);
    const Vector eigs = es.eigenvalues();
    const double emax = eigs.maxCoeff();
    if (!(emax > 0.0)) throw DegenerateConditioning("whiten: covariance is zero");
    const Eigen::Index m = law.mu.size();
    const Eigen::Index r = psd_rank(eigs);

    ConstrainedGaussianState st;
    st.law = law;
    st.law.rank = r;
    st.sqrt_sigma.resize(m, r);
    st.inv_sqrt.resize(r, m);
    Eigen::Index c = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (eigs[i] > 1e-10 * emax) {
            const double root = std::sqrt(eigs[i]);
            st.sqrt_sigma.col(c) = es.eigenvectors().col(i) * root;
            st.inv_sqrt.row(c) = es.eigenvectors().col(i).transpose() / root;
            ++c;
        }
    }

    st.A_w = A * st.sqrt_sigma;
    st.b_w = b - A * law.mu;
    st.origin_point = st.inv_sqrt * (observed - law.mu);

    // The observed point must live on the law's support (equality constraints
    // already folded into mu/sigma); otherwise whitening cannot represent it.
    const Vector back = st.sqrt_sigma * st.origin_point + law.mu;
    const double scale = std::max(1.0, observed.lpNorm<Eigen::Infinity>());
    if ((back - observed).lpNorm<Eigen::Infinity>() > 1e-6 * scale) {
        throw InvalidStartPoint("whiten: observed point is off the covariance support");
    }
    return st;
}

}  // namespace carving
