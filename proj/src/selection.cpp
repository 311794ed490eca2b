#include "carving/selection.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>

namespace carving {

Matrix standardize_columns(const Matrix& X, Vector& scales) {
    scales.resize(X.cols());
    Matrix Z = X;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double norm = X.col(j).norm();
        scales[j] = norm > 0.0 ? norm : 1.0;
        if (norm > 0.0) Z.col(j) /= norm;
    }
    return Z;
}

SelectionEvent selection_event(const Matrix& X1, const Vector& y1, const LassoFit& fit,
                               bool include_inactive) {
    const auto s = static_cast<Eigen::Index>(fit.support.size());
    if (s == 0) throw EmptySelection("selection_event: empty support");
    if (X1.rows() != y1.size()) throw ValidationError("selection_event: dimension mismatch");

    Matrix Xs(X1.rows(), s);
    for (Eigen::Index k = 0; k < s; ++k) Xs.col(k) = X1.col(fit.support[static_cast<std::size_t>(k)]);

    // (Xs^T Xs)^-1 via QR on Xs with an explicit rank tolerance.
    Eigen::JacobiSVD<Matrix> svd(Xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()[0];
    if (!(smax > 0.0) || svd.singularValues()[s - 1] <= 1e-10 * smax) {
        throw SingularSubmatrix("selection_event: selected submatrix is rank deficient");
    }
    const Vector inv_sv = svd.singularValues().cwiseInverse();
    // pinv = V S^-1 U^T; gram_inv = V S^-2 V^T.
    const Matrix pinv = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
    const Matrix gram_inv = svd.matrixV() * inv_sv.cwiseAbs2().asDiagonal() * svd.matrixV().transpose();

    SelectionEvent ev;
    ev.fit = fit;
    ev.col_scales = Vector::Ones(X1.cols());
    ev.A = fit.signs.asDiagonal() * pinv;
    ev.A = -ev.A;
    ev.b = -fit.lambda * fit.signs.cwiseProduct(gram_inv * fit.signs);

    const Vector slack = ev.b - ev.A * y1;
    if (slack.minCoeff() < -1e-9 * std::max(1.0, ev.b.lpNorm<Eigen::Infinity>())) {
        throw NumericError("selection_event: observed response violates the active constraints");
    }

    if (include_inactive) {
        const Eigen::Index p = X1.cols();
        Matrix Xin(X1.rows(), p - s);
        Eigen::Index c = 0;
        std::size_t k = 0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (k < fit.support.size() && fit.support[k] == j) {
                ++k;
                continue;
            }
            Xin.col(c++) = X1.col(j);
        }
        const Matrix proj_res = Matrix::Identity(X1.rows(), X1.rows()) - Xs * pinv;
        const Matrix top = Xin.transpose() * proj_res / fit.lambda;
        const Vector cross = Xin.transpose() * (Xs * (gram_inv * fit.signs));
        Matrix A0(2 * (p - s), X1.rows());
        Vector b0(2 * (p - s));
        A0.topRows(p - s) = top;
        A0.bottomRows(p - s) = -top;
        b0.head(p - s) = Vector::Ones(p - s) - cross;
        b0.tail(p - s) = Vector::Ones(p - s) + cross;
        ev.inactive_A = std::move(A0);
        ev.inactive_b = std::move(b0);
    }
    return ev;
}

}  // namespace carving
