#include "carving/carve.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "carving/lasso.hpp"
#include "carving/stats.hpp"
#include "carving/truncnorm.hpp"

namespace carving {

CarveProblem make_problem(const SelectionEvent& event, const Matrix& X, const Vector& y,
                          double sigma) {
    if (!(sigma > 0.0)) throw ValidationError("carve: sigma must be positive");
    CarveProblem pb;
    const auto s = event.s();
    pb.Z.resize(X.rows(), s);
    for (Eigen::Index k = 0; k < s; ++k) {
        const Eigen::Index j = event.support()[static_cast<std::size_t>(k)];
        pb.Z.col(k) = X.col(j) / event.col_scales[j];
    }
    pb.y = y;
    pb.sel_idx = event.split.selection_idx;
    pb.inf_idx = event.split.inference_idx;
    pb.A = event.A;
    pb.b = event.b;
    pb.signs = event.signs();
    pb.support = event.support();
    pb.sigma = sigma;
    return pb;
}

namespace {

Matrix sym_inverse(const Matrix& M, const char* what) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(M);
    const double emax = es.eigenvalues().maxCoeff();
    if (!(emax > 0.0) || es.eigenvalues().minCoeff() <= 1e-12 * emax) {
        throw SingularSubmatrix(what);
    }
    return es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

}  // namespace

CarveTransform carve_transform(const CarveProblem& pb, const IndexList& target_pos) {
    const Eigen::Index s = pb.s();
    const Eigen::Index n1 = pb.n1();
    const Eigen::Index n2 = pb.n2();
    if (target_pos.empty()) throw ValidationError("carve_transform: empty target");
    if (s >= n1) throw SingularSubmatrix("carve_transform: s >= n1 (sparsity condition violated)");

    const Matrix Z1 = take_rows(pb.Z, pb.sel_idx);
    const Matrix Z2 = n2 > 0 ? take_rows(pb.Z, pb.inf_idx) : Matrix(0, s);
    const Vector y1 = take_elems(pb.y, pb.sel_idx);
    const Vector y2 = n2 > 0 ? take_elems(pb.y, pb.inf_idx) : Vector();

    const Matrix gram1 = Z1.transpose() * Z1;
    const Matrix g1 = sym_inverse(gram1, "carve_transform: singular selection Gram matrix");

    std::vector<bool> in_target(static_cast<std::size_t>(s), false);
    for (const Eigen::Index k : target_pos) {
        if (k < 0 || k >= s) throw ValidationError("carve_transform: target outside support");
        in_target[static_cast<std::size_t>(k)] = true;
    }

    CarveTransform tr;
    tr.used_V = n2 < s;
    const double sig2 = pb.sigma * pb.sigma;
    const Eigen::Index q = s - static_cast<Eigen::Index>(target_pos.size());

    if (tr.used_V) {
        // V = (beta_ols on selection rows, Y2).
        const Eigen::Index m = s + n2;
        Matrix sigma_v = Matrix::Zero(m, m);
        sigma_v.topLeftCorner(s, s) = sig2 * g1;
        sigma_v.bottomRightCorner(n2, n2) = sig2 * Matrix::Identity(n2, n2);
        tr.law = make_law(Vector::Zero(m), std::move(sigma_v));

        tr.observed.resize(m);
        tr.observed.head(s) = g1 * (Z1.transpose() * y1);
        if (n2 > 0) tr.observed.tail(n2) = y2;

        tr.C.resize(q, m);
        tr.d.resize(q);
        Eigen::Index r = 0;
        for (Eigen::Index k = 0; k < s; ++k) {
            if (in_target[static_cast<std::size_t>(k)]) continue;
            tr.C.block(r, 0, 1, s) = gram1.row(k);
            if (n2 > 0) tr.C.block(r, s, 1, n2) = Z2.col(k).transpose();
            tr.d[r] = pb.Z.col(k).dot(pb.y);
            ++r;
        }

        tr.A = Matrix::Zero(s, m);
        tr.A.topLeftCorner(s, s) = -Matrix(pb.signs.asDiagonal());
        tr.b = pb.b;

        // beta_ols_full = (Z'Z)^-1 [gram1 | Z2'] V; the statistic reads off
        // the (signed) target rows of that map.
        const Matrix gram = gram1 + (n2 > 0 ? Matrix(Z2.transpose() * Z2)
                                            : Matrix(Matrix::Zero(s, s)));
        const Matrix g = sym_inverse(gram, "carve_transform: singular full Gram matrix");
        Vector v = Vector::Zero(s);
        for (const Eigen::Index k : target_pos) v[k] = pb.signs[k];
        const Vector gv = g * v;
        tr.stat_dir.resize(m);
        tr.stat_dir.head(s) = gram1 * gv;
        if (n2 > 0) tr.stat_dir.tail(n2) = Z2 * gv;
    } else {
        // U = (beta_ols on all rows, beta_ols on selection rows).
        const Eigen::Index m = 2 * s;
        const Matrix gram = Z1.transpose() * Z1 + Z2.transpose() * Z2;
        const Matrix g = sym_inverse(gram, "carve_transform: singular full Gram matrix");

        Matrix sigma_u(m, m);
        sigma_u.topLeftCorner(s, s) = sig2 * g;
        sigma_u.topRightCorner(s, s) = sig2 * g;
        sigma_u.bottomLeftCorner(s, s) = sig2 * g;
        sigma_u.bottomRightCorner(s, s) = sig2 * g1;
        tr.law = make_law(Vector::Zero(m), std::move(sigma_u));

        tr.observed.resize(m);
        tr.observed.head(s) = g * (pb.Z.transpose() * pb.y);
        tr.observed.tail(s) = g1 * (Z1.transpose() * y1);

        tr.C = Matrix::Zero(q, m);
        tr.d.resize(q);
        Eigen::Index r = 0;
        for (Eigen::Index k = 0; k < s; ++k) {
            if (in_target[static_cast<std::size_t>(k)]) continue;
            tr.C.block(r, 0, 1, s) = gram.row(k);
            tr.d[r] = pb.Z.col(k).dot(pb.y);
            ++r;
        }

        tr.A = Matrix::Zero(s, m);
        tr.A.topRightCorner(s, s) = -Matrix(pb.signs.asDiagonal());
        tr.b = pb.b;

        tr.stat_dir = Vector::Zero(m);
        for (const Eigen::Index k : target_pos) tr.stat_dir[k] = pb.signs[k];
    }
    return tr;
}

namespace {

// Right-tail MC p-value of the (already sign-directed) statistic theta' u.
PValue mc_tail_pvalue(const CarveProblem& pb, const IndexList& target_pos,
                      const ChainConfig& cfg) {
    CarveTransform tr = carve_transform(pb, target_pos);
    const GaussianLaw null_law = condition_on_linear(tr.law, tr.C, tr.d);
    const ConstrainedGaussianState state = whiten(null_law, tr.A, tr.b, tr.observed);

    // Statistic in whitened coordinates: theta' u = w' x + const.
    const Vector w = state.sqrt_sigma.transpose() * tr.stat_dir;
    const double offset = tr.stat_dir.dot(null_law.mu);
    const double obs = tr.stat_dir.dot(tr.observed) - offset;

    HitAndRunChain chain(state, cfg.seed);
    for (long i = 0; i < cfg.burn_in; ++i) chain.step();

    const long thin = std::max<long>(1, cfg.thin);
    long count = 0;
    long taken = 0;
    bool aborted = false;
    for (long sdx = 0; sdx < cfg.n_samples; ++sdx) {
        for (long t = 0; t < thin; ++t) chain.step();
        ++taken;
        if (w.dot(chain.current()) >= obs) ++count;
        if (cfg.early_abort && taken % cfg.early_abort->check_every == 0) {
            const double lcb = binomial_lower_bound(count, taken, cfg.early_abort->confidence);
            if (lcb > cfg.early_abort->threshold) {
                aborted = true;
                break;
            }
        }
    }

    PValue pv;
    pv.side = Side::right;
    pv.n_samples_used = taken;
    pv.value = (static_cast<double>(count) + 1.0) / (static_cast<double>(taken) + 1.0);
    pv.mc_se = std::sqrt(pv.value * (1.0 - pv.value) / static_cast<double>(taken));
    pv.aborted = aborted;
    return pv;
}

}  // namespace

PValue carve_pvalue_selected(const CarveProblem& pb, Eigen::Index target_pos,
                             const ChainConfig& chain) {
    // The statistic direction already carries sign(beta_hat_j), so the right
    // tail of it is the right/left tail of (Z^+ Y)_j as the sign dictates.
    PValue pv = mc_tail_pvalue(pb, {target_pos}, chain);
    pv.side = pb.signs[target_pos] > 0.0 ? Side::right : Side::left;
    return pv;
}

PValue group_pvalue(const CarveProblem& pb, const IndexList& target_pos,
                    const ChainConfig& chain) {
    if (target_pos.empty()) {
        PValue pv;
        pv.value = 1.0;
        pv.side = Side::right;
        return pv;
    }
    return mc_tail_pvalue(pb, target_pos, chain);
}

double SaturatedTest::right_tail(double c) const {
    if (!(vhi - vlo > 1e-12 * tau)) {
        throw DegenerateTruncation("saturated: degenerate truncation interval");
    }
    const double a = (vlo - c) / tau;
    const double b = (vhi - c) / tau;
    const double x = std::clamp((obs - c) / tau, a, b);
    return truncnorm_tail(a, b, x);
}

double SaturatedTest::two_sided(double c) const {
    const double r = right_tail(c);
    return std::min(1.0, 2.0 * std::min(r, 1.0 - r));
}

SaturatedTest make_saturated_test(const Vector& eta, const Matrix& A, const Vector& b,
                                  const IndexList& sel_idx, const Vector& y, double sigma) {
    const double eta_sq = eta.squaredNorm();
    if (!(eta_sq > 0.0)) throw ValidationError("saturated: eta is zero");
    SaturatedTest test;
    test.obs = eta.dot(y);
    test.tau = sigma * std::sqrt(eta_sq);

    if (A.rows() > 0) {
        const Vector y1 = take_elems(y, sel_idx);
        Vector eta1(static_cast<Eigen::Index>(sel_idx.size()));
        for (std::size_t i = 0; i < sel_idx.size(); ++i) {
            eta1[static_cast<Eigen::Index>(i)] = eta[sel_idx[i]];
        }
        const Vector slack = b - A * y1;
        if (slack.minCoeff() < -1e-9 * std::max(1.0, b.lpNorm<Eigen::Infinity>())) {
            throw NumericError("saturated: observed response outside the polyhedron");
        }
        const Vector c = (A * eta1) / eta_sq;
        for (Eigen::Index i = 0; i < c.size(); ++i) {
            if (c[i] > 1e-12) {
                test.vhi = std::min(test.vhi, test.obs + slack[i] / c[i]);
            } else if (c[i] < -1e-12) {
                test.vlo = std::max(test.vlo, test.obs + slack[i] / c[i]);
            }
        }
    }
    return test;
}

PValue carve_pvalue_saturated(const CarveProblem& pb, Eigen::Index target_pos) {
    const Matrix Z1 = take_rows(pb.Z, pb.sel_idx);
    const Matrix gram = pb.Z.transpose() * pb.Z;
    const Matrix g = sym_inverse(gram, "saturated: singular Gram matrix");
    const Vector eta = pb.Z * g.col(target_pos);

    const SaturatedTest test = make_saturated_test(eta, pb.A, pb.b, pb.sel_idx, pb.y, pb.sigma);
    PValue pv;
    pv.side = pb.signs[target_pos] > 0.0 ? Side::right : Side::left;
    const double right = test.right_tail(0.0);
    pv.value = pv.side == Side::right ? right : 1.0 - right;
    pv.n_samples_used = 0;
    pv.mc_se = 0.0;
    return pv;
}

double estimate_sigma(const Matrix& X, const Vector& y, SigmaMode mode,
                      const SelectionEvent* event, bool use_min_rule, std::uint64_t seed) {
    const auto n = X.rows();
    if (mode == SigmaMode::known) {
        throw ValidationError("estimate_sigma: nothing to estimate in known mode");
    }
    Vector beta_raw;
    Eigen::Index s = 0;
    if (mode == SigmaMode::global_cv) {
        Vector scales;
        const Matrix Z = standardize_columns(X, scales);
        const double lambda =
            cv_lambda(Z, y, Family::gaussian, 10, use_min_rule ? CvRule::min : CvRule::one_se, seed);
        const LassoFit fit = fit_lasso(Z, y, lambda);
        beta_raw = fit.beta_hat.cwiseQuotient(scales);
        s = static_cast<Eigen::Index>(fit.support.size());
    } else {
        if (event == nullptr) throw ValidationError("estimate_sigma: per_split needs an event");
        s = event->s();
        beta_raw = Vector::Zero(X.cols());
        for (Eigen::Index k = 0; k < s; ++k) {
            const Eigen::Index j = event->support()[static_cast<std::size_t>(k)];
            // Coefficients were fit on scaled columns; undo the scaling.
            Eigen::Index raw = 0;
            (void)raw;
            beta_raw[j] = event->fit.beta_hat[j] / event->col_scales[j];
        }
    }
    if (n - s <= 0) throw ValidationError("estimate_sigma: n <= s");
    const double rss = (y - X * beta_raw).squaredNorm();
    const double sigma = std::sqrt(rss / static_cast<double>(n - s));
    if (!(sigma > 0.0)) {
        throw NumericError("estimate_sigma: zero residual, degenerate variance estimate");
    }
    return sigma;
}

double bonferroni_adjust(double p, Eigen::Index s_tilde) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("bonferroni_adjust: p outside [0,1]");
    if (s_tilde < 0) throw ValidationError("bonferroni_adjust: negative s");
    if (s_tilde == 0) return 1.0;  // nothing selected, nothing tested
    return std::min(1.0, p * static_cast<double>(s_tilde));
}

}  // namespace carving
