#include "carving/glm.hpp"

#include <algorithm>
#include <cmath>

#include "carving/detail/driver.hpp"
#include "carving/selection.hpp"
#include "carving/threadpool.hpp"

namespace carving {

namespace {

constexpr double kProbClamp = 1e-5;

double binomial_deviance(const Vector& y, const Vector& pi) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        d += y[i] > 0.5 ? -2.0 * std::log(pi[i]) : -2.0 * std::log1p(-pi[i]);
    }
    return d;
}

}  // namespace

void logistic_transform(const Matrix& X, const Vector& y, const Vector& beta,
                        Vector& pi, Vector& w_diag, Vector& y_adj) {
    const Vector eta = X * beta;
    pi.resize(y.size());
    w_diag.resize(y.size());
    y_adj.resize(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double p = std::clamp(1.0 / (1.0 + std::exp(-eta[i])), kProbClamp, 1.0 - kProbClamp);
        pi[i] = p;
        w_diag[i] = p * (1.0 - p);
        y_adj[i] = eta[i] + (y[i] - p) / w_diag[i];
    }
}

IrlsState irls_logistic_lasso(const Matrix& X, const Vector& y, double lambda, double tol,
                              long max_iter, Vector* warm_beta, const LassoOptions& inner) {
    if (X.rows() != y.size()) throw ValidationError("irls: dimension mismatch");
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] != 0.0 && y[i] != 1.0) throw ValidationError("irls: response must be 0/1");
    }
    if (!(lambda >= 0.0)) throw ValidationError("irls: lambda must be >= 0");

    IrlsState st;
    st.beta = (warm_beta && warm_beta->size() == X.cols()) ? *warm_beta : Vector::Zero(X.cols());

    Matrix X_w(X.rows(), X.cols());
    Vector y_w(X.rows());
    double delta = kInf;
    for (st.iterations = 0; st.iterations < max_iter; ++st.iterations) {
        logistic_transform(X, y, st.beta, st.pi, st.W_diag, st.y_adj);
        const Vector sqw = st.W_diag.cwiseSqrt();
        X_w = sqw.asDiagonal() * X;
        y_w = sqw.cwiseProduct(st.y_adj);
        Vector warm = st.beta;
        const LassoFit step = detail::cd_solve(X_w, y_w, lambda, inner, &warm);
        delta = (step.beta_hat - st.beta).lpNorm<Eigen::Infinity>();
        st.beta = step.beta_hat;
        if (delta < tol) break;
    }
    logistic_transform(X, y, st.beta, st.pi, st.W_diag, st.y_adj);
    st.deviance = binomial_deviance(y, st.pi);
    if (delta >= tol && !inner.best_effort) {
        // Typical under quasi-separation: the clamp keeps the fixed point
        // oscillating. Path-mode callers accept the last iterate instead.
        throw ConvergenceError("irls: no fixed point within max_iter (deviance " +
                                   std::to_string(st.deviance) + ")", delta);
    }

    const Vector sqw = st.W_diag.cwiseSqrt();
    st.X_w = sqw.asDiagonal() * X;
    st.y_w = sqw.cwiseProduct(st.y_adj);

    st.fit.beta_hat = st.beta;
    st.fit.lambda = lambda;
    st.fit.sweeps = st.iterations;
    const Vector corr = st.X_w.transpose() * (st.y_w - st.X_w * st.beta);
    double kkt = 0.0;
    for (Eigen::Index j = 0; j < st.beta.size(); ++j) {
        if (st.beta[j] != 0.0) {
            st.fit.support.push_back(j);
            kkt = std::max(kkt, std::abs(corr[j] - lambda * (st.beta[j] > 0.0 ? 1.0 : -1.0)));
        } else {
            kkt = std::max(kkt, std::max(0.0, std::abs(corr[j]) - lambda));
        }
    }
    st.fit.signs.resize(static_cast<Eigen::Index>(st.fit.support.size()));
    for (std::size_t k = 0; k < st.fit.support.size(); ++k) {
        st.fit.signs[static_cast<Eigen::Index>(k)] = st.beta[st.fit.support[k]] > 0.0 ? 1.0 : -1.0;
    }
    st.fit.kkt_residual = kkt;
    if (warm_beta) *warm_beta = st.beta;
    return st;
}

namespace {

detail::SplitWork select_split_logistic(const Dataset& data, const MulticarveConfig& cfg, long b,
                                        const LogisticTestHook* hook) {
    detail::SplitWork work;
    work.trace.split_seed = detail::split_seed(cfg.master_seed, b);
    SplitPlan split = make_split(data.n(), cfg.fraction, work.trace.split_seed);
    work.trace.n1 = split.n1();

    const Matrix X1 = take_rows(data.X, split.selection_idx);
    const Vector y1 = take_elems(data.y, split.selection_idx);

    Vector scales = Vector::Ones(data.p());
    Matrix Z_full;
    if (cfg.standardize) {
        standardize_columns(X1, scales);
        Z_full = data.X * scales.cwiseInverse().asDiagonal();
    } else {
        Z_full = data.X;
    }
    const Matrix Z1 = take_rows(Z_full, split.selection_idx);

    // Selection-stage fit and its self-consistent weighted data.
    Matrix Xw1;
    Vector yw1;
    LassoFit fit;
    Vector beta_sel;
    try {
        if (hook) {
            Xw1 = 0.5 * Z1;
            yw1 = 0.5 * take_elems(hook->y_adj, split.selection_idx);
            fit = detail::cd_solve(Xw1, yw1, hook->fixed_lambda, LassoOptions{});
            beta_sel = fit.beta_hat;
        } else {
            double lambda = 0.0;
            switch (cfg.selector) {
                case SelectorRule::cv_min:
                case SelectorRule::cv_1se:
                    lambda = cv_lambda(Z1, y1, Family::binomial, cfg.cv_folds,
                                       cfg.selector == SelectorRule::cv_min ? CvRule::min
                                                                            : CvRule::one_se,
                                       detail::cv_seed(cfg.master_seed, b));
                    break;
                case SelectorRule::fixed_size:
                    lambda = fit_lasso_fixed_size(Z1, y1, Family::binomial, cfg.target_size).lambda;
                    break;
                case SelectorRule::fixed_lambda:
                    lambda = cfg.lambda;
                    break;
            }
            IrlsState st = irls_logistic_lasso(Z1, y1, lambda);
            Xw1 = std::move(st.X_w);
            yw1 = std::move(st.y_w);
            fit = std::move(st.fit);
            beta_sel = st.beta;
        }
    } catch (const std::exception& e) {
        work.trace.skipped = true;
        work.trace.skip_reason = std::string("logistic selection failed: ") + e.what();
        return work;
    }
    work.trace.lambda = fit.lambda;
    work.trace.sigma_hat = 1.0;  // unit variance in the transformed space

    if (fit.support.empty()) {
        work.empty_selection = true;
        return work;
    }
    if (static_cast<Eigen::Index>(fit.support.size()) >= split.n1()) {
        work.trace.skipped = true;
        work.trace.skip_reason = "selected support as large as the selection sample";
        return work;
    }

    SelectionEvent event;
    try {
        event = selection_event(Xw1, yw1, fit);
    } catch (const std::exception& e) {
        work.trace.skipped = true;
        work.trace.skip_reason = std::string("selection event failed: ") + e.what();
        return work;
    }
    event.split = split;
    event.col_scales = scales;
    work.trace.support = event.support();
    work.trace.signs = event.signs();

    // Extend the selection-stage weights to all rows so the statistic and the
    // polyhedron live on the same transformed response.
    Vector pi, w_diag, y_adj;
    if (hook) {
        w_diag = Vector::Constant(data.n(), 0.25);
        y_adj = hook->y_adj;
    } else {
        logistic_transform(Z_full, data.y, beta_sel, pi, w_diag, y_adj);
    }
    const Vector sqw = w_diag.cwiseSqrt();

    CarveProblem pb;
    const auto s = event.s();
    pb.Z.resize(data.n(), s);
    for (Eigen::Index k = 0; k < s; ++k) {
        pb.Z.col(k) = sqw.cwiseProduct(Z_full.col(event.support()[static_cast<std::size_t>(k)]));
    }
    pb.y = sqw.cwiseProduct(y_adj);
    pb.sel_idx = split.selection_idx;
    pb.inf_idx = split.inference_idx;
    pb.A = event.A;
    pb.b = event.b;
    pb.signs = event.signs();
    pb.support = event.support();
    pb.sigma = 1.0;

    work.problem = std::move(pb);
    work.event = std::move(event);
    return work;
}

}  // namespace

InferenceReport carve_logistic(const Dataset& data, const MulticarveConfig& cfg,
                               const LogisticTestHook* hook) {
    data.validate();
    cfg.validate(data.p());
    if (!hook && data.family != Family::binomial) {
        throw ValidationError("carve_logistic: dataset family must be binomial");
    }
    if (hook && hook->y_adj.size() != data.n()) {
        throw ValidationError("carve_logistic: hook y_adj length mismatch");
    }

    InferenceReport rep;
    rep.n = data.n();
    rep.p = data.p();
    rep.sigma_global = 1.0;

    std::vector<detail::SplitWork> splits(static_cast<std::size_t>(cfg.B));
    parallel_for(cfg.B, cfg.threads, [&](long b) {
        splits[static_cast<std::size_t>(b)] = select_split_logistic(data, cfg, b, hook);
    });

    detail::run_pvalue_phase(cfg, splits, rep);
    detail::aggregate_report(cfg, rep);

    rep.splits.reserve(splits.size());
    for (auto& w : splits) {
        if (w.trace.skipped) {
            rep.warnings.push_back("split skipped (all-one p-values): " + w.trace.skip_reason);
        }
        rep.splits.push_back(std::move(w.trace));
    }
    return rep;
}

}  // namespace carving
