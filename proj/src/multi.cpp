#include "carving/multi.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <mutex>

#include "carving/detail/driver.hpp"
#include "carving/glm.hpp"
#include "carving/lasso.hpp"
#include "carving/rng.hpp"
#include "carving/threadpool.hpp"

namespace carving {

void MulticarveConfig::validate(Eigen::Index p) const {
    if (B < 1) throw ValidationError("config: B must be >= 1");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("config: fraction in (0,1]");
    if (fraction == 1.0 && B != 1) {
        throw ValidationError("config: fraction 1 admits only a single split (B = 1)");
    }
    if (gamma.has_value() == gamma_min.has_value()) {
        throw ValidationError("config: set exactly one of gamma / gamma_min");
    }
    const double g = aggregation_gamma();
    if (!(g > 0.0 && g <= 1.0)) throw ValidationError("config: gamma outside (0,1]");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("config: alpha outside (0,1)");
    if (selector == SelectorRule::fixed_size && target_size < 1) {
        throw ValidationError("config: fixed_size selector needs target_size >= 1");
    }
    if (selector == SelectorRule::fixed_lambda && !(lambda > 0.0)) {
        throw ValidationError("config: fixed_lambda selector needs lambda > 0");
    }
    if (cv_folds < 2) throw ValidationError("config: cv_folds must be >= 2");
    if (threads < 1) throw ValidationError("config: threads must be >= 1");
    if (sigma_mode == SigmaMode::known && !(sigma_known > 0.0)) {
        throw ValidationError("config: known sigma must be positive");
    }
    if (group) {
        if (group->empty()) throw ValidationError("config: empty group");
        for (const auto j : *group) {
            if (j < 0 || j >= p) throw ValidationError("config: group index out of range");
        }
        if (view == View::saturated) {
            throw ValidationError("config: group tests support the selected view only");
        }
    }
}

double aggregate_fixed(const Vector& p_col, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("aggregate: gamma outside (0,1]");
    const Eigen::Index B = p_col.size();
    if (B < 1) throw ValidationError("aggregate: empty column");
    std::vector<double> scaled(static_cast<std::size_t>(B));
    for (Eigen::Index b = 0; b < B; ++b) {
        if (!(p_col[b] >= 0.0 && p_col[b] <= 1.0)) {
            throw ValidationError("aggregate: p-value outside [0,1]");
        }
        scaled[static_cast<std::size_t>(b)] = p_col[b] / gamma;
    }
    auto k = static_cast<Eigen::Index>(std::ceil(gamma * static_cast<double>(B) - 1e-9));
    k = std::clamp<Eigen::Index>(k, 1, B);
    std::nth_element(scaled.begin(), scaled.begin() + (k - 1), scaled.end());
    return std::min(1.0, scaled[static_cast<std::size_t>(k - 1)]);
}

double aggregate_optimized(const Vector& p_col, double gamma_min) {
    if (!(gamma_min > 0.0 && gamma_min <= 1.0)) {
        throw ValidationError("aggregate: gamma_min outside (0,1]");
    }
    const Eigen::Index B = p_col.size();
    if (B < 1) throw ValidationError("aggregate: empty column");
    std::vector<double> sorted(p_col.data(), p_col.data() + B);
    for (const double v : sorted) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("aggregate: p-value outside [0,1]");
    }
    std::sort(sorted.begin(), sorted.end());
    auto k0 = static_cast<Eigen::Index>(std::ceil(gamma_min * static_cast<double>(B) - 1e-9));
    k0 = std::clamp<Eigen::Index>(k0, 1, B);
    // Q(gamma) is a step function; its minimum over [gamma_min, 1] sits at
    // gamma_min or at a jump point k/B.
    double best = sorted[static_cast<std::size_t>(k0 - 1)] / gamma_min;
    for (Eigen::Index k = k0; k <= B; ++k) {
        best = std::min(best, sorted[static_cast<std::size_t>(k - 1)] * static_cast<double>(B) /
                                  static_cast<double>(k));
    }
    return std::min(1.0, (1.0 - std::log(gamma_min)) * best);
}

namespace detail {

std::uint64_t split_seed(std::uint64_t master, long b) {
    return RngStream::derive(master, {kTagSplit, static_cast<std::uint64_t>(b)}).next_u64();
}

std::uint64_t cv_seed(std::uint64_t master, long b) {
    return RngStream::derive(master, {kTagCv, static_cast<std::uint64_t>(b)}).next_u64();
}

std::uint64_t chain_seed(std::uint64_t master, long b, Eigen::Index global_j) {
    return RngStream::derive(master, {kTagChain, static_cast<std::uint64_t>(b),
                                      static_cast<std::uint64_t>(global_j)})
        .next_u64();
}

// Raw-p level below which a split could still contribute a rejection after
// Bonferroni and aggregation; chains may abort once clearly above it.
double abort_threshold(const MulticarveConfig& cfg, Eigen::Index s) {
    const auto sd = static_cast<double>(std::max<Eigen::Index>(1, s));
    if (cfg.B == 1) return cfg.alpha / sd;
    if (cfg.optimized_aggregation()) {
        return cfg.alpha / ((1.0 - std::log(*cfg.gamma_min)) * sd);
    }
    return cfg.alpha * *cfg.gamma / sd;
}

ChainConfig chain_config(const MulticarveConfig& cfg, Eigen::Index s, std::uint64_t seed) {
    ChainConfig ch;
    if (cfg.chain_samples > 0) {
        ch.n_samples = cfg.chain_samples;
    } else {
        const auto sd = static_cast<double>(std::max<Eigen::Index>(1, s));
        double factor;
        if (cfg.B == 1) {
            factor = 2.0 / cfg.alpha;
        } else if (cfg.optimized_aggregation()) {
            factor = (1.0 - std::log(*cfg.gamma_min)) / (cfg.alpha * *cfg.gamma_min);
        } else {
            factor = 1.0 / (cfg.alpha * *cfg.gamma);
        }
        ch.n_samples = std::max<long>(800, 2 * static_cast<long>(std::ceil(sd * factor)));
    }
    ch.burn_in = ch.n_samples / 10;
    ch.thin = 1;
    ch.seed = seed;
    if (cfg.early_abort) {
        EarlyAbort ea;
        ea.threshold = abort_threshold(cfg, s);
        ea.check_every = 400;
        ea.confidence = 0.99;
        ch.early_abort = ea;
    }
    return ch;
}

// Variables selected in fewer than ceil(gamma * B) splits aggregate to 1
// whatever their raw p-values are, so their chains can be skipped outright.
long test_count_threshold(const MulticarveConfig& cfg) {
    if (cfg.B == 1) return 1;
    const double g = cfg.aggregation_gamma();
    return std::max<long>(1, static_cast<long>(std::ceil(g * static_cast<double>(cfg.B) - 1e-9)));
}

SplitWork select_split_gaussian(const Dataset& data, const MulticarveConfig& cfg, long b,
                                double sigma_global) {
    SplitWork work;
    work.trace.split_seed = split_seed(cfg.master_seed, b);
    SplitPlan split = make_split(data.n(), cfg.fraction, work.trace.split_seed);
    work.trace.n1 = split.n1();

    const Matrix X1 = take_rows(data.X, split.selection_idx);
    const Vector y1 = take_elems(data.y, split.selection_idx);

    Vector scales = Vector::Ones(data.p());
    Matrix Z1;
    if (cfg.standardize) {
        Z1 = standardize_columns(X1, scales);
    } else {
        Z1 = X1;
    }

    LassoFit fit;
    try {
        switch (cfg.selector) {
            case SelectorRule::cv_min:
            case SelectorRule::cv_1se: {
                const double lam =
                    cv_lambda(Z1, y1, Family::gaussian, cfg.cv_folds,
                              cfg.selector == SelectorRule::cv_min ? CvRule::min : CvRule::one_se,
                              cv_seed(cfg.master_seed, b));
                fit = fit_lasso(Z1, y1, lam);
                break;
            }
            case SelectorRule::fixed_size:
                fit = fit_lasso_fixed_size(Z1, y1, Family::gaussian, cfg.target_size);
                break;
            case SelectorRule::fixed_lambda:
                fit = fit_lasso(Z1, y1, cfg.lambda);
                break;
        }
    } catch (const std::exception& e) {
        work.trace.skipped = true;
        work.trace.skip_reason = std::string("selection failed: ") + e.what();
        return work;
    }
    work.trace.lambda = fit.lambda;

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
        event = selection_event(Z1, y1, fit);
    } catch (const std::exception& e) {
        work.trace.skipped = true;
        work.trace.skip_reason = std::string("selection event failed: ") + e.what();
        return work;
    }
    event.split = std::move(split);
    event.col_scales = scales;

    double sigma = 1.0;
    try {
        switch (cfg.sigma_mode) {
            case SigmaMode::known: sigma = cfg.sigma_known; break;
            case SigmaMode::global_cv: sigma = sigma_global; break;
            case SigmaMode::per_split:
                sigma = estimate_sigma(data.X, data.y, SigmaMode::per_split, &event);
                break;
        }
    } catch (const std::exception& e) {
        work.trace.skipped = true;
        work.trace.skip_reason = std::string("sigma estimation failed: ") + e.what();
        return work;
    }
    work.trace.sigma_hat = sigma;
    work.trace.support = event.support();
    work.trace.signs = event.signs();

    work.problem = make_problem(event, data.X, data.y, sigma);
    work.event = std::move(event);
    return work;
}

void run_pvalue_phase(const MulticarveConfig& cfg, std::vector<SplitWork>& splits,
                      InferenceReport& rep) {
    const Eigen::Index p = rep.p;
    const long B = cfg.B;
    rep.p_raw = Matrix::Ones(B, p);
    rep.p_adjusted = Matrix::Ones(B, p);
    rep.group_p_raw = Vector::Ones(B);

    // Only variables that can influence the aggregate get a chain (the
    // selected-count shortcut); with B == 1 everything selected is tested.
    std::vector<long> counts(static_cast<std::size_t>(p), 0);
    for (const auto& w : splits) {
        if (!w.problem) continue;
        for (const auto j : w.problem->support) ++counts[static_cast<std::size_t>(j)];
    }
    const long need = test_count_threshold(cfg);

    std::mutex warn_mutex;
    parallel_for(B, cfg.threads, [&](long b) {
        auto& w = splits[static_cast<std::size_t>(b)];
        if (!w.problem) return;
        const CarveProblem& pb = *w.problem;
        const auto s = static_cast<Eigen::Index>(pb.support.size());

        if (cfg.group) {
            IndexList gpos;
            for (Eigen::Index k = 0; k < s; ++k) {
                if (std::find(cfg.group->begin(), cfg.group->end(), pb.support[static_cast<std::size_t>(k)]) !=
                    cfg.group->end()) {
                    gpos.push_back(k);
                }
            }
            double praw = 1.0;
            if (!gpos.empty()) {
                try {
                    const ChainConfig ch =
                        chain_config(cfg, s, chain_seed(cfg.master_seed, b, -1));
                    PValue pv = group_pvalue(pb, gpos, ch);
                    praw = pv.value;
                    w.trace.chain_samples += pv.n_samples_used;
                    if (pv.aborted) ++w.trace.chains_aborted;
                } catch (const NumericError& e) {
                    praw = 1.0;
                    std::lock_guard<std::mutex> lock(warn_mutex);
                    rep.warnings.push_back("split " + std::to_string(b) +
                                           " group test degraded to p=1: " + e.what());
                }
            }
            rep.group_p_raw[b] = praw;
            double factor = 1.0;
            if (cfg.group_correction == GroupCorrection::p_over_group) {
                factor = static_cast<double>(rep.p) / static_cast<double>(cfg.group->size());
            } else if (cfg.group_correction == GroupCorrection::support_ratio) {
                factor = gpos.empty() ? 1.0
                                      : static_cast<double>(s) / static_cast<double>(gpos.size());
            }
            rep.p_raw(b, 0) = praw;  // group mode stores the group trail in column 0
            rep.p_adjusted(b, 0) = std::min(1.0, praw * factor);
            return;
        }

        for (Eigen::Index k = 0; k < s; ++k) {
            const Eigen::Index j = pb.support[static_cast<std::size_t>(k)];
            if (counts[static_cast<std::size_t>(j)] < need) continue;
            double praw = 1.0;
            try {
                if (cfg.view == View::selected) {
                    const ChainConfig ch = chain_config(cfg, s, chain_seed(cfg.master_seed, b, j));
                    PValue pv = carve_pvalue_selected(pb, k, ch);
                    praw = pv.value;
                    w.trace.chain_samples += pv.n_samples_used;
                    if (pv.aborted) ++w.trace.chains_aborted;
                } else {
                    praw = carve_pvalue_saturated(pb, k).value;
                }
            } catch (const NumericError& e) {
                praw = 1.0;
                std::lock_guard<std::mutex> lock(warn_mutex);
                rep.warnings.push_back("split " + std::to_string(b) + " variable " +
                                       std::to_string(j) + " degraded to p=1: " + e.what());
            }
            rep.p_raw(b, j) = praw;
            rep.p_adjusted(b, j) = bonferroni_adjust(praw, s);
        }
    });
}

void aggregate_report(const MulticarveConfig& cfg, InferenceReport& rep) {
    const Eigen::Index p = rep.p;
    rep.aggregated = Vector::Ones(p);
    if (cfg.group) {
        const Vector col = rep.p_adjusted.col(0);
        double agg;
        if (cfg.B == 1) {
            agg = col[0];
        } else {
            agg = cfg.optimized_aggregation() ? aggregate_optimized(col, *cfg.gamma_min)
                                              : aggregate_fixed(col, *cfg.gamma);
        }
        rep.group_p = agg;
        return;
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        if (cfg.B == 1) {
            rep.aggregated[j] = rep.p_adjusted(0, j);
        } else {
            const Vector col = rep.p_adjusted.col(j);
            rep.aggregated[j] = cfg.optimized_aggregation()
                                    ? aggregate_optimized(col, *cfg.gamma_min)
                                    : aggregate_fixed(col, *cfg.gamma);
        }
        if (rep.aggregated[j] <= cfg.alpha) rep.rejections.push_back(j);
    }
}

}  // namespace detail

InferenceReport multicarve(const Dataset& data, const MulticarveConfig& cfg) {
    data.validate();
    cfg.validate(data.p());
    if (data.family == Family::binomial || cfg.family == Family::binomial) {
        return carve_logistic(data, cfg);
    }

    InferenceReport rep;
    rep.n = data.n();
    rep.p = data.p();

    double sigma_global = cfg.sigma_known;
    if (cfg.sigma_mode == SigmaMode::global_cv) {
        sigma_global = estimate_sigma(
            data.X, data.y, SigmaMode::global_cv, nullptr, cfg.selector == SelectorRule::cv_min,
            RngStream::derive(cfg.master_seed, {detail::kTagSigma}).next_u64());
    }
    rep.sigma_global = sigma_global;

    std::vector<detail::SplitWork> splits(static_cast<std::size_t>(cfg.B));
    parallel_for(cfg.B, cfg.threads, [&](long b) {
        splits[static_cast<std::size_t>(b)] =
            detail::select_split_gaussian(data, cfg, b, sigma_global);
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

// ---------------------------------------------------------------------------
// Confidence intervals
// ---------------------------------------------------------------------------

long CiInversion::selected_count(Eigen::Index j) const {
    return per_variable_[static_cast<std::size_t>(j)].times_selected;
}

double CiInversion::aggregated_p(Eigen::Index j, double c) const {
    const auto& var = per_variable_[static_cast<std::size_t>(j)];
    Vector vals = Vector::Ones(B);
    Eigen::Index i = 0;
    for (const auto& test : var.tests) vals[i++] = test.two_sided(c);
    if (B == 1) return vals[0];
    return optimized ? aggregate_optimized(vals, gamma_value) : aggregate_fixed(vals, gamma_value);
}

namespace {

double expand_to_bracket(const CiInversion& inv, Eigen::Index j, double inside, double alpha,
                         double step0, int direction) {
    double step = step0;
    for (int it = 0; it < 70; ++it) {
        const double c = inside + direction * step;
        if (inv.aggregated_p(j, c) <= alpha) return c;
        step *= 2.0;
    }
    return direction > 0 ? kInf : -kInf;
}

double bisect_boundary(const CiInversion& inv, Eigen::Index j, double inside, double outside,
                       double alpha, double tol) {
    // p(inside) > alpha >= p(outside); returns the crossing.
    for (int it = 0; it < 200 && std::abs(outside - inside) > tol; ++it) {
        const double mid = 0.5 * (inside + outside);
        if (inv.aggregated_p(j, mid) > alpha) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    return 0.5 * (inside + outside);
}

}  // namespace

ConfidenceInterval CiInversion::invert(Eigen::Index j) const {
    const auto& var = per_variable_[static_cast<std::size_t>(j)];
    ConfidenceInterval ci;
    ci.selected_count = selected_count(j);
    if (var.tests.empty() ||
        static_cast<double>(ci.selected_count) < gamma_value * static_cast<double>(B)) {
        return ci;  // (-inf, inf): too rarely selected for a finite statement
    }

    // Start from the per-split estimates of the target.
    std::vector<double> cand = var.estimates;
    std::vector<double> sorted_est = cand;
    std::sort(sorted_est.begin(), sorted_est.end());
    const double med = sorted_est[sorted_est.size() / 2];
    cand.push_back(med);
    double tau_max = 0.0;
    for (const auto& t : var.tests) tau_max = std::max(tau_max, t.tau);

    double cbest = med, pbest = -1.0;
    for (const double c : cand) {
        const double pc = aggregated_p(j, c);
        if (pc > pbest) {
            pbest = pc;
            cbest = c;
        }
    }
    if (pbest <= alpha) {
        const double lo = sorted_est.front() - 4.0 * tau_max;
        const double hi = sorted_est.back() + 4.0 * tau_max;
        for (int i = 0; i <= 60; ++i) {
            const double c = lo + (hi - lo) * i / 60.0;
            const double pc = aggregated_p(j, c);
            if (pc > pbest) {
                pbest = pc;
                cbest = c;
            }
        }
    }
    if (pbest <= alpha) {
        // Acceptance region empty everywhere we probed; degenerate, flagged.
        ci.lower = ci.upper = cbest;
        ci.flagged = true;
        return ci;
    }

    const double tol = std::max(1e-6 * sigma_ref, 1e-12);
    const double step0 = std::max(tau_max, 1e-3 * (1.0 + std::abs(cbest)));
    const double left = expand_to_bracket(*this, j, cbest, alpha, step0, -1);
    ci.lower = std::isfinite(left) ? bisect_boundary(*this, j, cbest, left, alpha, tol) : -kInf;
    const double right = expand_to_bracket(*this, j, cbest, alpha, step0, +1);
    ci.upper = std::isfinite(right) ? bisect_boundary(*this, j, cbest, right, alpha, tol) : kInf;

    if (std::isfinite(ci.lower) && std::isfinite(ci.upper)) {
        for (int i = 1; i < 9; ++i) {
            const double c = ci.lower + (ci.upper - ci.lower) * i / 9.0;
            if (aggregated_p(j, c) <= alpha) {
                ci.flagged = true;  // non-interval acceptance region; hull returned
                break;
            }
        }
    }
    return ci;
}

CiInversion make_ci_inversion(const Dataset& data, const MulticarveConfig& cfg,
                              InferenceReport* report) {
    data.validate();
    cfg.validate(data.p());
    if (data.family == Family::binomial) {
        throw ValidationError("confidence intervals are defined for the gaussian family");
    }

    double sigma_global = cfg.sigma_known;
    if (cfg.sigma_mode == SigmaMode::global_cv) {
        sigma_global = estimate_sigma(
            data.X, data.y, SigmaMode::global_cv, nullptr, cfg.selector == SelectorRule::cv_min,
            RngStream::derive(cfg.master_seed, {detail::kTagSigma}).next_u64());
    }

    std::vector<detail::SplitWork> splits(static_cast<std::size_t>(cfg.B));
    parallel_for(cfg.B, cfg.threads, [&](long b) {
        splits[static_cast<std::size_t>(b)] =
            detail::select_split_gaussian(data, cfg, b, sigma_global);
    });

    CiInversion inv;
    inv.B = cfg.B;
    inv.alpha = cfg.alpha;
    inv.gamma_value = cfg.aggregation_gamma();
    inv.optimized = cfg.optimized_aggregation();
    inv.per_variable_.resize(static_cast<std::size_t>(data.p()));

    std::vector<double> sigmas;
    for (auto& w : splits) {
        if (!w.event) continue;
        sigmas.push_back(w.trace.sigma_hat);
        const SelectionEvent& ev = *w.event;
        const auto s = ev.s();
        for (Eigen::Index k = 0; k < s; ++k) {
            ++inv.per_variable_[static_cast<std::size_t>(
                                    ev.support()[static_cast<std::size_t>(k)])]
                  .times_selected;
        }
        // Raw-coordinate target, optionally including an unpenalized intercept.
        const Eigen::Index off = cfg.ci_intercept ? 1 : 0;
        Matrix Xs(data.n(), s + off);
        if (cfg.ci_intercept) Xs.col(0) = Vector::Ones(data.n());
        for (Eigen::Index k = 0; k < s; ++k) {
            Xs.col(k + off) = data.X.col(ev.support()[static_cast<std::size_t>(k)]);
        }
        Matrix pinv;
        try {
            Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(Xs.transpose() * Xs));
            const double emax = es.eigenvalues().maxCoeff();
            if (!(emax > 0.0) || es.eigenvalues().minCoeff() <= 1e-12 * emax) {
                throw SingularSubmatrix("ci: augmented submodel rank deficient");
            }
            pinv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                   es.eigenvectors().transpose() * Xs.transpose();
        } catch (const std::exception& e) {
            w.trace.skipped = true;
            w.trace.skip_reason = std::string("ci submodel failed: ") + e.what();
            continue;
        }
        for (Eigen::Index k = 0; k < s; ++k) {
            const Eigen::Index j = ev.support()[static_cast<std::size_t>(k)];
            const Vector eta = pinv.row(k + off).transpose();
            try {
                SaturatedTest test = make_saturated_test(eta, ev.A, ev.b,
                                                         ev.split.selection_idx, data.y,
                                                         w.trace.sigma_hat);
                auto& slot = inv.per_variable_[static_cast<std::size_t>(j)];
                slot.tests.push_back(test);
                slot.estimates.push_back(test.obs);
            } catch (const std::exception&) {
                // Conservative: this split contributes an implicit p = 1.
            }
        }
    }
    std::sort(sigmas.begin(), sigmas.end());
    inv.sigma_ref = sigmas.empty() ? 1.0 : sigmas[sigmas.size() / 2];

    if (report) {
        report->n = data.n();
        report->p = data.p();
        report->sigma_global = sigma_global;
        for (auto& w : splits) {
            if (w.trace.skipped) {
                report->warnings.push_back("split skipped: " + w.trace.skip_reason);
            }
            report->splits.push_back(w.trace);
        }
    }
    return inv;
}

InferenceReport confidence_intervals(const Dataset& data, const MulticarveConfig& cfg) {
    InferenceReport rep;
    const CiInversion inv = make_ci_inversion(data, cfg, &rep);

    const Eigen::Index p = data.p();
    rep.p_raw = Matrix::Ones(cfg.B, p);
    rep.p_adjusted = Matrix::Ones(cfg.B, p);
    rep.aggregated = Vector::Ones(p);
    rep.cis.resize(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) {
        rep.aggregated[j] = inv.aggregated_p(j, 0.0);
        if (rep.aggregated[j] <= cfg.alpha) rep.rejections.push_back(j);
        rep.cis[static_cast<std::size_t>(j)] = inv.invert(j);
    }
    return rep;
}

}  // namespace carving
