#include "carving/lasso.hpp"

#include <algorithm>
#include <cmath>

#include "carving/glm.hpp"
#include "carving/rng.hpp"

namespace carving {

namespace {

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

// Duality gap for 0.5*||y - X b||^2 + lambda*||b||_1 with the scaled-residual
// dual point theta = r * min(1, lambda / ||X^T r||_inf).
double duality_gap(const Matrix& X, const Vector& y, const Vector& beta,
                   const Vector& r, double lambda) {
    const double primal = 0.5 * r.squaredNorm() + lambda * beta.lpNorm<1>();
    const double corr_inf = (X.transpose() * r).lpNorm<Eigen::Infinity>();
    const double s = corr_inf > lambda ? lambda / corr_inf : 1.0;
    const double dual = 0.5 * y.squaredNorm() - 0.5 * (s * r - y).squaredNorm();
    return primal - dual;
}

// lambda = 0 has no usable scaled-residual dual point; fall back to the
// least-squares stationarity residual.
double zero_lambda_residual(const Matrix& X, const Vector& r) {
    return (X.transpose() * r).lpNorm<Eigen::Infinity>();
}

void finalize_fit(const Matrix& X, const Vector& r, double lambda, LassoFit& fit) {
    fit.support.clear();
    for (Eigen::Index j = 0; j < fit.beta_hat.size(); ++j) {
        if (fit.beta_hat[j] != 0.0) fit.support.push_back(j);
    }
    fit.signs.resize(static_cast<Eigen::Index>(fit.support.size()));
    double kkt = 0.0;
    const Vector corr = X.transpose() * r;
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < fit.beta_hat.size(); ++j) {
        if (fit.beta_hat[j] != 0.0) {
            const double s = fit.beta_hat[j] > 0.0 ? 1.0 : -1.0;
            fit.signs[k++] = s;
            kkt = std::max(kkt, std::abs(corr[j] - lambda * s));
        } else {
            kkt = std::max(kkt, std::max(0.0, std::abs(corr[j]) - lambda));
        }
    }
    fit.kkt_residual = kkt;
    fit.lambda = lambda;
}

}  // namespace

namespace detail {

LassoFit cd_solve(const Matrix& X, const Vector& y, double lambda,
                  const LassoOptions& opts, Vector* warm_beta) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();

    Vector col_sq(p);
    for (Eigen::Index j = 0; j < p; ++j) col_sq[j] = X.col(j).squaredNorm();

    Vector beta = (warm_beta && warm_beta->size() == p) ? *warm_beta : Vector::Zero(p);
    double b0 = 0.0;
    Vector r = y - X * beta;
    if (opts.intercept) {
        b0 = r.mean();
        r.array() -= b0;
    }

    const double gap_scale = std::max(0.5 * y.squaredNorm(), 1e-12);
    std::vector<Eigen::Index> active;

    auto sweep = [&](const std::vector<Eigen::Index>& idx) {
        double max_delta = 0.0;
        for (const Eigen::Index j : idx) {
            if (col_sq[j] <= 0.0) continue;
            const double old = beta[j];
            const double z = X.col(j).dot(r) + col_sq[j] * old;
            const double next = soft_threshold(z, lambda) / col_sq[j];
            if (next != old) {
                r.noalias() -= (next - old) * X.col(j);
                beta[j] = next;
                max_delta = std::max(max_delta, std::abs(next - old));
            }
        }
        if (opts.intercept) {
            const double shift = r.sum() / static_cast<double>(n);
            if (shift != 0.0) {
                b0 += shift;
                r.array() -= shift;
            }
        }
        return max_delta;
    };

    std::vector<Eigen::Index> all(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;

    const double corr_scale = std::max(1.0, (X.transpose() * y).lpNorm<Eigen::Infinity>());
    const double polish_tol = opts.tol_coef > 0.0 ? opts.tol_coef : 1e-12;
    long sweeps = 0;
    double gap = kInf;
    bool converged = false;
    while (sweeps < opts.max_sweeps) {
        const double delta_full = sweep(all);
        ++sweeps;
        active.clear();
        for (Eigen::Index j = 0; j < p; ++j) {
            if (beta[j] != 0.0) active.push_back(j);
        }
        // Polish on the active set until it stalls, then re-check globally.
        while (sweeps < opts.max_sweeps) {
            const double delta = sweep(active);
            ++sweeps;
            if (delta < polish_tol * std::max(1.0, beta.lpNorm<Eigen::Infinity>())) break;
        }
        if (opts.tol_coef > 0.0) {
            if (delta_full < opts.tol_coef * std::max(1.0, beta.lpNorm<Eigen::Infinity>())) {
                converged = true;
                break;
            }
        } else if (lambda == 0.0) {
            gap = zero_lambda_residual(X, r) / corr_scale;
            if (gap <= 1e-9) {
                converged = true;
                break;
            }
        } else {
            gap = duality_gap(X, y, beta, r, lambda);
            if (gap <= opts.tol_gap * gap_scale) {
                converged = true;
                break;
            }
        }
    }
    if (!converged && !opts.best_effort) {
        throw ConvergenceError("lasso: coordinate descent did not reach the duality-gap "
                               "tolerance within max sweeps", gap / gap_scale);
    }

    LassoFit fit;
    fit.beta_hat = beta;
    fit.intercept = b0;
    fit.sweeps = sweeps;
    finalize_fit(X, r, lambda, fit);
    if (warm_beta) *warm_beta = beta;
    return fit;
}

}  // namespace detail

LassoFit fit_lasso(const Matrix& X, const Vector& y, double lambda, const LassoOptions& opts) {
    if (X.rows() != y.size()) throw ValidationError("fit_lasso: dimension mismatch");
    if (!(lambda >= 0.0)) throw ValidationError("fit_lasso: lambda must be >= 0");
    if (!X.allFinite() || !y.allFinite()) throw ValidationError("fit_lasso: non-finite input");
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (X.col(j).squaredNorm() == 0.0) {
            throw ValidationError("fit_lasso: column " + std::to_string(j) + " is identically zero");
        }
    }
    return detail::cd_solve(X, y, lambda, opts);
}

Vector lambda_grid(const Matrix& X, const Vector& y, Family family, int size, double decades) {
    double lambda_max;
    if (family == Family::gaussian) {
        lambda_max = (X.transpose() * y).lpNorm<Eigen::Infinity>();
    } else {
        lambda_max = (X.transpose() * (y.array() - 0.5).matrix()).lpNorm<Eigen::Infinity>();
    }
    if (!(lambda_max > 0.0)) throw ValidationError("lambda_grid: zero design/response");
    Vector grid(size);
    for (int i = 0; i < size; ++i) {
        grid[i] = lambda_max * std::pow(10.0, -decades * i / std::max(1, size - 1));
    }
    return grid;
}

namespace {

// Interior fits along the CV path run in best-effort mode: at the smallest
// lambdas of a p > n path the duality gap converges too slowly for a strict
// stop, and those points lose the deviance comparison by orders of magnitude
// anyway.
LassoOptions path_options() {
    LassoOptions opts;
    opts.tol_coef = 1e-4;
    opts.max_sweeps = 1000;
    opts.best_effort = true;
    return opts;
}

Vector fitted_path_deviance(const Matrix& Xtr, const Vector& ytr, const Matrix& Xte,
                            const Vector& yte, Family family, const Vector& grid) {
    Vector dev(grid.size());
    // Past the interpolation bound the path only reshuffles near-ties; freeze
    // the deviance there (glmnet-style dfmax stop).
    const auto dfmax = static_cast<std::size_t>(
        std::max<Eigen::Index>(1, std::min(Xtr.rows() - 1, Xtr.cols())));
    if (family == Family::gaussian) {
        Vector warm = Vector::Zero(Xtr.cols());
        for (Eigen::Index g = 0; g < grid.size(); ++g) {
            LassoFit fit = detail::cd_solve(Xtr, ytr, grid[g], path_options(), &warm);
            dev[g] = (yte - Xte * fit.beta_hat).squaredNorm();
            if (fit.support.size() >= dfmax) {
                for (Eigen::Index h = g + 1; h < grid.size(); ++h) dev[h] = dev[g];
                break;
            }
        }
    } else {
        Vector warm = Vector::Zero(Xtr.cols());
        for (Eigen::Index g = 0; g < grid.size(); ++g) {
            IrlsState st = irls_logistic_lasso(Xtr, ytr, grid[g], 1e-3, 100, &warm, path_options());
            const Vector eta = Xte * st.beta;
            double d = 0.0;
            for (Eigen::Index i = 0; i < yte.size(); ++i) {
                const double pi = std::clamp(1.0 / (1.0 + std::exp(-eta[i])), 1e-12, 1.0 - 1e-12);
                d += yte[i] > 0.5 ? -2.0 * std::log(pi) : -2.0 * std::log1p(-pi);
            }
            dev[g] = d;
            if (st.fit.support.size() >= dfmax) {
                for (Eigen::Index h = g + 1; h < grid.size(); ++h) dev[h] = dev[g];
                break;
            }
        }
    }
    return dev;
}

}  // namespace

CvCurve cross_validate(const Matrix& X, const Vector& y, Family family, int n_folds,
                       std::uint64_t seed, const Vector& grid_in) {
    const Eigen::Index n = X.rows();
    if (n_folds < 2) throw ValidationError("cv: need n_folds >= 2");
    if (n < n_folds) throw ValidationError("cv: need n >= n_folds");
    if (y.maxCoeff() == y.minCoeff()) throw ValidationError("cv: response is constant");

    CvCurve curve;
    curve.grid = grid_in.size() > 0 ? grid_in : lambda_grid(X, y, family);
    const Eigen::Index G = curve.grid.size();

    // Deterministic fold assignment: shuffled order dealt round-robin.
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    RngStream rng(seed);
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        fold_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
            static_cast<int>(i % n_folds);
    }

    Matrix fold_mean(n_folds, G);
    for (int k = 0; k < n_folds; ++k) {
        IndexList train, test;
        for (Eigen::Index i = 0; i < n; ++i) {
            (fold_of[static_cast<std::size_t>(i)] == k ? test : train).push_back(i);
        }
        const Matrix Xtr = take_rows(X, train);
        const Matrix Xte = take_rows(X, test);
        const Vector ytr = take_elems(y, train);
        const Vector yte = take_elems(y, test);
        const Vector dev = fitted_path_deviance(Xtr, ytr, Xte, yte, family, curve.grid);
        fold_mean.row(k) = dev.transpose() / static_cast<double>(test.size());
    }

    curve.mean_dev = fold_mean.colwise().mean();
    curve.se.resize(G);
    for (Eigen::Index g = 0; g < G; ++g) {
        const double m = curve.mean_dev[g];
        double ss = 0.0;
        for (int k = 0; k < n_folds; ++k) ss += (fold_mean(k, g) - m) * (fold_mean(k, g) - m);
        curve.se[g] = std::sqrt(ss / (n_folds - 1.0) / n_folds);
    }

    curve.min_idx = 0;
    for (Eigen::Index g = 1; g < G; ++g) {
        if (curve.mean_dev[g] < curve.mean_dev[curve.min_idx]) curve.min_idx = g;
    }
    const double cutoff = curve.mean_dev[curve.min_idx] + curve.se[curve.min_idx];
    curve.one_se_idx = curve.min_idx;
    for (Eigen::Index g = 0; g <= curve.min_idx; ++g) {
        if (curve.mean_dev[g] <= cutoff) {  // grid is descending: first hit = largest lambda
            curve.one_se_idx = g;
            break;
        }
    }
    return curve;
}

double cv_lambda(const Matrix& X, const Vector& y, Family family, int n_folds,
                 CvRule rule, std::uint64_t seed) {
    const CvCurve curve = cross_validate(X, y, family, n_folds, seed);
    return rule == CvRule::min ? curve.grid[curve.min_idx] : curve.grid[curve.one_se_idx];
}

namespace {

LassoFit fit_at(const Matrix& X, const Vector& y, Family family, double lambda, Vector* warm) {
    if (family == Family::gaussian) return detail::cd_solve(X, y, lambda, path_options(), warm);
    IrlsState st = irls_logistic_lasso(X, y, lambda, 1e-3, 100, warm, path_options());
    return st.fit;
}

// Strict refit at the path point the search settled on.
LassoFit refit_strict(const Matrix& X, const Vector& y, Family family, double lambda,
                      Vector warm) {
    if (family == Family::gaussian) return detail::cd_solve(X, y, lambda, LassoOptions{}, &warm);
    return irls_logistic_lasso(X, y, lambda, 1e-8, 200, &warm).fit;
}

}  // namespace

LassoFit fit_lasso_fixed_size(const Matrix& X, const Vector& y, Family family,
                              Eigen::Index target_size) {
    if (target_size < 1 || target_size >= X.rows()) {
        throw ValidationError("fixed_size: need 1 <= target_size < n");
    }
    const Vector grid = lambda_grid(X, y, family);

    // Path fits are best-effort; an exact hit is confirmed by a strict refit
    // before being returned.
    auto confirm = [&](const LassoFit& cand) -> std::optional<LassoFit> {
        LassoFit strict = refit_strict(X, y, family, cand.lambda, cand.beta_hat);
        if (static_cast<Eigen::Index>(strict.support.size()) == target_size) return strict;
        return std::nullopt;
    };

    Vector warm = Vector::Zero(X.cols());
    std::optional<LassoFit> best_below;
    double lambda_below = grid[0];
    bool have_below = false;
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
        LassoFit fit = fit_at(X, y, family, grid[g], &warm);
        const auto size = static_cast<Eigen::Index>(fit.support.size());
        if (size == target_size) {
            if (auto hit = confirm(fit)) return *hit;
        }
        if (size < target_size) {
            if (!best_below || size > static_cast<Eigen::Index>(best_below->support.size())) {
                best_below = fit;
            }
            lambda_below = grid[g];
            have_below = true;
        } else if (size > target_size && have_below) {
            // Path jumped over the target: bisect the bracketing lambdas for
            // an exact hit, then keep walking (support size is not monotone).
            double hi = lambda_below, lo = grid[g];
            for (int it = 0; it < 60 && hi - lo > 1e-8 * hi; ++it) {
                const double mid = 0.5 * (hi + lo);
                Vector w2 = warm;
                LassoFit f2 = fit_at(X, y, family, mid, &w2);
                const auto sz = static_cast<Eigen::Index>(f2.support.size());
                if (sz == target_size) {
                    if (auto hit = confirm(f2)) return *hit;
                }
                if (sz < target_size) {
                    hi = mid;
                    if (!best_below || sz > static_cast<Eigen::Index>(best_below->support.size())) {
                        best_below = f2;
                    }
                } else {
                    lo = mid;
                }
            }
            have_below = false;
        }
    }
    if (!best_below) {
        throw ValidationError("fixed_size: path produced no model below the target size");
    }
    // Largest model strictly below the target; refit strictly and back off a
    // touch if the tighter solve drifts above the target.
    double lambda = best_below->lambda;
    for (int attempt = 0; attempt < 100; ++attempt) {
        LassoFit strict = refit_strict(X, y, family, lambda, best_below->beta_hat);
        if (static_cast<Eigen::Index>(strict.support.size()) <= target_size) return strict;
        lambda *= 1.02;
    }
    throw ConvergenceError("fixed_size: could not stabilize a model at or below the target size",
                           static_cast<double>(best_below->support.size()));
}

}  // namespace carving
