#pragma once

#include <cstdint>
#include <optional>

#include "carving/chain.hpp"
#include "carving/gaussian.hpp"
#include "carving/selection.hpp"
#include "carving/types.hpp"

namespace carving {

enum class View { selected, saturated };
enum class Side { right, left, two_sided };

struct PValue {
    double value = 1.0;
    Side side = Side::right;
    long n_samples_used = 0;
    double mc_se = 0.0;  // 0 for exact views
    bool aborted = false;
};

// Everything the inference stage needs from one split, shared by all targets:
// the selected design over all rows in the coordinates the polyhedron was
// built in (selection-scaled columns, or the weighted design for logistic),
// the response in matching coordinates, and the active constraints.
struct CarveProblem {
    Matrix Z;             // n x s
    Vector y;             // length n
    IndexList sel_idx;    // rows used for selection
    IndexList inf_idx;
    Matrix A;             // s x n1, acting on y[sel_idx]
    Vector b;
    Vector signs;         // s entries, +-1
    IndexList support;    // global column ids (reporting only)
    double sigma = 1.0;

    Eigen::Index n1() const { return static_cast<Eigen::Index>(sel_idx.size()); }
    Eigen::Index n2() const { return static_cast<Eigen::Index>(inf_idx.size()); }
    Eigen::Index s() const { return Z.cols(); }
};

// Gaussian-family problem: Z = X restricted to the support, columns divided
// by the selection-row norms recorded in the event.
CarveProblem make_problem(const SelectionEvent& event, const Matrix& X, const Vector& y,
                          double sigma);

// The App-B dimension reduction: statistics move from Y to
//   U = (beta_ols_full, beta_ols_selection)  in R^{2s}, or
//   V = (beta_ols_selection, Y2)             in R^{s+n2},
// whichever is shorter, with equality/inequality constraints rewritten in the
// new coordinates. The returned law has mean zero: under the null the whole
// mean of the conditioned law enters through d in condition_on_linear.
struct CarveTransform {
    GaussianLaw law;
    Matrix C;         // equality constraint rows (s - |target|)
    Vector d;
    Matrix A;         // inequality rows in transformed coordinates
    Vector b;
    Vector observed;  // transformed observed vector
    Vector stat_dir;  // test statistic is stat_dir . u
    bool used_V = false;
};

// target_pos holds positions within the support (0-based), not global ids.
CarveTransform carve_transform(const CarveProblem& problem, const IndexList& target_pos);

// Selected-view MC p-value for a single variable (position in support):
// conditions on the other selected directions and the selection polyhedron,
// samples by hit-and-run, and reports the tail matching the Lasso sign with
// (count+1)/(n+1) smoothing.
PValue carve_pvalue_selected(const CarveProblem& problem, Eigen::Index target_pos,
                             const ChainConfig& chain);

// Selected-view group test: directed sum of projections, right tail.
// Empty target returns the exact value 1.
PValue group_pvalue(const CarveProblem& problem, const IndexList& target_pos,
                    const ChainConfig& chain);

// Exact saturated-view p-value: univariate truncated normal, no MCMC.
PValue carve_pvalue_saturated(const CarveProblem& problem, Eigen::Index target_pos);

// One saturated-view test with the truncation frozen and the null mean free;
// what confidence-interval inversion evaluates repeatedly.
struct SaturatedTest {
    double obs = 0.0;
    double tau = 1.0;  // sd of eta'Y
    double vlo = -kInf;
    double vhi = kInf;

    double right_tail(double c) const;
    double two_sided(double c) const;
};

// eta spans all n coordinates; the polyhedron acts on the selection rows only.
SaturatedTest make_saturated_test(const Vector& eta, const Matrix& A, const Vector& b,
                                  const IndexList& sel_idx, const Vector& y, double sigma);

enum class SigmaMode { known, global_cv, per_split };

// global_cv: residual estimate from a CV Lasso on all data,
//            sigma^2 = ||y - X beta||^2 / (n - s).
// per_split: same formula with the selection-stage coefficients applied to the
//            full data (requires `event`).
double estimate_sigma(const Matrix& X, const Vector& y, SigmaMode mode,
                      const SelectionEvent* event = nullptr,
                      bool use_min_rule = false, std::uint64_t seed = 0);

// min(p * s_tilde, 1); by convention 1 when nothing was selected.
double bonferroni_adjust(double p, Eigen::Index s_tilde);

}  // namespace carving
