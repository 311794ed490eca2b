#pragma once

#include <optional>
#include <string>
#include <vector>

#include "carving/carve.hpp"
#include "carving/types.hpp"

namespace carving {

enum class SelectorRule { cv_min, cv_1se, fixed_size, fixed_lambda };
enum class GroupCorrection { none, p_over_group, support_ratio };

struct MulticarveConfig {
    long B = 1;
    double fraction = 0.5;
    std::optional<double> gamma;      // fixed-quantile aggregation
    std::optional<double> gamma_min;  // optimized-quantile aggregation
    double alpha = 0.05;
    View view = View::selected;
    Family family = Family::gaussian;
    SigmaMode sigma_mode = SigmaMode::global_cv;
    double sigma_known = 1.0;
    SelectorRule selector = SelectorRule::cv_1se;
    Eigen::Index target_size = 0;    // selector == fixed_size
    double lambda = 0.0;             // selector == fixed_lambda
    int cv_folds = 10;
    std::uint64_t master_seed = 0;
    int threads = 1;
    bool standardize = true;
    bool early_abort = true;
    long chain_samples = 0;          // 0: eq-minsample default (doubled)
    bool ci_intercept = true;        // CI target defined including an intercept
    std::optional<IndexList> group;  // group-test mode, 0-based column ids
    GroupCorrection group_correction = GroupCorrection::none;

    void validate(Eigen::Index p) const;
    double aggregation_gamma() const { return gamma ? *gamma : *gamma_min; }
    bool optimized_aggregation() const { return gamma_min.has_value(); }
};

struct ConfidenceInterval {
    double lower = -kInf;
    double upper = kInf;
    long selected_count = 0;
    bool flagged = false;  // acceptance region was not an interval; hull returned
};

struct SplitTrace {
    std::uint64_t split_seed = 0;
    Eigen::Index n1 = 0;
    IndexList support;  // global ids
    Vector signs;
    double lambda = 0.0;
    double sigma_hat = 0.0;
    bool skipped = false;
    std::string skip_reason;
    long chain_samples = 0;
    long chains_aborted = 0;
    long stuck_steps = 0;
};

struct InferenceReport {
    Eigen::Index n = 0, p = 0;
    Matrix p_raw;       // B x p, 1 where untested
    Matrix p_adjusted;  // B x p, Bonferroni within split
    Vector aggregated;  // per variable
    IndexList rejections;
    std::vector<SplitTrace> splits;
    std::vector<ConfidenceInterval> cis;  // empty unless CI mode
    std::optional<double> group_p;
    Vector group_p_raw;  // per split, group mode only
    double sigma_global = 0.0;
    std::vector<std::string> warnings;
};

// Empirical-quantile aggregation of adjusted per-split p-values:
// min(1, q_gamma({P_b / gamma})) with q_gamma the ceil(gamma B)-th order
// statistic.
double aggregate_fixed(const Vector& p_col, double gamma);

// min(1, (1 - log gamma_min) * min over gamma in [gamma_min, 1] of Q(gamma));
// the inner minimum is exact by evaluating the jump points b/B and gamma_min.
double aggregate_optimized(const Vector& p_col, double gamma_min);

// The multicarving procedure: B seeded splits, Lasso selection, carving
// p-values per selected variable (or per group), Bonferroni adjustment and
// quantile aggregation. Deterministic given master_seed, regardless of
// threads.
InferenceReport multicarve(const Dataset& data, const MulticarveConfig& cfg);

// Saturated-view two-sided tests of beta_j = c per split, aggregated over
// splits; exposes the aggregated p-value as a function of c and the interval
// inversion built on it.
class CiInversion {
public:
    double aggregated_p(Eigen::Index j, double c) const;
    ConfidenceInterval invert(Eigen::Index j) const;
    long selected_count(Eigen::Index j) const;
    Eigen::Index p() const { return static_cast<Eigen::Index>(per_variable_.size()); }

    struct VariableTests {
        std::vector<SaturatedTest> tests;  // one per split where selected
        std::vector<double> estimates;     // eta'y per such split
        long times_selected = 0;           // support appearances, >= tests.size()
    };

    long B = 1;
    double alpha = 0.05;
    double gamma_value = 0.05;
    bool optimized = true;
    double sigma_ref = 1.0;  // bisection tolerance scale
    std::vector<VariableTests> per_variable_;
};

// Runs the B splits and assembles the inversion machine; multicarve-style
// traces are appended to `report` when non-null.
CiInversion make_ci_inversion(const Dataset& data, const MulticarveConfig& cfg,
                              InferenceReport* report = nullptr);

// Multicarving confidence intervals (saturated view, no multiplicity
// correction). The report's aggregated p-values are the two-sided tests at
// c = 0, so rejection at alpha matches 0 lying outside the interval.
InferenceReport confidence_intervals(const Dataset& data, const MulticarveConfig& cfg);

}  // namespace carving
