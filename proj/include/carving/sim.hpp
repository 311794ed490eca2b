#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carving/multi.hpp"
#include "carving/types.hpp"

namespace carving {

enum class DesignKind { toeplitz, block_corr, ribo_like, custom_csv };

// One draw of n rows from N(0, Sigma) with Toeplitz Sigma_ij = rho^|i-j|,
// then treated as a fixed design.
Matrix gen_toeplitz_design(Eigen::Index n, Eigen::Index p, double rho, std::uint64_t seed);

// p = 500; Sigma_jl = 0.8 for 1 <= j != l <= 5 (1-based), 0.6^|j-l| otherwise.
Matrix gen_block_design(Eigen::Index n, std::uint64_t seed);

// Gene-expression-like surrogate: n = 71, p = 1000, strong block and global
// column correlation.
Matrix gen_ribo_like_design(std::uint64_t seed);

// sigma such that Var(X beta) / sigma^2 equals target_snr.
double snr_calibrate(const Matrix& X, const Vector& beta, double target_snr);

// Gaussian: y = X beta + sigma z; binomial: independent Bernoulli(pi(X_i beta)).
Vector gen_response(const Matrix& X, const Vector& beta, double sigma, Family family,
                    std::uint64_t seed);

// Best linear predictor in the submodel: X_S^+ X beta.
Vector submodel_target(const Matrix& X, const Vector& beta, const IndexList& support);
// Same including an unpenalized intercept; returns coefficients for the
// support columns only (intercept dropped).
Vector submodel_target_intercept(const Matrix& X, const Vector& beta, const IndexList& support);

struct MethodConfig {
    long B = 1;
    double fraction = 0.9;
    std::optional<double> gamma;
    std::optional<double> gamma_min;
    View view = View::selected;

    std::string gamma_mode() const;
};

struct SimConfig {
    DesignKind design = DesignKind::toeplitz;
    double rho = 0.6;
    std::string design_file;
    Eigen::Index n = 100, p = 200;
    std::vector<std::pair<Eigen::Index, double>> beta;  // 0-based index, value
    std::optional<double> snr;
    std::optional<double> sigma;
    Family family = Family::gaussian;
    long runs = 100;
    double alpha = 0.05;
    SelectorRule selector = SelectorRule::cv_1se;
    Eigen::Index target_size = 0;
    int cv_folds = 10;
    SigmaMode sigma_mode = SigmaMode::known;  // known = the true simulation sigma
    std::vector<long> B_list{1};
    std::vector<double> f_list{0.9};
    std::vector<double> gamma_list{0.05};
    bool optimized_gamma = true;
    std::vector<View> view_list{View::selected};
    std::uint64_t master_seed = 1;
    std::optional<IndexList> group;  // 0-based
    bool ci = false;
    bool ci_intercept = true;
    int threads = 1;
    long chain_samples = 0;
    bool early_abort = true;

    void validate() const;
    static SimConfig parse(const std::string& text);
    std::vector<MethodConfig> method_grid() const;  // drops f=1 for B>1
    Matrix make_design() const;
    Vector beta_vector() const;
    double resolve_sigma(const Matrix& X) const;
    std::string design_name() const;
};

struct RunMethodResult {
    bool failed = false;
    std::string fail_reason;
    Vector aggregated;                      // per variable (empty in group mode)
    std::optional<double> group_p;
    std::vector<ConfidenceInterval> cis;    // ci mode
    std::vector<IndexList> split_supports;  // ci mode, for coverage evaluation
};

struct MetricRow {
    std::string design, family, gamma_mode, view, metric;
    long B = 1;
    double fraction = 0.0;
    double value = 0.0;
    double mc_se = 0.0;
    long runs = 0;
};

struct MetricsTable {
    std::vector<MetricRow> rows;
};

struct ExperimentResult {
    MetricsTable table;
    // records[run][method]
    std::vector<std::vector<RunMethodResult>> records;
};

// Pure function of the archived records (plus the deterministic design), so a
// replay reproduces the table exactly.
MetricsTable compute_metrics(const SimConfig& cfg,
                             const std::vector<std::vector<RunMethodResult>>& records);

ExperimentResult run_experiment(const SimConfig& cfg);

}  // namespace carving
