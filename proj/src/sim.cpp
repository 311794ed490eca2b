#include "carving/sim.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "carving/csv.hpp"
#include "carving/detail/driver.hpp"
#include "carving/glm.hpp"
#include "carving/rng.hpp"
#include "carving/threadpool.hpp"

namespace carving {

namespace {

constexpr std::uint64_t kTagDesign = 0x64736724;    // "dsg$"
constexpr std::uint64_t kTagResponse = 0x72657370;  // "resp"
constexpr std::uint64_t kTagMethod = 0x6d746864;    // "mthd"
constexpr std::uint64_t kTagBoot = 0x626f6f74;      // "boot"

Matrix gaussian_rows_from_cholesky(Eigen::Index n, const Matrix& sigma, std::uint64_t seed) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw NumericError("design: covariance is not positive definite");
    }
    const Matrix L = llt.matrixL();
    RngStream rng(seed);
    Matrix X(n, sigma.rows());
    Vector z(sigma.rows());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.next_normal();
        X.row(i) = (L * z).transpose();
    }
    return X;
}

}  // namespace

Matrix gen_toeplitz_design(Eigen::Index n, Eigen::Index p, double rho, std::uint64_t seed) {
    if (!(std::abs(rho) < 1.0)) throw ValidationError("design: |rho| must be < 1");
    Matrix sigma(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) sigma(i, j) = std::pow(rho, std::abs(i - j));
    }
    return gaussian_rows_from_cholesky(n, sigma, seed);
}

Matrix gen_block_design(Eigen::Index n, std::uint64_t seed) {
    const Eigen::Index p = 500;
    Matrix sigma(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            if (i == j) {
                sigma(i, j) = 1.0;
            } else if (i < 5 && j < 5) {
                sigma(i, j) = 0.8;
            } else {
                sigma(i, j) = std::pow(0.6, std::abs(i - j));
            }
        }
    }
    return gaussian_rows_from_cholesky(n, sigma, seed);
}

Matrix gen_ribo_like_design(std::uint64_t seed) {
    // 50 blocks of 20 genes: shared global factor, strong block factor, small
    // idiosyncratic noise. Column correlations reach ~0.9 within blocks.
    const Eigen::Index n = 71, p = 1000, block = 20;
    RngStream rng(seed);
    Matrix X(n, p);
    Vector global(n), factor(n);
    for (Eigen::Index i = 0; i < n; ++i) global[i] = rng.next_normal();
    for (Eigen::Index j = 0; j < p; ++j) {
        if (j % block == 0) {
            for (Eigen::Index i = 0; i < n; ++i) factor[i] = rng.next_normal();
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            X(i, j) = 0.55 * global[i] + 0.77 * factor[i] + 0.32 * rng.next_normal();
        }
    }
    return X;
}

double snr_calibrate(const Matrix& X, const Vector& beta, double target_snr) {
    if (!(target_snr > 0.0)) throw ValidationError("snr_calibrate: target must be positive");
    const Vector signal = X * beta;
    const double mean = signal.mean();
    const double var = (signal.array() - mean).square().sum() / static_cast<double>(signal.size() - 1);
    if (!(var > 0.0)) throw ValidationError("snr_calibrate: signal variance is zero");
    return std::sqrt(var / target_snr);
}

Vector gen_response(const Matrix& X, const Vector& beta, double sigma, Family family,
                    std::uint64_t seed) {
    RngStream rng(seed);
    Vector y(X.rows());
    const Vector eta = X * beta;
    if (family == Family::gaussian) {
        for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = eta[i] + sigma * rng.next_normal();
    } else {
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double pi = 1.0 / (1.0 + std::exp(-eta[i]));
            y[i] = rng.next_uniform() < pi ? 1.0 : 0.0;
        }
    }
    return y;
}

namespace {

Vector pinv_times(const Matrix& Xs, const Vector& v) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(Xs.transpose() * Xs));
    const double emax = es.eigenvalues().maxCoeff();
    if (!(emax > 0.0) || es.eigenvalues().minCoeff() <= 1e-12 * emax) {
        throw SingularSubmatrix("submodel_target: rank-deficient submatrix");
    }
    return es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose() * (Xs.transpose() * v);
}

}  // namespace

Vector submodel_target(const Matrix& X, const Vector& beta, const IndexList& support) {
    Matrix Xs(X.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k) {
        Xs.col(static_cast<Eigen::Index>(k)) = X.col(support[k]);
    }
    return pinv_times(Xs, X * beta);
}

Vector submodel_target_intercept(const Matrix& X, const Vector& beta, const IndexList& support) {
    Matrix Xs(X.rows(), static_cast<Eigen::Index>(support.size()) + 1);
    Xs.col(0) = Vector::Ones(X.rows());
    for (std::size_t k = 0; k < support.size(); ++k) {
        Xs.col(static_cast<Eigen::Index>(k) + 1) = X.col(support[k]);
    }
    const Vector full = pinv_times(Xs, X * beta);
    return full.tail(full.size() - 1);
}

// ---------------------------------------------------------------------------
// SimConfig
// ---------------------------------------------------------------------------

std::string MethodConfig::gamma_mode() const {
    std::ostringstream os;
    if (gamma_min) {
        os << "gamma_min=" << *gamma_min;
    } else if (gamma) {
        os << "gamma=" << *gamma;
    }
    return os.str();
}

void SimConfig::validate() const {
    if (n < 2 || p < 1) throw ValidationError("sim: bad n or p");
    if (runs < 1) throw ValidationError("sim: runs must be >= 1");
    if (snr.has_value() == sigma.has_value() && family == Family::gaussian) {
        throw ValidationError("sim: set exactly one of snr / sigma");
    }
    for (const auto& [idx, val] : beta) {
        (void)val;
        if (idx < 0 || idx >= p) throw ValidationError("sim: beta index out of 1..p");
    }
    if (B_list.empty() || f_list.empty() || gamma_list.empty() || view_list.empty()) {
        throw ValidationError("sim: empty method grid");
    }
    if (group) {
        for (const auto j : *group) {
            if (j < 0 || j >= p) throw ValidationError("sim: group index out of 1..p");
        }
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("sim: alpha outside (0,1)");
}

std::vector<MethodConfig> SimConfig::method_grid() const {
    std::vector<MethodConfig> grid;
    for (const long B : B_list) {
        for (const double f : f_list) {
            if (f == 1.0 && B > 1) continue;  // a full-data split only makes sense once
            for (const double g : gamma_list) {
                for (const View v : view_list) {
                    MethodConfig m;
                    m.B = B;
                    m.fraction = f;
                    if (optimized_gamma) {
                        m.gamma_min = g;
                    } else {
                        m.gamma = g;
                    }
                    m.view = v;
                    grid.push_back(m);
                }
            }
        }
    }
    if (grid.empty()) throw ValidationError("sim: method grid is empty after filtering");
    return grid;
}

Matrix SimConfig::make_design() const {
    const std::uint64_t seed = RngStream::derive(master_seed, {kTagDesign}).next_u64();
    switch (design) {
        case DesignKind::toeplitz: return gen_toeplitz_design(n, p, rho, seed);
        case DesignKind::block_corr: return gen_block_design(n, seed);
        case DesignKind::ribo_like: return gen_ribo_like_design(seed);
        case DesignKind::custom_csv: {
            Matrix X = read_csv_matrix(design_file);
            if (X.rows() != n || X.cols() != p) {
                throw ValidationError("sim: design file dimensions disagree with n/p");
            }
            return X;
        }
    }
    throw ValidationError("sim: unknown design");
}

Vector SimConfig::beta_vector() const {
    Vector b = Vector::Zero(p);
    for (const auto& [idx, val] : beta) b[idx] = val;
    return b;
}

double SimConfig::resolve_sigma(const Matrix& X) const {
    if (family == Family::binomial) return 1.0;
    if (sigma) return *sigma;
    return snr_calibrate(X, beta_vector(), *snr);
}

std::string SimConfig::design_name() const {
    switch (design) {
        case DesignKind::toeplitz: {
            std::ostringstream os;
            os << "toeplitz(" << rho << ")";
            return os.str();
        }
        case DesignKind::block_corr: return "block_corr";
        case DesignKind::ribo_like: return "ribo_like";
        case DesignKind::custom_csv: return "csv:" + design_file;
    }
    return "?";
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("sim config: bad numeric value for '" + key + "': " + s);
    }
}

long to_long(const std::string& s, const std::string& key) {
    const double v = to_double(s, key);
    if (v != std::floor(v)) throw ValidationError("sim config: '" + key + "' must be integer");
    return static_cast<long>(v);
}

IndexList parse_index_set(const std::string& s) {
    // 1-based indices and ranges: "30-200,205".
    IndexList out;
    for (const auto& tok : split_list(s)) {
        const auto dash = tok.find('-');
        if (dash == std::string::npos) {
            out.push_back(to_long(tok, "index") - 1);
        } else {
            const long a = to_long(tok.substr(0, dash), "index");
            const long b = to_long(tok.substr(dash + 1), "index");
            if (b < a) throw ValidationError("sim config: bad index range " + tok);
            for (long j = a; j <= b; ++j) out.push_back(j - 1);
        }
    }
    return out;
}

}  // namespace

SimConfig SimConfig::parse(const std::string& text) {
    SimConfig cfg;
    cfg.gamma_list.clear();
    bool gamma_seen = false, view_seen = false, b_seen = false, f_seen = false;
    std::istringstream in(text);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("sim config: line " + std::to_string(line_no) +
                                  " is not 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "design") {
            if (val == "toeplitz") cfg.design = DesignKind::toeplitz;
            else if (val == "block") cfg.design = DesignKind::block_corr;
            else if (val == "ribo_like") cfg.design = DesignKind::ribo_like;
            else if (val.rfind("csv:", 0) == 0) {
                cfg.design = DesignKind::custom_csv;
                cfg.design_file = val.substr(4);
            } else throw ValidationError("sim config: unknown design " + val);
        } else if (key == "rho") cfg.rho = to_double(val, key);
        else if (key == "n") cfg.n = to_long(val, key);
        else if (key == "p") cfg.p = to_long(val, key);
        else if (key == "beta") {
            cfg.beta.clear();
            for (const auto& tok : split_list(val)) {
                const auto colon = tok.find(':');
                if (colon == std::string::npos) {
                    throw ValidationError("sim config: beta entries are index:value");
                }
                cfg.beta.emplace_back(to_long(tok.substr(0, colon), "beta index") - 1,
                                      to_double(tok.substr(colon + 1), "beta value"));
            }
        } else if (key == "snr") cfg.snr = to_double(val, key);
        else if (key == "sigma") cfg.sigma = to_double(val, key);
        else if (key == "family") {
            if (val == "gaussian") cfg.family = Family::gaussian;
            else if (val == "binomial") cfg.family = Family::binomial;
            else throw ValidationError("sim config: unknown family " + val);
        } else if (key == "runs") cfg.runs = to_long(val, key);
        else if (key == "alpha") cfg.alpha = to_double(val, key);
        else if (key == "selector") {
            if (val == "cv_1se") cfg.selector = SelectorRule::cv_1se;
            else if (val == "cv_min") cfg.selector = SelectorRule::cv_min;
            else if (val.rfind("fixed:", 0) == 0) {
                cfg.selector = SelectorRule::fixed_size;
                cfg.target_size = to_long(val.substr(6), key);
            } else throw ValidationError("sim config: unknown selector " + val);
        } else if (key == "sigma_mode") {
            if (val == "known") cfg.sigma_mode = SigmaMode::known;
            else if (val == "global_cv") cfg.sigma_mode = SigmaMode::global_cv;
            else if (val == "per_split") cfg.sigma_mode = SigmaMode::per_split;
            else throw ValidationError("sim config: unknown sigma_mode " + val);
        } else if (key == "B") {
            cfg.B_list.clear();
            for (const auto& tok : split_list(val)) cfg.B_list.push_back(to_long(tok, key));
            b_seen = true;
        } else if (key == "f") {
            cfg.f_list.clear();
            for (const auto& tok : split_list(val)) cfg.f_list.push_back(to_double(tok, key));
            f_seen = true;
        } else if (key == "gamma" || key == "gamma_min") {
            if (gamma_seen) throw ValidationError("sim config: gamma given twice");
            gamma_seen = true;
            cfg.optimized_gamma = key == "gamma_min";
            for (const auto& tok : split_list(val)) cfg.gamma_list.push_back(to_double(tok, key));
        } else if (key == "view") {
            cfg.view_list.clear();
            for (const auto& tok : split_list(val)) {
                if (tok == "selected") cfg.view_list.push_back(View::selected);
                else if (tok == "saturated") cfg.view_list.push_back(View::saturated);
                else throw ValidationError("sim config: unknown view " + tok);
            }
            view_seen = true;
        } else if (key == "seed") cfg.master_seed = static_cast<std::uint64_t>(to_long(val, key));
        else if (key == "group") cfg.group = parse_index_set(val);
        else if (key == "ci") cfg.ci = val == "true" || val == "1";
        else if (key == "ci_intercept") cfg.ci_intercept = val == "true" || val == "1";
        else if (key == "threads") cfg.threads = static_cast<int>(to_long(val, key));
        else if (key == "cv_folds") cfg.cv_folds = static_cast<int>(to_long(val, key));
        else if (key == "chain_samples") cfg.chain_samples = to_long(val, key);
        else if (key == "early_abort") cfg.early_abort = val == "true" || val == "1";
        else throw ValidationError("sim config: unknown key '" + key + "'");
    }
    if (!gamma_seen) {
        cfg.gamma_list = {0.05};
        cfg.optimized_gamma = true;
    }
    (void)view_seen;
    (void)b_seen;
    (void)f_seen;
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Experiment driver and metrics
// ---------------------------------------------------------------------------

namespace {

MulticarveConfig to_mc_config(const SimConfig& cfg, const MethodConfig& m, double sigma_true,
                              std::uint64_t seed) {
    MulticarveConfig mc;
    mc.B = m.B;
    mc.fraction = m.fraction;
    mc.gamma = m.gamma;
    mc.gamma_min = m.gamma_min;
    mc.alpha = cfg.alpha;
    mc.view = m.view;
    mc.family = cfg.family;
    mc.sigma_mode = cfg.sigma_mode;
    mc.sigma_known = sigma_true;
    mc.selector = cfg.selector;
    mc.target_size = cfg.target_size;
    mc.cv_folds = cfg.cv_folds;
    mc.master_seed = seed;
    mc.threads = 1;  // runs are the parallel axis
    mc.early_abort = cfg.early_abort;
    mc.chain_samples = cfg.chain_samples;
    mc.ci_intercept = cfg.ci_intercept;
    mc.group = cfg.group;
    return mc;
}

double rate_se(double rate, long n) {
    return n > 0 ? std::sqrt(rate * (1.0 - rate) / static_cast<double>(n)) : 0.0;
}

// Lower empirical quantile: k = ceil(q m)-th smallest.
double lower_quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    auto k = static_cast<std::size_t>(
        std::ceil(q * static_cast<double>(v.size()) - 1e-9));
    k = std::min(std::max<std::size_t>(k, 1), v.size());
    std::nth_element(v.begin(), v.begin() + static_cast<long>(k - 1), v.end());
    return v[k - 1];
}

double bootstrap_se(const std::vector<double>& v, double q, std::uint64_t seed) {
    if (v.size() < 2) return 0.0;
    RngStream rng(seed);
    const int reps = 200;
    std::vector<double> stats(reps);
    std::vector<double> sample(v.size());
    for (int r = 0; r < reps; ++r) {
        for (auto& s : sample) s = v[rng.next_below(v.size())];
        stats[static_cast<std::size_t>(r)] = lower_quantile(sample, q);
    }
    double mean = 0.0;
    long finite = 0;
    for (const double s : stats) {
        if (std::isfinite(s)) {
            mean += s;
            ++finite;
        }
    }
    if (finite < 2) return 0.0;
    mean /= static_cast<double>(finite);
    double ss = 0.0;
    for (const double s : stats) {
        if (std::isfinite(s)) ss += (s - mean) * (s - mean);
    }
    return std::sqrt(ss / static_cast<double>(finite - 1));
}

}  // namespace

MetricsTable compute_metrics(const SimConfig& cfg,
                             const std::vector<std::vector<RunMethodResult>>& records) {
    cfg.validate();
    const auto grid = cfg.method_grid();
    const Vector beta_true = cfg.beta_vector();
    IndexList actives;
    for (Eigen::Index j = 0; j < cfg.p; ++j) {
        if (beta_true[j] != 0.0) actives.push_back(j);
    }
    // The design is deterministic per seed; regenerate it for coverage targets.
    Matrix X;
    if (cfg.ci) X = cfg.make_design();

    MetricsTable table;
    for (std::size_t m = 0; m < grid.size(); ++m) {
        const MethodConfig& method = grid[m];
        auto push = [&](const std::string& metric, double value, double se, long nruns) {
            MetricRow row;
            row.design = cfg.design_name();
            row.family = family_name(cfg.family);
            row.gamma_mode = method.B == 1 ? "single" : method.gamma_mode();
            row.view = method.view == View::selected ? "selected" : "saturated";
            row.metric = metric;
            row.B = method.B;
            row.fraction = method.fraction;
            row.value = value;
            row.mc_se = se;
            row.runs = nruns;
            table.rows.push_back(std::move(row));
        };

        std::vector<const RunMethodResult*> ok;
        long failed = 0;
        for (const auto& run : records) {
            const auto& rec = run[m];
            if (rec.failed) {
                ++failed;
            } else {
                ok.push_back(&rec);
            }
        }
        const long R = static_cast<long>(ok.size());
        if (failed > 0) push("failed_runs", static_cast<double>(failed), 0.0, failed);
        if (R == 0) continue;

        if (cfg.group) {
            long rejected = 0;
            for (const auto* rec : ok) {
                if (rec->group_p && *rec->group_p <= cfg.alpha) ++rejected;
            }
            const double err = static_cast<double>(rejected) / static_cast<double>(R);
            push("err", err, rate_se(err, R), R);
            continue;
        }

        if (cfg.ci) {
            // Coverage of eq. across splits, false coverage rates and interval
            // length summaries.
            std::vector<std::vector<double>> len_by_active(actives.size());
            std::vector<long> covered_all_of_runs(static_cast<std::size_t>(cfg.p), 0);
            std::vector<long> appeared(static_cast<std::size_t>(cfg.p), 0);
            double false_all_sum = 0.0, false_tested_sum = 0.0;
            long tested_runs = 0;
            std::vector<std::vector<double>> len_quant_runs(5);
            std::map<std::vector<Eigen::Index>, Vector> target_cache;

            for (const auto* rec : ok) {
                long false_count = 0, tested = 0;
                std::vector<double> lengths_selected;
                std::vector<bool> seen(static_cast<std::size_t>(cfg.p), false);
                for (const auto& sup : rec->split_supports) {
                    for (const auto j : sup) seen[static_cast<std::size_t>(j)] = true;
                }
                for (Eigen::Index j = 0; j < cfg.p; ++j) {
                    const auto& ci = rec->cis[static_cast<std::size_t>(j)];
                    bool covered = true;
                    for (const auto& sup : rec->split_supports) {
                        const auto pos = std::find(sup.begin(), sup.end(), j);
                        if (pos == sup.end()) continue;
                        std::vector<Eigen::Index> key(sup.begin(), sup.end());
                        auto it = target_cache.find(key);
                        if (it == target_cache.end()) {
                            Vector t = cfg.ci_intercept
                                           ? submodel_target_intercept(X, beta_true, sup)
                                           : submodel_target(X, beta_true, sup);
                            it = target_cache.emplace(std::move(key), std::move(t)).first;
                        }
                        const double target = it->second[pos - sup.begin()];
                        if (target < ci.lower || target > ci.upper) {
                            covered = false;
                            break;
                        }
                    }
                    if (covered) ++covered_all_of_runs[static_cast<std::size_t>(j)];
                    if (seen[static_cast<std::size_t>(j)]) {
                        ++appeared[static_cast<std::size_t>(j)];
                        ++tested;
                        lengths_selected.push_back(ci.upper - ci.lower);
                        if (!covered) ++false_count;
                    }
                }
                false_all_sum += static_cast<double>(false_count) / static_cast<double>(cfg.p);
                if (tested > 0) {
                    false_tested_sum += static_cast<double>(false_count) / static_cast<double>(tested);
                    ++tested_runs;
                }
                for (int q = 0; q < 5; ++q) {
                    len_quant_runs[static_cast<std::size_t>(q)].push_back(
                        lower_quantile(lengths_selected, 0.1 * (q + 1)));
                }
                for (std::size_t a = 0; a < actives.size(); ++a) {
                    const auto& ci = rec->cis[static_cast<std::size_t>(actives[a])];
                    len_by_active[a].push_back(ci.upper - ci.lower);
                }
            }

            for (std::size_t a = 0; a < actives.size(); ++a) {
                const double med = lower_quantile(len_by_active[a], 0.5);
                push("ci_median_len_v" + std::to_string(actives[a] + 1), med,
                     bootstrap_se(len_by_active[a], 0.5,
                                  RngStream::derive(cfg.master_seed, {kTagBoot, m, a}).next_u64()),
                     R);
            }
            push("ci_false_cover_all", false_all_sum / static_cast<double>(R),
                 rate_se(false_all_sum / static_cast<double>(R), R * cfg.p), R);
            if (tested_runs > 0) {
                push("ci_false_cover_tested", false_tested_sum / static_cast<double>(tested_runs),
                     0.0, tested_runs);
            }
            double min_cov = 1.0;
            for (Eigen::Index j = 0; j < cfg.p; ++j) {
                const double cov = static_cast<double>(covered_all_of_runs[static_cast<std::size_t>(j)]) /
                                   static_cast<double>(R);
                min_cov = std::min(min_cov, cov);
            }
            push("ci_coverage_min", min_cov, rate_se(min_cov, R), R);
            for (int q = 0; q < 5; ++q) {
                push("ci_len_q" + std::to_string(10 * (q + 1)),
                     lower_quantile(len_quant_runs[static_cast<std::size_t>(q)], 0.5),
                     bootstrap_se(len_quant_runs[static_cast<std::size_t>(q)], 0.5,
                                  RngStream::derive(cfg.master_seed,
                                                    {kTagBoot, m,
                                                     static_cast<std::uint64_t>(100 + q)})
                                      .next_u64()),
                     R);
            }
            continue;
        }

        // Testing metrics: FWER, power and power adjusted to an empirical
        // critical value (the floor(alpha R)-th smallest per-run minimum null
        // aggregated p; rejection is strict, so the adjusted FWER is < alpha).
        long fwer_count = 0;
        double power_sum = 0.0;
        std::vector<double> min_null(static_cast<std::size_t>(R), 1.0);
        for (long r = 0; r < R; ++r) {
            const Vector& agg = ok[static_cast<std::size_t>(r)]->aggregated;
            bool any_false = false;
            long true_hits = 0;
            double mn = 1.0;
            for (Eigen::Index j = 0; j < cfg.p; ++j) {
                const bool active = beta_true[j] != 0.0;
                if (agg[j] <= cfg.alpha) {
                    if (active) {
                        ++true_hits;
                    } else {
                        any_false = true;
                    }
                }
                if (!active) mn = std::min(mn, agg[j]);
            }
            if (any_false) ++fwer_count;
            if (!actives.empty()) {
                power_sum += static_cast<double>(true_hits) / static_cast<double>(actives.size());
            }
            min_null[static_cast<std::size_t>(r)] = mn;
        }
        const double fwer = static_cast<double>(fwer_count) / static_cast<double>(R);
        push("fwer", fwer, rate_se(fwer, R), R);
        const double power = actives.empty() ? 0.0 : power_sum / static_cast<double>(R);
        push("power", power, rate_se(power, R), R);

        std::vector<double> sorted_null = min_null;
        std::sort(sorted_null.begin(), sorted_null.end());
        const auto k = static_cast<std::size_t>(std::floor(cfg.alpha * static_cast<double>(R)));
        const double crit = k >= 1 ? sorted_null[k - 1] : 0.0;
        double adj_sum = 0.0;
        for (long r = 0; r < R; ++r) {
            const Vector& agg = ok[static_cast<std::size_t>(r)]->aggregated;
            long hits = 0;
            for (const auto j : actives) {
                if (agg[j] < crit) ++hits;
            }
            if (!actives.empty()) {
                adj_sum += static_cast<double>(hits) / static_cast<double>(actives.size());
            }
        }
        const double adj = actives.empty() ? 0.0 : adj_sum / static_cast<double>(R);
        push("adjusted_power", adj, rate_se(adj, R), R);
    }
    return table;
}

ExperimentResult run_experiment(const SimConfig& cfg) {
    cfg.validate();
    const auto grid = cfg.method_grid();
    const Matrix X = cfg.make_design();
    const Vector beta_true = cfg.beta_vector();
    const double sigma_true = cfg.resolve_sigma(X);

    ExperimentResult result;
    result.records.assign(static_cast<std::size_t>(cfg.runs),
                          std::vector<RunMethodResult>(grid.size()));

    parallel_for(cfg.runs, cfg.threads, [&](long r) {
        Dataset data;
        data.X = X;
        data.family = cfg.family;
        data.y = gen_response(X, beta_true, sigma_true, cfg.family,
                              RngStream::derive(cfg.master_seed, {kTagResponse,
                                                                  static_cast<std::uint64_t>(r)})
                                  .next_u64());
        for (std::size_t m = 0; m < grid.size(); ++m) {
            RunMethodResult& rec = result.records[static_cast<std::size_t>(r)][m];
            const std::uint64_t seed =
                RngStream::derive(cfg.master_seed,
                                  {kTagMethod, static_cast<std::uint64_t>(r), m})
                    .next_u64();
            try {
                const MulticarveConfig mc = to_mc_config(cfg, grid[m], sigma_true, seed);
                if (cfg.ci) {
                    InferenceReport rep = confidence_intervals(data, mc);
                    rec.cis = std::move(rep.cis);
                    rec.aggregated = std::move(rep.aggregated);
                    for (const auto& tr : rep.splits) rec.split_supports.push_back(tr.support);
                } else {
                    InferenceReport rep = multicarve(data, mc);
                    rec.aggregated = std::move(rep.aggregated);
                    rec.group_p = rep.group_p;
                }
            } catch (const std::exception& e) {
                rec.failed = true;
                rec.fail_reason = e.what();
            }
        }
    });

    result.table = compute_metrics(cfg, result.records);
    return result;
}

}  // namespace carving
