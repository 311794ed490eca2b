#include "carving/carving.h"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "carving/csv.hpp"
#include "carving/glm.hpp"
#include "carving/lasso.hpp"
#include "carving/multi.hpp"
#include "carving/report_io.hpp"
#include "carving/rng.hpp"
#include "carving/sim.hpp"
#include "carving/stats.hpp"
#include "carving/truncnorm.hpp"

using nlohmann::json;

struct carve_dataset {
    carving::Dataset data;
};

struct carve_report {
    std::string json_text;
    std::string csv_text;
};

struct carve_metrics {
    std::string csv_text;
    std::string json_text;
    std::string runs_jsonl;
};

namespace {

thread_local std::string g_last_error;

carve_status fail(carve_status code, const char* what) {
    g_last_error = what;
    return code;
}

template <typename Fn>
carve_status guarded(Fn&& fn) {
    try {
        fn();
        return CARVE_OK;
    } catch (const carving::ValidationError& e) {
        return fail(CARVE_ERR_VALIDATION, e.what());
    } catch (const carving::NumericError& e) {
        return fail(CARVE_ERR_NUMERIC, e.what());
    } catch (const std::exception& e) {
        return fail(CARVE_ERR_INTERNAL, e.what());
    }
}

carving::Family parse_family(const char* family) {
    if (family == nullptr || std::strcmp(family, "gaussian") == 0) {
        return carving::Family::gaussian;
    }
    if (std::strcmp(family, "binomial") == 0) return carving::Family::binomial;
    throw carving::ValidationError("unknown family (use gaussian or binomial)");
}

carving::MulticarveConfig parse_config(const carving::Dataset& data, const char* config_json) {
    carving::MulticarveConfig cfg;
    cfg.family = data.family;
    cfg.gamma_min = 0.05;
    if (config_json == nullptr || *config_json == '\0') return cfg;
    json j;
    try {
        j = json::parse(config_json);
    } catch (const std::exception& e) {
        throw carving::ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    if (j.contains("B")) cfg.B = j["B"].get<long>();
    if (j.contains("fraction")) cfg.fraction = j["fraction"].get<double>();
    if (j.contains("gamma")) {
        cfg.gamma = j["gamma"].get<double>();
        cfg.gamma_min.reset();
    }
    if (j.contains("gamma_min")) {
        cfg.gamma_min = j["gamma_min"].get<double>();
        if (j.contains("gamma")) throw carving::ValidationError("config: gamma and gamma_min");
    }
    if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
    if (j.contains("view")) {
        const std::string v = j["view"].get<std::string>();
        if (v == "selected") cfg.view = carving::View::selected;
        else if (v == "saturated") cfg.view = carving::View::saturated;
        else throw carving::ValidationError("config: unknown view " + v);
    }
    if (j.contains("sigma")) {
        if (j["sigma"].is_number()) {
            cfg.sigma_mode = carving::SigmaMode::known;
            cfg.sigma_known = j["sigma"].get<double>();
        } else {
            const std::string s = j["sigma"].get<std::string>();
            if (s == "global-cv") cfg.sigma_mode = carving::SigmaMode::global_cv;
            else if (s == "per-split") cfg.sigma_mode = carving::SigmaMode::per_split;
            else if (s.rfind("known:", 0) == 0) {
                cfg.sigma_mode = carving::SigmaMode::known;
                cfg.sigma_known = std::stod(s.substr(6));
            } else throw carving::ValidationError("config: unknown sigma mode " + s);
        }
    }
    if (j.contains("selector")) {
        const std::string s = j["selector"].get<std::string>();
        if (s == "cv_1se") cfg.selector = carving::SelectorRule::cv_1se;
        else if (s == "cv_min") cfg.selector = carving::SelectorRule::cv_min;
        else if (s.rfind("fixed:", 0) == 0) {
            cfg.selector = carving::SelectorRule::fixed_size;
            cfg.target_size = std::stol(s.substr(6));
        } else if (s.rfind("lambda:", 0) == 0) {
            cfg.selector = carving::SelectorRule::fixed_lambda;
            cfg.lambda = std::stod(s.substr(7));
        } else {
            throw carving::ValidationError("config: unknown selector " + s);
        }
    }
    if (j.contains("seed")) cfg.master_seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("cv_folds")) cfg.cv_folds = j["cv_folds"].get<int>();
    if (j.contains("chain_samples")) cfg.chain_samples = j["chain_samples"].get<long>();
    if (j.contains("early_abort")) cfg.early_abort = j["early_abort"].get<bool>();
    if (j.contains("standardize")) cfg.standardize = j["standardize"].get<bool>();
    if (j.contains("ci_intercept")) cfg.ci_intercept = j["ci_intercept"].get<bool>();
    if (j.contains("group")) {
        carving::IndexList g;
        for (const auto& v : j["group"]) g.push_back(v.get<Eigen::Index>() - 1);
        cfg.group = std::move(g);
    }
    if (j.contains("group_correction")) {
        const std::string s = j["group_correction"].get<std::string>();
        if (s == "none") cfg.group_correction = carving::GroupCorrection::none;
        else if (s == "p-over-g") cfg.group_correction = carving::GroupCorrection::p_over_group;
        else if (s == "support-ratio") {
            cfg.group_correction = carving::GroupCorrection::support_ratio;
        } else {
            throw carving::ValidationError("config: unknown group_correction " + s);
        }
    }
    return cfg;
}

}  // namespace

extern "C" {

const char* carve_version(void) { return "carving 1.0.0"; }

const char* carve_last_error(void) { return g_last_error.c_str(); }

carve_status carve_dataset_create(const double* x, size_t n, size_t p, const double* y,
                                  const char* family, carve_dataset** out) {
    if (x == nullptr || y == nullptr || out == nullptr) {
        return fail(CARVE_ERR_VALIDATION, "null pointer argument");
    }
    return guarded([&] {
        auto ds = std::make_unique<carve_dataset>();
        ds->data.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < p; ++j) {
                ds->data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    x[i * p + j];
            }
        }
        ds->data.y = Eigen::Map<const carving::Vector>(y, static_cast<Eigen::Index>(n));
        ds->data.family = parse_family(family);
        ds->data.validate();
        *out = ds.release();
    });
}

carve_status carve_dataset_from_csv(const char* x_path, const char* y_path, const char* family,
                                    carve_dataset** out) {
    if (x_path == nullptr || y_path == nullptr || out == nullptr) {
        return fail(CARVE_ERR_VALIDATION, "null pointer argument");
    }
    return guarded([&] {
        auto ds = std::make_unique<carve_dataset>();
        ds->data.X = carving::read_csv_matrix(x_path);
        ds->data.y = carving::read_csv_vector(y_path);
        ds->data.family = parse_family(family);
        ds->data.validate();
        *out = ds.release();
    });
}

void carve_dataset_free(carve_dataset* ds) { delete ds; }

carve_status carve_run(const carve_dataset* ds, const char* config_json, carve_report** out) {
    if (ds == nullptr || out == nullptr) return fail(CARVE_ERR_VALIDATION, "null handle");
    return guarded([&] {
        const carving::MulticarveConfig cfg = parse_config(ds->data, config_json);
        const carving::InferenceReport rep = carving::multicarve(ds->data, cfg);
        auto handle = std::make_unique<carve_report>();
        handle->json_text = carving::report_to_json(rep, cfg);
        handle->csv_text = carving::report_to_csv(rep);
        *out = handle.release();
    });
}

carve_status carve_confidence_intervals(const carve_dataset* ds, const char* config_json,
                                        carve_report** out) {
    if (ds == nullptr || out == nullptr) return fail(CARVE_ERR_VALIDATION, "null handle");
    return guarded([&] {
        carving::MulticarveConfig cfg = parse_config(ds->data, config_json);
        cfg.view = carving::View::saturated;
        if (cfg.sigma_mode == carving::SigmaMode::global_cv && config_json != nullptr &&
            std::string(config_json).find("sigma") == std::string::npos) {
            cfg.sigma_mode = carving::SigmaMode::per_split;  // the CI default
        }
        const carving::InferenceReport rep = carving::confidence_intervals(ds->data, cfg);
        auto handle = std::make_unique<carve_report>();
        handle->json_text = carving::report_to_json(rep, cfg);
        handle->csv_text = carving::report_to_csv(rep);
        *out = handle.release();
    });
}

const char* carve_report_json(const carve_report* rep) {
    return rep ? rep->json_text.c_str() : "";
}

const char* carve_report_csv(const carve_report* rep) {
    return rep ? rep->csv_text.c_str() : "";
}

void carve_report_free(carve_report* rep) { delete rep; }

carve_status carve_simulate(const char* sim_config_text, int threads, const char* replay_jsonl,
                            carve_metrics** out) {
    if (sim_config_text == nullptr || out == nullptr) {
        return fail(CARVE_ERR_VALIDATION, "null pointer argument");
    }
    return guarded([&] {
        carving::SimConfig cfg = carving::SimConfig::parse(sim_config_text);
        if (threads > 0) cfg.threads = threads;
        auto handle = std::make_unique<carve_metrics>();
        if (replay_jsonl != nullptr) {
            const auto records = carving::records_from_jsonl(replay_jsonl);
            const carving::MetricsTable table = carving::compute_metrics(cfg, records);
            handle->csv_text = carving::metrics_to_csv(table);
            handle->json_text = carving::metrics_to_json(table);
            handle->runs_jsonl = replay_jsonl;
        } else {
            const carving::ExperimentResult result = carving::run_experiment(cfg);
            handle->csv_text = carving::metrics_to_csv(result.table);
            handle->json_text = carving::metrics_to_json(result.table);
            handle->runs_jsonl = carving::records_to_jsonl(result.records);
        }
        *out = handle.release();
    });
}

const char* carve_metrics_csv(const carve_metrics* m) { return m ? m->csv_text.c_str() : ""; }
const char* carve_metrics_json(const carve_metrics* m) { return m ? m->json_text.c_str() : ""; }
const char* carve_metrics_runs_jsonl(const carve_metrics* m) {
    return m ? m->runs_jsonl.c_str() : "";
}

void carve_metrics_free(carve_metrics* m) { delete m; }

carve_status carve_selftest(int verbose) {
    return guarded([&] {
        using namespace carving;
        auto check = [&](bool ok, const char* name) {
            if (verbose) std::printf("%s: %s\n", ok ? "PASS" : "FAIL", name);
            if (!ok) throw NumericError(std::string("selftest failed: ") + name);
        };

        // Gaussian conditioning against the partitioned-Gaussian oracle.
        {
            RngStream rng(7);
            Matrix base(5, 5);
            for (Eigen::Index i = 0; i < 5; ++i) {
                for (Eigen::Index j = 0; j < 5; ++j) base(i, j) = rng.next_normal();
            }
            Matrix sigma = base * base.transpose() + 0.5 * Matrix::Identity(5, 5);
            Vector mu(5);
            for (Eigen::Index i = 0; i < 5; ++i) mu[i] = rng.next_normal();
            Matrix C(2, 5);
            for (Eigen::Index i = 0; i < 2; ++i) {
                for (Eigen::Index j = 0; j < 5; ++j) C(i, j) = rng.next_normal();
            }
            Vector d(2);
            d << 0.3, -1.1;
            const GaussianLaw out = condition_on_linear(make_law(mu, sigma), C, d);
            const Matrix S12 = sigma * C.transpose();
            const Matrix S22i = (C * sigma * C.transpose()).inverse();
            const Vector mu_oracle = mu + S12 * S22i * (d - C * mu);
            const Matrix sig_oracle = sigma - S12 * S22i * S12.transpose();
            check((out.mu - mu_oracle).lpNorm<Eigen::Infinity>() < 1e-8 &&
                      (out.sigma - sig_oracle).lpNorm<Eigen::Infinity>() < 1e-8,
                  "conditioning matches partitioned-Gaussian formula");
        }

        // Truncated normal tail against Simpson quadrature.
        {
            auto simpson = [](double a, double b) {
                const int steps = 40000;
                double acc = 0.0;
                const double h = (b - a) / steps;
                for (int i = 0; i < steps; ++i) {
                    const double x0 = a + i * h;
                    acc += h / 6.0 *
                           (norm_pdf(x0) + 4.0 * norm_pdf(x0 + 0.5 * h) + norm_pdf(x0 + h));
                }
                return acc;
            };
            const double p = truncnorm_tail(-1.0, 2.5, 0.7);
            const double q = simpson(0.7, 2.5) / simpson(-1.0, 2.5);
            check(std::abs(p - q) < 1e-9, "truncated normal tail matches quadrature");
        }

        // Lasso against a proximal-gradient oracle.
        {
            RngStream rng(11);
            Matrix X(20, 8);
            Vector y(20);
            for (Eigen::Index i = 0; i < 20; ++i) {
                for (Eigen::Index j = 0; j < 8; ++j) X(i, j) = rng.next_normal();
                y[i] = rng.next_normal();
            }
            const double lambda = 0.3 * (X.transpose() * y).lpNorm<Eigen::Infinity>();
            const LassoFit fit = fit_lasso(X, y, lambda);
            Vector beta = Vector::Zero(8);
            const double step =
                1.0 / Eigen::SelfAdjointEigenSolver<Matrix>(X.transpose() * X)
                          .eigenvalues()
                          .maxCoeff();
            for (int it = 0; it < 200000; ++it) {
                const Vector grad = X.transpose() * (X * beta - y);
                Vector next = beta - step * grad;
                for (Eigen::Index j = 0; j < 8; ++j) {
                    const double t = lambda * step;
                    next[j] = next[j] > t ? next[j] - t : (next[j] < -t ? next[j] + t : 0.0);
                }
                if ((next - beta).lpNorm<Eigen::Infinity>() < 1e-13) {
                    beta = next;
                    break;
                }
                beta = next;
            }
            check((fit.beta_hat - beta).lpNorm<Eigen::Infinity>() < 1e-6,
                  "lasso matches proximal-gradient oracle");
        }

        // Hit-and-run containment on a box.
        {
            Matrix A(4, 2);
            A << 1, 0, -1, 0, 0, 1, 0, -1;
            Vector b(4);
            b << 1, 0, 1, 0;
            Vector start(2);
            start << 0.5, 0.5;
            ConstrainedGaussianState st =
                whiten(make_law(Vector::Zero(2), Matrix::Identity(2, 2)), A, b, start);
            ChainConfig cc;
            cc.n_samples = 4000;
            cc.burn_in = 200;
            cc.seed = 99;
            const auto [samples, diag] = hit_and_run(st, cc);
            bool inside = true;
            for (Eigen::Index i = 0; i < samples.rows(); ++i) {
                const Vector v = samples.row(i).transpose();
                if (((A * v - b).array() > 1e-9).any()) inside = false;
            }
            check(inside && diag.steps >= 4000, "hit-and-run stays inside the polyhedron");
        }
    });
}

}  // extern "C"
