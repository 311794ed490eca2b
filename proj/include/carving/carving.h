/* C API for the carving inference engine: opaque handles, integer status
 * codes, strings owned by their handle. Thread-safe apart from the
 * thread-local error message. */
#ifndef CARVING_CARVING_H
#define CARVING_CARVING_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum carve_status {
    CARVE_OK = 0,
    CARVE_ERR_VALIDATION = 2, /* bad input: matches CLI exit code 2 */
    CARVE_ERR_NUMERIC = 3,    /* numerical failure: matches CLI exit code 3 */
    CARVE_ERR_INTERNAL = 4
} carve_status;

typedef struct carve_dataset carve_dataset;
typedef struct carve_report carve_report;
typedef struct carve_metrics carve_metrics;

const char* carve_version(void);

/* Message from the most recent failing call on this thread. */
const char* carve_last_error(void);

/* x is row-major n*p; family is "gaussian" or "binomial". */
carve_status carve_dataset_create(const double* x, size_t n, size_t p, const double* y,
                                  const char* family, carve_dataset** out);
carve_status carve_dataset_from_csv(const char* x_path, const char* y_path, const char* family,
                                    carve_dataset** out);
void carve_dataset_free(carve_dataset* ds);

/* config_json keys (defaults in parentheses): B (1), fraction (0.5),
 * gamma_min / gamma (gamma_min 0.05), alpha (0.05), view ("selected"),
 * sigma ("global-cv" | "per-split" | number), selector ("cv_1se" | "cv_min" |
 * "fixed:K" | "lambda:L"), seed (0), threads (1), group (1-based array),
 * group_correction ("none" | "p-over-g" | "support-ratio"),
 * chain_samples (0 = automatic), early_abort (true), standardize (true),
 * ci_intercept (true). */
carve_status carve_run(const carve_dataset* ds, const char* config_json, carve_report** out);

/* Multicarving confidence intervals (saturated view). */
carve_status carve_confidence_intervals(const carve_dataset* ds, const char* config_json,
                                        carve_report** out);

/* Strings owned by the report; valid until carve_report_free. */
const char* carve_report_json(const carve_report* rep);
const char* carve_report_csv(const carve_report* rep);
void carve_report_free(carve_report* rep);

/* sim_config_text is the key = value experiment description; replay_jsonl,
 * when non-NULL, recomputes metrics from an archived run set instead of
 * simulating. threads <= 0 leaves the config's value. */
carve_status carve_simulate(const char* sim_config_text, int threads, const char* replay_jsonl,
                            carve_metrics** out);
const char* carve_metrics_csv(const carve_metrics* m);
const char* carve_metrics_json(const carve_metrics* m);
const char* carve_metrics_runs_jsonl(const carve_metrics* m);
void carve_metrics_free(carve_metrics* m);

/* Built-in oracle checks (conditioning, truncated normal, lasso, sampler);
 * returns CARVE_OK when all pass. verbose prints one line per check. */
carve_status carve_selftest(int verbose);

#ifdef __cplusplus
}
#endif

#endif /* CARVING_CARVING_H */
