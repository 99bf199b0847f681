/* cutpoint-select C API.
 *
 * Shared-library interface for identifying outcome-associated cutoffs in
 * continuous predictors via L1-penalized additive logistic regression with
 * stability selection, plus the accompanying simulation engine.
 *
 * Conventions
 *   - Every fallible call returns a cutsel_status; CUTSEL_OK is 0.
 *   - On failure, cutsel_last_error() returns a thread-local human-readable
 *     message describing the most recent failing call on this thread.
 *   - Objects are opaque handles created and released through this API.
 *   - Configuration travels as JSON text (UTF-8); unknown keys are rejected.
 *   - Returned strings are owned by the handle they came from (or by the
 *     library for version/error text) and must not be freed by the caller.
 */

#ifndef CUTSEL_H
#define CUTSEL_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cutsel_status {
    CUTSEL_OK = 0,
    CUTSEL_ERROR_INVALID_ARGUMENT = 1, /* bad configuration or parameter */
    CUTSEL_ERROR_DATA = 2,             /* unusable input data */
    CUTSEL_ERROR_IO = 3,               /* file read/write failure */
    CUTSEL_ERROR_NUMERIC = 4,          /* solver or simulation failure */
    CUTSEL_ERROR_INTERNAL = 5          /* unexpected condition */
} cutsel_status;

/* Library semantic version, e.g. "0.1.0". Static storage. */
const char* cutsel_version(void);

/* Message describing the most recent failure on the calling thread, or ""
 * if no call on this thread has failed yet. Thread-local storage; valid
 * until the next failing call on the same thread. */
const char* cutsel_last_error(void);

/* ------------------------------------------------------------------ */
/* Datasets                                                            */

typedef struct cutsel_dataset cutsel_dataset;

/* Reads a CSV file into a dataset.
 *
 * schema_json describes the expected shape, or NULL for the default
 * (outcome column "outcome", every other column a continuous predictor):
 *   {
 *     "outcome": "outcome",
 *     "predictors": [{"name": "Hg", "kind": "continuous"}, ...],  // or omit
 *     "delimiter": ",",
 *     "outcome_values": {"normal": 0, "abnormal": 1},             // optional
 *     "preset": "cbc"      // blood-count panel schema; overrides the rest
 *   }
 *
 * Rows with missing or unparseable cells are dropped and counted
 * (cutsel_dataset_dropped_rows). A missing outcome column, zero usable rows,
 * or outcome values outside {0,1} after coercion fail with
 * CUTSEL_ERROR_DATA; an unreadable file with CUTSEL_ERROR_IO. */
cutsel_status cutsel_dataset_read_csv(const char* path, const char* schema_json,
                                      cutsel_dataset** out);

/* Builds a dataset from memory. features is row-major with n rows and p
 * columns; outcome holds n values in {0,1}; names holds p predictor names,
 * or NULL for generated names x1..xp. */
cutsel_status cutsel_dataset_from_arrays(const double* features, const int32_t* outcome,
                                         int64_t n, int64_t p, const char* const* names,
                                         cutsel_dataset** out);

int64_t cutsel_dataset_rows(const cutsel_dataset* data);
int64_t cutsel_dataset_predictors(const cutsel_dataset* data);
/* Rows dropped during CSV ingestion (0 for array-built datasets). */
int64_t cutsel_dataset_dropped_rows(const cutsel_dataset* data);
/* Name of predictor column j (0-based), or NULL if j is out of range.
 * Owned by the dataset handle. */
const char* cutsel_dataset_predictor_name(const cutsel_dataset* data, int64_t j);

void cutsel_dataset_free(cutsel_dataset* data);

/* ------------------------------------------------------------------ */
/* Runs                                                                */

typedef struct cutsel_result cutsel_result;

/* All three entry points accept a JSON configuration (NULL or "" for all
 * defaults) and resolve every omitted setting to its documented default;
 * the fully resolved configuration is echoed in the report. Shared keys:
 *
 *   "seed":      integer, RNG seed (default 0)
 *   "workers":   integer >= 0, worker threads; 0 = automatic (default 0)
 *   "timestamp": string placed in the report verbatim; fixing it makes
 *                reruns byte-identical (default: current UTC time)
 *   "grid":      {"strategy": "percentile", "levels": [5,10,...,95]}
 *                | {"strategy": "uniform", "count": K}
 *                | {"strategy": "explicit", "cutpoints": {"Hg": [10.5, ...]}}
 *   "weights":   {"rule": "balanced"} | {"rule": "explicit", "omega": W}
 *   "tolerance": solver stationarity tolerance (default 1e-7)
 *
 * If out_dir is non-NULL, the run writes selection_probabilities.csv,
 * cutoffs.csv, report.json and selection_probabilities.svg there (the
 * directory is created if needed). If out is non-NULL it receives a result
 * handle; pass NULL when only the files are wanted. */

/* Single regularized fit over a lambda path (or one lambda).
 * Extra keys: "lambda": {"rule": "path"} (default)
 *                       | {"rule": "fixed", "value": L}
 *                       | {"rule": "fraction_of_max", "fraction": F},
 *             "path": {"count": 50, "min_ratio": 0.01}. */
cutsel_status cutsel_run_fit(const cutsel_dataset* data, const char* config_json,
                             const char* out_dir, cutsel_result** out);

/* Stability selection: subsample, refit, aggregate selection probabilities,
 * recommend cutoffs.
 * Extra keys: "stability": {"subsamples": 100, "fraction": 0.5,
 *                           "threshold": 0.75},
 *             "lambda": {"rule": "fraction_of_max", "fraction": 0.3}
 *                       | {"rule": "fixed", "value": L}
 *                       | {"rule": "ebic", "gamma": 0.5,
 *                          "path": {"count": 50, "min_ratio": 0.01}}. */
cutsel_status cutsel_run_stability(const cutsel_dataset* data, const char* config_json,
                                   const char* out_dir, cutsel_result** out);

/* Synthetic-data scenario with replicated outcome generation and stability
 * selection per replication.
 * Extra keys: "scenario": "A"|"B"|"C"|"D"|"null" or an object
 *             {"id": ..., "n": ..., "replications": ...,
 *              "target_rate": 0.07, "fresh_features": false,
 *              "relevant": [{"predictor": "Hg", "percentile": 0.5,
 *                            "beta": 1.5}, ...],
 *              "profile": "low"|"block", "block_rho": 0.7,
 *              "background_rho": 0.1},
 *             "stability" and "lambda" as in cutsel_run_stability. */
cutsel_status cutsel_run_simulate(const char* config_json, const char* out_dir,
                                  cutsel_result** out);

/* Full report as JSON text (the same bytes written to report.json, without
 * the trailing newline). Owned by the result handle. */
const char* cutsel_result_report_json(const cutsel_result* result);

void cutsel_result_free(cutsel_result* result);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CUTSEL_H */
