/*
 * Copyright 2026 The ctrec Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the ctrec library. Every function returns a ctr_status;
 * on failure ctr_last_error() describes the problem for the calling thread.
 * Objects are opaque and released with their matching *_free function. */

#ifndef CTREC_CTREC_H
#define CTREC_CTREC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CTR_API __declspec(dllexport)
#else
#define CTR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ctr_status {
    CTR_OK = 0,
    CTR_INVALID_ARGUMENT,
    CTR_EMPTY_HIERARCHY,
    CTR_ZERO_ROW,
    CTR_NON_DIVISOR,
    CTR_DIMENSION_OVERFLOW,
    CTR_SHAPE_MISMATCH,
    CTR_INSUFFICIENT_RESIDUALS,
    CTR_DEGENERATE_VARIANCE,
    CTR_SINGULAR_COVARIANCE,
    CTR_SINGULAR_SYSTEM,
    CTR_NOT_CONVERGED,
    CTR_ZERO_MEAN_ACTUALS,
    CTR_ZERO_REFERENCE,
    CTR_DEGENERATE_TABLE,
    CTR_INSUFFICIENT_HISTORY,
    CTR_SCHEMA_ERROR,
    CTR_MISSING_CELL,
    CTR_BAD_PARTITION,
    CTR_PARSE_ERROR,
    CTR_IO_ERROR,
    CTR_INTERNAL_ERROR = 100
} ctr_status;

typedef struct ctr_structure ctr_structure; /* cross-temporal hierarchy */
typedef struct ctr_forecasts ctr_forecasts; /* forecast sets keyed by replication */
typedef struct ctr_residuals ctr_residuals; /* in-sample residual panel */

CTR_API const char* ctr_version(void);
CTR_API const char* ctr_last_error(void);
CTR_API const char* ctr_status_name(ctr_status status);
/* Nonzero for numerical failures (singular systems, degenerate variances, ...). */
CTR_API int ctr_status_is_numerical(ctr_status status);

/* orders: comma separated, e.g. "24,12,8,6,4,3,2,1". */
CTR_API ctr_status ctr_structure_from_file(const char* hierarchy_path, int m, const char* orders, ctr_structure** out);
/* agg is the n_a x n_b aggregation matrix in row-major order; labels may be NULL. */
CTR_API ctr_status ctr_structure_from_matrix(const double* agg, size_t n_a, size_t n_b, const char* const* labels,
                                             int m, const int* orders, size_t n_orders, ctr_structure** out);
/* Temporal structure from the m and orders keys of an experiment config file. */
CTR_API ctr_status ctr_structure_from_config(const char* hierarchy_path, const char* config_path, ctr_structure** out);
CTR_API void ctr_structure_free(ctr_structure* s);

typedef struct ctr_summary {
    size_t n, n_a, n_b;
    int m, k_star, orders;
    size_t dim;            /* n (k*+m) */
    size_t cs_constraints; /* n_a m */
    size_t te_constraints; /* n k* */
    size_t ct_constraints; /* rows of the full constraint matrix */
} ctr_summary;

CTR_API ctr_status ctr_structure_summary(const ctr_structure* s, ctr_summary* out);
/* Series label i (0 <= i < n); the pointer lives as long as the structure. */
CTR_API const char* ctr_structure_label(const ctr_structure* s, size_t i);

CTR_API ctr_status ctr_forecasts_read(const ctr_structure* s, const char* path, ctr_forecasts** out);
CTR_API ctr_status ctr_forecasts_write(const ctr_structure* s, const ctr_forecasts* f, const char* path);
/* values: n x (k*+m) row-major, canonical column layout. */
CTR_API ctr_status ctr_forecasts_from_buffer(const ctr_structure* s, const double* values, size_t replications,
                                             ctr_forecasts** out);
CTR_API ctr_status ctr_forecasts_to_buffer(const ctr_structure* s, const ctr_forecasts* f, size_t position,
                                           double* values);
CTR_API size_t ctr_forecasts_count(const ctr_forecasts* f);
CTR_API void ctr_forecasts_free(ctr_forecasts* f);

CTR_API ctr_status ctr_residuals_read(const ctr_structure* s, const char* path, ctr_residuals** out);
/* stacked: periods x n (k*+m), row-major, one vec(E') per row. */
CTR_API ctr_status ctr_residuals_from_buffer(const ctr_structure* s, const double* stacked, size_t periods,
                                             ctr_residuals** out);
CTR_API void ctr_residuals_free(ctr_residuals* r);

typedef struct ctr_options {
    double delta;    /* <= 0 selects the default tolerance */
    int norm;        /* 0 = max-abs, 1 = sum-abs */
    int max_iter;
    double jitter;   /* added to covariance diagonals */
    int sntz;        /* wrap the approach in set-negative-to-zero */
    int structural;  /* use the structural form instead of the projection */
} ctr_options;

CTR_API void ctr_options_init(ctr_options* opt);
/* Defaults, then delta, norm, max_iter and jitter from a config file. */
CTR_API ctr_status ctr_options_from_config(const char* config_path, ctr_options* opt);

/* approach: e.g. "oct(wlsv)", "ite(wlsv_te,wls_cs)", "ctbu". residuals may be
 * NULL for approaches that do not need them. */
CTR_API ctr_status ctr_reconcile(const ctr_structure* s, const ctr_forecasts* base, const char* approach,
                                 const ctr_residuals* residuals, const ctr_options* opt, ctr_forecasts** out);

typedef struct ctr_discrepancy {
    double d_cs;          /* largest over the collection */
    double d_te;
    double min_value;
    double max_violation; /* largest |constraint residual| */
} ctr_discrepancy;

CTR_API ctr_status ctr_forecasts_discrepancy(const ctr_structure* s, const ctr_forecasts* f, ctr_discrepancy* out);

typedef struct ctr_synth_options {
    size_t n_b;
    const size_t* zones; /* zone sizes, summing to n_b */
    size_t n_zones;
    int days;
    uint64_t seed;
    int cloudless;
} ctr_synth_options;

/* Writes the hierarchy file and the hourly panel CSV of a synthetic PV system. */
CTR_API ctr_status ctr_synth(const ctr_synth_options* opt, const char* hierarchy_path, const char* panel_path);

typedef struct ctr_experiment_request {
    const char* config_path;          /* required */
    const char* overrides;            /* extra "key = value" lines applied last, may be NULL */
    const char* hierarchy_path;       /* with panel_path, unless synth is set */
    const char* panel_path;
    const ctr_synth_options* synth;   /* days == 0 sizes the panel to the design; the
                                         config seed replaces synth->seed */
    const char* base_path;            /* optional ingested base forecasts */
    const char* out_dir;              /* required */
} ctr_experiment_request;

CTR_API ctr_status ctr_run_experiment(const ctr_experiment_request* req);

/* Scores named forecast files (base-forecast schema) against an actuals file in
 * the same schema and writes the report CSVs into out_dir. */
CTR_API ctr_status ctr_evaluate(const ctr_structure* s, const char* actuals_path, const char* const* names,
                                const char* const* paths, size_t count, const char* reference, double alpha,
                                const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* CTREC_CTREC_H */
