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

/* Exercises the shared library through its C header only. */

#include "ctrec/ctrec.h"

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/stat.h>
#include <unistd.h>

static int failures = 0;

#define EXPECT(cond)                                                          \
    do {                                                                      \
        if (!(cond)) {                                                        \
            fprintf(stderr, "%s:%d: expected %s (last error: %s)\n", __FILE__, \
                    __LINE__, #cond, ctr_last_error());                       \
            ++failures;                                                       \
        }                                                                     \
    } while (0)

static double lcg(unsigned long long* state) {
    *state = *state * 6364136223846793005ULL + 1442695040888963407ULL;
    return (double)(*state >> 11) / 9007199254740992.0;
}

static int file_exists(const char* path) {
    struct stat st;
    return stat(path, &st) == 0;
}

static void test_structures(void) {
    const double agg[] = {1, 1, 1, 1, 1, 0};
    const int orders[] = {4, 2, 1};
    ctr_structure* s = NULL;
    EXPECT(ctr_structure_from_matrix(agg, 2, 3, NULL, 4, orders, 3, &s) == CTR_OK);
    ctr_summary sum;
    EXPECT(ctr_structure_summary(s, &sum) == CTR_OK);
    EXPECT(sum.n == 5 && sum.n_a == 2 && sum.n_b == 3);
    EXPECT(sum.k_star == 3 && sum.orders == 3);
    EXPECT(sum.dim == 35);
    EXPECT(sum.cs_constraints == 8);
    EXPECT(sum.te_constraints == 15);
    EXPECT(ctr_structure_label(s, 0) != NULL && strlen(ctr_structure_label(s, 0)) > 0);
    EXPECT(ctr_structure_label(s, 99) == NULL);
    ctr_structure_free(s);

    const double zero_row[] = {0, 0, 0, 1, 1, 0};
    s = NULL;
    EXPECT(ctr_structure_from_matrix(zero_row, 2, 3, NULL, 4, orders, 3, &s) == CTR_ZERO_ROW);
    EXPECT(s == NULL);
    EXPECT(strlen(ctr_last_error()) > 0);
    const int bad_orders[] = {4, 3, 1};
    EXPECT(ctr_structure_from_matrix(agg, 2, 3, NULL, 4, bad_orders, 3, &s) == CTR_NON_DIVISOR);
    EXPECT(ctr_structure_from_matrix(NULL, 2, 3, NULL, 4, orders, 3, &s) == CTR_INVALID_ARGUMENT);
    EXPECT(ctr_structure_from_file("/nonexistent/h.txt", 4, "4,2,1", &s) == CTR_IO_ERROR);

    EXPECT(ctr_status_is_numerical(CTR_SINGULAR_SYSTEM));
    EXPECT(ctr_status_is_numerical(CTR_NOT_CONVERGED));
    EXPECT(!ctr_status_is_numerical(CTR_PARSE_ERROR));
    EXPECT(strlen(ctr_status_name(CTR_OK)) > 0);
    EXPECT(strstr(ctr_status_name(CTR_MISSING_CELL), "Missing") != NULL);
    EXPECT(strlen(ctr_version()) > 0);
}

static void test_reconcile(void) {
    const double agg[] = {1, 1, 1, 1, 1, 0};
    const int orders[] = {4, 2, 1};
    const char* labels[] = {"T", "N", "a", "b", "c"};
    ctr_structure* s = NULL;
    EXPECT(ctr_structure_from_matrix(agg, 2, 3, labels, 4, orders, 3, &s) == CTR_OK);
    EXPECT(strcmp(ctr_structure_label(s, 1), "N") == 0);

    enum { N = 5, COLS = 7, REPS = 3, PERIODS = 60 };
    double values[REPS * N * COLS];
    unsigned long long seed = 7;
    for (size_t i = 0; i < sizeof values / sizeof *values; ++i) values[i] = 4.0 * lcg(&seed) - 1.0;
    ctr_forecasts* base = NULL;
    EXPECT(ctr_forecasts_from_buffer(s, values, REPS, &base) == CTR_OK);
    EXPECT(ctr_forecasts_count(base) == REPS);

    ctr_discrepancy d;
    EXPECT(ctr_forecasts_discrepancy(s, base, &d) == CTR_OK);
    EXPECT(d.max_violation > 0.1);

    ctr_options opt;
    ctr_options_init(&opt);
    ctr_forecasts* rec = NULL;
    EXPECT(ctr_reconcile(s, base, "oct(ols)", NULL, &opt, &rec) == CTR_OK);
    EXPECT(ctr_forecasts_discrepancy(s, rec, &d) == CTR_OK);
    EXPECT(d.max_violation < 1e-10);
    EXPECT(d.min_value < 0.0);

    /* structural form agrees with the projection */
    ctr_forecasts* rec2 = NULL;
    opt.structural = 1;
    EXPECT(ctr_reconcile(s, base, "oct(ols)", NULL, &opt, &rec2) == CTR_OK);
    double a[N * COLS], b[N * COLS];
    EXPECT(ctr_forecasts_to_buffer(s, rec, 1, a) == CTR_OK);
    EXPECT(ctr_forecasts_to_buffer(s, rec2, 1, b) == CTR_OK);
    double gap = 0.0;
    for (int i = 0; i < N * COLS; ++i) gap = fmax(gap, fabs(a[i] - b[i]));
    EXPECT(gap < 1e-9);
    EXPECT(ctr_forecasts_to_buffer(s, rec, REPS, a) == CTR_INVALID_ARGUMENT);
    ctr_forecasts_free(rec2);
    ctr_forecasts_free(rec);

    ctr_options_init(&opt);
    opt.sntz = 1;
    EXPECT(ctr_reconcile(s, base, "oct(struc)", NULL, &opt, &rec) == CTR_OK);
    EXPECT(ctr_forecasts_discrepancy(s, rec, &d) == CTR_OK);
    EXPECT(d.min_value >= 0.0);
    EXPECT(d.max_violation < 1e-10);
    ctr_forecasts_free(rec);

    ctr_options_init(&opt);
    rec = NULL;
    EXPECT(ctr_reconcile(s, base, "oct(wlsv)", NULL, &opt, &rec) == CTR_INSUFFICIENT_RESIDUALS);
    EXPECT(rec == NULL);
    EXPECT(ctr_reconcile(s, base, "oct(nope)", NULL, &opt, &rec) == CTR_PARSE_ERROR);

    double stacked[PERIODS * N * COLS];
    for (size_t i = 0; i < sizeof stacked / sizeof *stacked; ++i) stacked[i] = lcg(&seed) - 0.5;
    ctr_residuals* res = NULL;
    EXPECT(ctr_residuals_from_buffer(s, stacked, PERIODS, &res) == CTR_OK);
    const char* approaches[] = {"oct(wlsv)", "oct(shr)", "oct(bdshr)", "ite(wlsv,wls)", "ka(wlsv,wls)+sntz",
                                "seq(wls,wlsv)", "pbu(te=wlsv)", "ctbu"};
    for (size_t i = 0; i < sizeof approaches / sizeof *approaches; ++i) {
        rec = NULL;
        EXPECT(ctr_reconcile(s, base, approaches[i], res, &opt, &rec) == CTR_OK);
        EXPECT(ctr_forecasts_count(rec) == REPS);
        ctr_forecasts_free(rec);
    }
    ctr_residuals_free(res);

    /* file round trip */
    char dir[] = "/tmp/ctrec_capi_XXXXXX";
    EXPECT(mkdtemp(dir) != NULL);
    char path[256];
    snprintf(path, sizeof path, "%s/base.csv", dir);
    EXPECT(ctr_forecasts_write(s, base, path) == CTR_OK);
    ctr_forecasts* back = NULL;
    EXPECT(ctr_forecasts_read(s, path, &back) == CTR_OK);
    EXPECT(ctr_forecasts_to_buffer(s, back, 2, a) == CTR_OK);
    EXPECT(memcmp(a, values + 2 * N * COLS, sizeof a) == 0);
    ctr_forecasts_free(back);
    remove(path);
    rmdir(dir);

    ctr_forecasts_free(base);
    ctr_structure_free(s);
}

static void test_experiment(void) {
    char dir[] = "/tmp/ctrec_capi_XXXXXX";
    EXPECT(mkdtemp(dir) != NULL);
    char config[256], out_dir[256], hier[256], panel[256], report[300];
    snprintf(config, sizeof config, "%s/exp.cfg", dir);
    snprintf(out_dir, sizeof out_dir, "%s/out", dir);
    snprintf(hier, sizeof hier, "%s/h.txt", dir);
    snprintf(panel, sizeof panel, "%s/panel.csv", dir);

    FILE* f = fopen(config, "w");
    EXPECT(f != NULL);
    fputs("window_length = 168\nreplications = 3\nbase = snaive\napproaches = pers_bu, oct(wlsv), ctbu\n", f);
    fclose(f);

    const size_t zones[] = {2, 3};
    ctr_synth_options so = {5, zones, 2, 0, 1, 0};
    ctr_experiment_request req;
    memset(&req, 0, sizeof req);
    req.config_path = config;
    req.synth = &so;
    req.out_dir = out_dir;
    EXPECT(ctr_run_experiment(&req) == CTR_OK);
    snprintf(report, sizeof report, "%s/accuracy.csv", out_dir);
    EXPECT(file_exists(report));
    snprintf(report, sizeof report, "%s/mcb_k24.csv", out_dir);
    EXPECT(file_exists(report));

    so.days = 12;
    EXPECT(ctr_synth(&so, hier, panel) == CTR_OK);
    req.synth = NULL;
    req.hierarchy_path = hier;
    req.panel_path = panel;
    EXPECT(ctr_run_experiment(&req) == CTR_OK);

    req.overrides = "replications = 30\n";
    EXPECT(ctr_run_experiment(&req) == CTR_INSUFFICIENT_HISTORY);
    req.overrides = "colour = blue\n";
    EXPECT(ctr_run_experiment(&req) == CTR_PARSE_ERROR);
    req.overrides = NULL;
    req.panel_path = "/nonexistent/panel.csv";
    EXPECT(ctr_run_experiment(&req) == CTR_IO_ERROR);

    const size_t bad_zones[] = {2, 2};
    so.zones = bad_zones;
    EXPECT(ctr_synth(&so, hier, panel) == CTR_BAD_PARTITION);

    char cmd[400];
    snprintf(cmd, sizeof cmd, "rm -rf '%s'", dir);
    EXPECT(system(cmd) == 0);
}

int main(void) {
    test_structures();
    test_reconcile();
    test_experiment();
    if (failures) {
        fprintf(stderr, "%d C API check(s) failed\n", failures);
        return 1;
    }
    printf("C API checks passed\n");
    return 0;
}
