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

#pragma once

#include "ctrec/hierarchy.hpp"

#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace ctrec {

/// 100 * RMSE / mean(actuals).
double nrmse(std::span<const double> forecasts, std::span<const double> actuals);

/// 1 - nrmse_j / nrmse_ref.
double forecast_skill(double nrmse_j, double nrmse_ref);

/// ||A - B||_F
double frobenius_gap(const Matrix& a, const Matrix& b);

struct DiscrepancyReport {
    double d_cs = 0.0;  // ||U'Y||_1
    double d_te = 0.0;  // ||Z'Y'||_1
};

DiscrepancyReport gross_discrepancies(const ForecastSet& y, const CrossTemporalStructure& ct);

struct NegativityRow {
    std::string approach;
    int k = 1;
    int replications = 0;  // replications with at least one negative value
    int series_min = 0;    // over those replications, fewest / most affected series
    int series_max = 0;
    double value_min = 0.0;  // most negative value seen
    double value_max = 0.0;  // negative value closest to zero
};

/// Streaming negativity audit over (replication, approach) runs.
class NegativityAudit {
public:
    explicit NegativityAudit(const TemporalStructure& te) : te_(te) {}
    void add(const std::string& approach, const ForecastSet& y);
    std::vector<NegativityRow> rows() const;

private:
    TemporalStructure te_;
    std::vector<std::string> order_;                  // first-seen approach order
    struct Cell {
        NegativityRow row;
        bool has_value = false;
    };
    std::map<std::pair<std::string, int>, Cell> cells_;
    bool seen(const std::string& approach) const;
};

struct TaggedRun {
    int replication = 0;
    std::string approach;
    ForecastSet forecasts;
};

std::vector<NegativityRow> negativity_audit(const std::vector<TaggedRun>& runs, const TemporalStructure& te);

struct AccuracyRow {
    int level = 0;
    std::string series;
    int k = 1;
    std::string approach;
    double nrmse = 0.0;  // percent; NaN if the actuals average to zero
    double skill = 0.0;  // NaN when undefined
    Index count = 0;     // L = nrep * m / k
};

struct LevelSummary {
    int level = 0;
    int k = 1;
    std::string approach;
    double mean_nrmse = 0.0;
    double pooled_nrmse = 0.0;
    double mean_skill = 0.0;
};

struct AccuracyReport {
    std::vector<AccuracyRow> rows;
    std::vector<LevelSummary> levels;

    /// N series x J approaches nRMSE table at one order, approaches in `names` order.
    Matrix table(int k, const std::vector<std::string>& names) const;
};

/// Accumulates squared errors and actuals per (approach, series, order) across
/// replications; nRMSE is computed on the pooled L cells.
class AccuracyAccumulator {
public:
    explicit AccuracyAccumulator(const CrossTemporalStructure& ct);
    void add(const std::string& approach, const ForecastSet& forecasts, const ForecastSet& actuals);
    AccuracyReport report(const std::string& reference) const;
    const std::vector<std::string>& approaches() const { return approaches_; }

private:
    struct Cell {
        Matrix sq_err;   // n x p
        Matrix actual;   // n x p
        Eigen::MatrixXi count;
    };
    const CrossTemporalStructure* ct_;
    std::vector<std::string> approaches_;
    std::map<std::string, Cell> cells_;
};

struct MCBEntry {
    std::string approach;
    double mean_rank = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool significant_vs_best = false;
};

struct MCBReport {
    std::vector<MCBEntry> entries;  // input column order
    Index best = 0;
    double critical_value = 0.0;    // q_{alpha,J}
    double half_width = 0.0;
    Index series = 0;               // N used after dropping rows with NaN
};

/// Studentized range quantile q_{alpha,J} (infinite degrees of freedom) for
/// alpha in {0.01, 0.05, 0.10} and 2 <= J <= 30.
double nemenyi_critical_value(double alpha, int approaches);

/// Average ranks, ties averaged, row by row (ascending: rank 1 = smallest).
Vector average_ranks(std::span<const double> row);

MCBReport mcb_nemenyi(const Matrix& table, const std::vector<std::string>& names, double alpha = 0.05);

}  // namespace ctrec
