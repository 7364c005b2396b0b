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

#include "ctrec/covariance.hpp"
#include "ctrec/experiment.hpp"
#include "ctrec/hierarchy.hpp"

#include <map>
#include <string>
#include <vector>

namespace ctrec {

/// Parsed hierarchy file:
///
///     # comment
///     2 4                 <- n_a n_b
///     Total: 1 1 1 1      <- one aggregation row per upper series
///     North: 1 1 0 0
///     bottom: a b c d     <- optional bottom labels
struct HierarchySpec {
    Matrix C;
    std::vector<std::string> labels;  // empty when no labels were given
};

HierarchySpec parse_hierarchy(const std::string& text);
HierarchySpec read_hierarchy_file(const std::string& path);
std::string format_hierarchy(const CrossSectionalStructure& cs);

/// "24,12,8" or "24 12 8".
std::vector<int> parse_orders(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Splits one CSV record; double-quoted fields may contain commas.
std::vector<std::string> split_csv_record(const std::string& line);
std::string csv_field(const std::string& value);

/// Forecast sets keyed by replication index.
using ForecastCollection = std::map<int, ForecastSet>;

/// `replication,series,k,step,value`, step in 1..m/k.
ForecastCollection parse_forecast_csv(const std::string& text, const CrossTemporalStructure& ct);
ForecastCollection read_forecast_csv(const std::string& path, const CrossTemporalStructure& ct);
std::string format_forecast_csv(const ForecastCollection& sets, const CrossTemporalStructure& ct);

/// `series,k,period,step,value`; periods are stacked in ascending order.
ResidualPanel parse_residual_csv(const std::string& text, const CrossTemporalStructure& ct);
ResidualPanel read_residual_csv(const std::string& path, const CrossTemporalStructure& ct);
std::string format_residual_csv(const ResidualPanel& panel, const CrossTemporalStructure& ct);

/// `series,timestamp,value`. Upper series are derived from the bottom ones when
/// none of them is present. Integer timestamps sort numerically, others as text.
SeriesPanel parse_panel_csv(const std::string& text, const CrossSectionalStructure& cs);
SeriesPanel read_panel_csv(const std::string& path, const CrossSectionalStructure& cs);
std::string format_panel_csv(const SeriesPanel& panel);

std::string format_accuracy_csv(const AccuracyReport& report);
std::string format_levels_csv(const AccuracyReport& report);
std::string format_discrepancy_csv(const std::vector<DiscrepancyRecord>& records);
std::string format_negativity_csv(const std::vector<NegativityRow>& rows);
std::string format_mcb_csv(const MCBReport& report);

/// Writes accuracy.csv, levels.csv, discrepancy.csv, negativity.csv and one
/// mcb_k<k>.csv per order into `dir` (created if needed).
void write_experiment_reports(const ExperimentResult& result, const std::string& dir);

}  // namespace ctrec
