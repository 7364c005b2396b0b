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

#include "ctrec/approach.hpp"
#include "ctrec/covariance.hpp"
#include "ctrec/evaluate.hpp"
#include "ctrec/hierarchy.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ctrec {

/// High-frequency observations of every series (rows aligned with the
/// cross-sectional labels, upper series first).
struct SeriesPanel {
    Matrix observations;  // n x T
    std::vector<std::string> labels;
    std::vector<std::string> timestamps;  // T entries, may be empty

    Index length() const { return observations.cols(); }
};

/// Fills the upper rows as C times the bottom rows.
SeriesPanel derive_panel(const CrossSectionalStructure& cs, const Matrix& bottom,
                         std::vector<std::string> timestamps = {});

enum class BaseKind { snaive, mean, ses };

BaseKind parse_base_kind(const std::string& text);
std::string to_string(BaseKind kind);

struct ExperimentConfig {
    int m = 24;
    std::vector<int> orders{24, 12, 8, 6, 4, 3, 2, 1};
    int window_length = 336;
    int horizon = 48;
    int eval_first = 25;  // 1-based, inclusive
    int eval_last = 48;
    int replications = 350;
    std::vector<std::string> approaches{"pers_bu"};
    std::string reference = "pers_bu";
    std::optional<double> delta;
    NormKind norm = NormKind::linf;
    int max_iter = 100;
    double alpha = 0.05;
    double jitter = 0.0;
    std::uint64_t seed = 1;
    BaseKind base = BaseKind::ses;
    std::optional<int> lag;  // persistence lag, defaults to the horizon
    int jobs = 1;

    int persistence_lag() const { return lag.value_or(horizon); }
    /// Throws InvalidArgument when the fields are inconsistent.
    void validate() const;
};

/// Flat `key = value` text; `#` starts a comment. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig read_config_file(const std::string& path);

/// Split "a, f(b,c), d" on top-level commas or semicolons.
std::vector<std::string> split_top_level(const std::string& text);

/// Forecasts for steps origin+1 .. origin+horizon of every series: n x horizon,
/// value at step h equal to the observation at origin + h - lag (1-based h,
/// origin = number of observations already available).
Matrix persistence_base(const SeriesPanel& panel, Index origin, int horizon, int lag = 48);

/// Cross-temporal bottom-up of the bottom series' persistence forecasts over the
/// evaluation period.
ForecastSet pers_bu_benchmark(const SeriesPanel& panel, Index origin, const CrossTemporalStructure& ct,
                              const ExperimentConfig& cfg);

/// Base forecasts for the evaluation period, computed independently at every
/// (series, order) from the window [origin - window_length, origin).
ForecastSet naive_base(const SeriesPanel& panel, Index origin, const CrossTemporalStructure& ct, BaseKind kind,
                       const ExperimentConfig& cfg);

/// One-step-ahead in-sample errors of the base method over the window, one row
/// per complete low-frequency period after the first.
ResidualPanel residual_panel_from_window(const SeriesPanel& panel, Index origin, const CrossTemporalStructure& ct,
                                         BaseKind kind, int window_length);

/// Observed values of the period starting at `first` in canonical layout.
ForecastSet observed_period(const SeriesPanel& panel, Index first, const CrossTemporalStructure& ct);

struct DiscrepancyRecord {
    int replication = 0;
    std::string approach;
    DiscrepancyReport values;
};

struct ExperimentResult {
    AccuracyReport accuracy;
    std::vector<DiscrepancyRecord> discrepancies;
    std::vector<NegativityRow> negativity;
    std::map<int, MCBReport> mcb;  // keyed by temporal order
    std::vector<std::string> notes;
};

/// Scores named forecast sets against actuals, replication by replication.
class Scoreboard {
public:
    explicit Scoreboard(const CrossTemporalStructure& ct);
    void add(int replication, const std::string& approach, const ForecastSet& forecasts, const ForecastSet& actuals);
    ExperimentResult finish(const std::string& reference, double alpha) const;

private:
    const CrossTemporalStructure* ct_;
    AccuracyAccumulator accuracy_;
    NegativityAudit negativity_;
    std::vector<DiscrepancyRecord> discrepancies_;
};

/// Rolling-origin experiment: windows advance by m steps per replication.
/// `ingested` optionally supplies base forecasts per replication (0-based).
ExperimentResult run_experiment(const ExperimentConfig& cfg, const SeriesPanel& panel,
                                const CrossTemporalStructure& ct,
                                const std::map<int, ForecastSet>* ingested = nullptr);

struct SyntheticPV {
    Matrix aggregation;  // 1 + zones rows: system total, then one row per zone
    std::vector<std::string> labels;
    SeriesPanel panel;  // hourly
};

/// Desk-scale PV-like hierarchy: diurnal clear-sky profile times plant capacity
/// times smooth cloud attenuation, exactly zero at night.
SyntheticPV synth_pv_panel(Index n_b, const std::vector<Index>& zone_sizes, int days, std::uint64_t seed,
                           bool cloudless = false);

}  // namespace ctrec
