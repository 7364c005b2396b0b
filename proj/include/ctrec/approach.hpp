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
#include "ctrec/reconcile.hpp"

#include <string>
#include <string_view>

namespace ctrec {

/// A named reconciliation approach, e.g. "oct(wlsv)", "ite(wlsv_te,wls_cs)",
/// "pbu(te=struc)+sntz".
struct Approach {
    enum class Family { base, oct, oct_mixed, seq, ite, ka, ctbu, pbu_te, pbu_cs, pers_bu };

    std::string name;  // canonical spelling
    Family family = Family::base;
    CovarianceKind oct_kind = CovarianceKind::ols;
    CovarianceKind cs_kind = CovarianceKind::ols;
    CovarianceKind te_kind = CovarianceKind::ols;
    bool temporal_first = true;
    bool sntz = false;

    bool needs_residuals() const;
    /// Output is coherent in both dimensions by construction.
    bool is_coherent() const;
};

Approach parse_approach(std::string_view text);

struct ApproachContext {
    const CrossTemporalStructure* ct = nullptr;
    const ResidualPanel* residuals = nullptr;  // required by residual-based kinds
    EstimatorOptions estimator;
    double jitter = 0.0;
    IterativeOptions iterative;
    Form form = Form::projection;
};

PerOrderCovariances cs_covariances(CovarianceKind kind, const ApproachContext& ctx);
PerSeriesCovariances te_covariances(CovarianceKind kind, const ApproachContext& ctx);
CovarianceModel ct_covariance(CovarianceKind kind, const ApproachContext& ctx);

/// Applies the approach (including the optional sntz wrap). `pers_bu` cannot be
/// applied to base forecasts and is rejected.
ForecastSet apply_approach(const Approach& approach, const ForecastSet& base, const ApproachContext& ctx);

}  // namespace ctrec
