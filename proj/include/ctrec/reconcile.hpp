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
#include "ctrec/error.hpp"
#include "ctrec/hierarchy.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace ctrec {

enum class Form { projection, structural };

/// y -> [I - Ω H (H'ΩH)^{-1} H'] y for a constraint matrix H' (r x d). The
/// r x r system H'ΩH is factored once (sparse LDLT) and reused.
class ProjectionOperator {
public:
    ProjectionOperator(const SparseMatrix& constraints, const CovarianceModel& cov);

    Index dim() const { return dim_; }
    Vector apply(const Vector& y) const;
    /// Reconciles every column of y independently.
    Matrix apply_columns(const Matrix& y) const;
    /// Dense M; intended for small dimensions.
    Matrix matrix() const;

private:
    struct Factor;
    Index dim_ = 0;
    SparseMatrix constraints_;
    SparseMatrix omega_h_;  // Ω H, d x r
    std::shared_ptr<const Factor> factor_;
};

/// y -> F (F'Ω^{-1}F)^{-1} F'Ω^{-1} y for a summing matrix F (d x b).
class StructuralOperator {
public:
    StructuralOperator(const SparseMatrix& summing, const CovarianceModel& cov, Index dense_cap = 5000);

    Vector apply(const Vector& y) const;
    Matrix apply_columns(const Matrix& y) const;
    /// Dense G = (F'Ω^{-1}F)^{-1} F'Ω^{-1}.
    Matrix mapping() const;

private:
    struct Factor;
    SparseMatrix summing_;
    std::shared_ptr<const Factor> factor_;
};

Matrix reconcile_cs(const Matrix& yk, const CrossSectionalStructure& cs, const CovarianceModel& cov,
                    Form form = Form::projection);
Vector reconcile_te(const Vector& y, const TemporalStructure& te, const CovarianceModel& cov,
                    Form form = Form::projection);
ForecastSet reconcile_oct(const ForecastSet& y, const CrossTemporalStructure& ct, const CovarianceModel& cov,
                          Form form = Form::projection);

/// Cross-sectional covariances for the time-by-time step: one per temporal
/// order (indexed like TemporalStructure::orders) or a single shared one.
using PerOrderCovariances = std::vector<CovarianceModel>;
/// Temporal covariances: one per series (n entries) or a single shared one.
using PerSeriesCovariances = std::vector<CovarianceModel>;

/// Time-by-time cross-sectional reconciliation at every order.
class CrossSectionalStep {
public:
    CrossSectionalStep(const CrossTemporalStructure& ct, const PerOrderCovariances& covs);
    ForecastSet apply(const ForecastSet& y) const;
    /// Dense n x n projection used at orders[order_idx].
    Matrix matrix(int order_idx) const;

private:
    const CrossTemporalStructure* ct_;
    std::vector<ProjectionOperator> ops_;
    const ProjectionOperator& op(int order_idx) const;
};

/// Series-by-series temporal reconciliation.
class TemporalStep {
public:
    TemporalStep(const CrossTemporalStructure& ct, const PerSeriesCovariances& covs);
    ForecastSet apply(const ForecastSet& y) const;
    /// Reconciles only the listed rows; other rows are copied.
    ForecastSet apply_rows(const ForecastSet& y, Index first_row, Index row_count) const;

private:
    const CrossTemporalStructure* ct_;
    std::vector<ProjectionOperator> ops_;
};

/// vec(Y') = F vec(B1'): b1 is n_b x m high-frequency bottom forecasts.
ForecastSet ct_bottom_up(const Matrix& b1, const CrossTemporalStructure& ct);

/// The n_b x m high-frequency bottom block of a forecast set.
Matrix bottom_high_frequency(const ForecastSet& y, const CrossTemporalStructure& ct);

/// ct(rec_te, bu_cs): temporally reconcile the bottom series, then bottom-up
/// from their high-frequency block.
ForecastSet partly_bottom_up_te(const ForecastSet& y, const CrossTemporalStructure& ct,
                                const PerSeriesCovariances& covs);
/// ct(rec_cs, bu_te): cross-sectionally reconcile the k=1 block, then bottom-up.
ForecastSet partly_bottom_up_cs(const ForecastSet& y, const CrossTemporalStructure& ct, const CovarianceModel& w);

/// Two-step sequential reconciliation (one cs pass and one te pass).
ForecastSet reconcile_sequential(const ForecastSet& y, const CrossTemporalStructure& ct,
                                 const PerOrderCovariances& cs_covs, const PerSeriesCovariances& te_covs,
                                 bool temporal_first = true);

enum class NormKind { l1, linf };

struct IterativeOptions {
    std::optional<double> delta;  // absolute tolerance; default 1e-6 * median |y|
    NormKind norm = NormKind::linf;
    int max_iter = 100;
    bool temporal_first = true;  // tcs (true) or cst (false)
};

struct IterationTrace {
    int iterations = 0;
    std::vector<double> discrepancy_history;  // d_te for tcs, d_cs for cst
    NormKind norm = NormKind::linf;
    double delta = 0.0;
    bool converged = false;
};

struct IterativeResult {
    ForecastSet forecasts;
    IterationTrace trace;
};

class NotConvergedError : public Error {
public:
    NotConvergedError(IterativeResult partial)
        : Error(ErrorCode::NotConverged,
                "no convergence after " + std::to_string(partial.trace.iterations) + " iterations"),
          partial_(std::move(partial)) {}
    const IterativeResult& partial() const { return partial_; }

private:
    IterativeResult partial_;
};

double default_delta(const ForecastSet& y);
double matrix_norm(const Matrix& x, NormKind norm);

IterativeResult reconcile_iterative(const ForecastSet& y, const CrossTemporalStructure& ct,
                                    const PerOrderCovariances& cs_covs, const PerSeriesCovariances& te_covs,
                                    const IterativeOptions& opt = {});

/// Temporal reconciliation, then left-multiplication by the average of the
/// per-order cross-sectional projections.
ForecastSet reconcile_ka(const ForecastSet& y, const CrossTemporalStructure& ct, const PerSeriesCovariances& te_covs,
                         const PerOrderCovariances& cs_covs);

/// Set-negative-to-zero on the bottom high-frequency block, then bottom-up.
ForecastSet sntz(const ForecastSet& y, const CrossTemporalStructure& ct);

/// max |H' vec(Y')|.
double max_constraint_violation(const ForecastSet& y, const CrossTemporalStructure& ct);

}  // namespace ctrec
