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

#include <optional>
#include <string>

namespace ctrec {

/// In-sample one-step-ahead forecast errors, one stacked vector per complete
/// low-frequency period. Row j of `stacked()` is vec(E_j') for period j: series
/// by series, canonical temporal order within each series.
class ResidualPanel {
public:
    ResidualPanel(Index n, const TemporalStructure& te, Matrix stacked);

    Index n() const { return n_; }
    Index periods() const { return stacked_.rows(); }
    Index width() const { return stacked_.cols(); }  // n (k*+m)
    const TemporalStructure& temporal() const { return te_; }
    const Matrix& stacked() const { return stacked_; }

    /// Residual of (series, canonical column) in low-frequency period j.
    double at(Index series, Index column, Index period) const {
        return stacked_(period, series * te_.size() + column);
    }

    /// Cross-series samples at orders[order_idx]: (N_lf * m/k) x n, one row per
    /// (period, step).
    Matrix order_samples(int order_idx) const;
    /// Temporal samples of one series: N_lf x (k*+m).
    Matrix series_samples(Index series) const;
    /// All samples of one series at one order, flattened.
    Vector series_order_samples(Index series, int order_idx) const;

private:
    Index n_;
    TemporalStructure te_;
    Matrix stacked_;
};

enum class CovarianceKind { ols, struc, wls, wlsv, shr, sam, bdshr, bdsam, kron };

std::string to_string(CovarianceKind kind);

/// A realized covariance approximation. Stored either as a diagonal or as a
/// symmetric sparse matrix (dense estimates are kept in sparse form too).
class CovarianceModel {
public:
    static CovarianceModel diagonal(CovarianceKind kind, Vector diag);
    static CovarianceModel general(CovarianceKind kind, SparseMatrix matrix,
                                   std::optional<double> lambda = std::nullopt);

    CovarianceKind kind() const { return kind_; }
    bool is_diagonal() const { return diagonal_; }
    Index dim() const { return diagonal_ ? diag_.size() : full_.rows(); }
    std::optional<double> lambda() const { return lambda_; }

    /// Diagonal entries (for diagonal and general models alike).
    Vector diagonal_entries() const;
    SparseMatrix sparse() const;
    Matrix dense() const;

    /// Returns a copy with eps added to every diagonal entry.
    CovarianceModel with_jitter(double eps) const;

private:
    CovarianceModel() = default;
    void validate() const;

    CovarianceKind kind_ = CovarianceKind::ols;
    bool diagonal_ = true;
    Vector diag_;
    SparseMatrix full_;
    std::optional<double> lambda_;
};

struct EstimatorOptions {
    bool center = false;         // subtract sample means before forming moments
    bool ml_denominator = true;  // divide by N (true) or N-1
    std::optional<double> lambda_override;
    double singular_tolerance = 1e-10;  // relative to the trace
    Index dense_cap = 4000;             // largest dimension estimated densely
    double jitter = 0.0;                // added to estimated diagonals before any check
};

CovarianceModel cov_identity(Index dim);

CovarianceModel cov_structural(const CrossSectionalStructure& cs);
CovarianceModel cov_structural(const TemporalStructure& te);
CovarianceModel cov_structural(const CrossTemporalStructure& ct);

/// wls (cross-sectional, per-series variance at one order), wlsv (temporal,
/// per-order variance of one series) and wlsv (cross-temporal).
CovarianceModel cov_series_variance_cs(const ResidualPanel& panel, int order_idx, const EstimatorOptions& opt = {});
CovarianceModel cov_series_variance_te(const ResidualPanel& panel, Index series, const EstimatorOptions& opt = {});
CovarianceModel cov_series_variance_ct(const ResidualPanel& panel, const EstimatorOptions& opt = {});

CovarianceModel cov_sample_cs(const ResidualPanel& panel, int order_idx, const EstimatorOptions& opt = {});
CovarianceModel cov_sample_te(const ResidualPanel& panel, Index series, const EstimatorOptions& opt = {});
CovarianceModel cov_sample_ct(const ResidualPanel& panel, const EstimatorOptions& opt = {});

CovarianceModel cov_shrunk_cs(const ResidualPanel& panel, int order_idx, const EstimatorOptions& opt = {});
CovarianceModel cov_shrunk_te(const ResidualPanel& panel, Index series, const EstimatorOptions& opt = {});
CovarianceModel cov_shrunk_ct(const ResidualPanel& panel, const EstimatorOptions& opt = {});

/// bdsam / bdshr: per-order cross-series covariance blocks repeated m/k times in
/// time-major order, conjugated by P into series-major order.
CovarianceModel cov_block_diagonal(const ResidualPanel& panel, const CrossTemporalStructure& ct, bool shrunk,
                                   const EstimatorOptions& opt = {});

CovarianceModel cov_kron(const CovarianceModel& w, const CovarianceModel& omega);

/// Second-moment matrix of the rows of `samples` (N x d).
Matrix sample_moment(const Matrix& samples, const EstimatorOptions& opt);

/// Shrinkage intensity towards the diagonal for the given samples.
double shrinkage_intensity(const Matrix& samples, const EstimatorOptions& opt);

}  // namespace ctrec
