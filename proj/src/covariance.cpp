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

#include "ctrec/covariance.hpp"

#include "ctrec/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace ctrec {

ResidualPanel::ResidualPanel(Index n, const TemporalStructure& te, Matrix stacked)
    : n_(n), te_(te), stacked_(std::move(stacked)) {
    if (stacked_.cols() != n_ * te_.size())
        throw Error(ErrorCode::ShapeMismatch, "residual panel width must be n(k*+m)");
    if (!stacked_.allFinite()) throw Error(ErrorCode::InvalidArgument, "residual panel contains non-finite values");
}

Matrix ResidualPanel::order_samples(int order_idx) const {
    const int len = te_.block_length(order_idx);
    const int offset = te_.block_offset(order_idx);
    const Index cols = te_.size();
    Matrix out(periods() * len, n_);
    for (Index j = 0; j < periods(); ++j)
        for (int s = 0; s < len; ++s)
            for (Index i = 0; i < n_; ++i) out(j * len + s, i) = stacked_(j, i * cols + offset + s);
    return out;
}

Matrix ResidualPanel::series_samples(Index series) const {
    return stacked_.middleCols(series * te_.size(), te_.size());
}

Vector ResidualPanel::series_order_samples(Index series, int order_idx) const {
    const int len = te_.block_length(order_idx);
    const int offset = te_.block_offset(order_idx);
    Vector out(periods() * len);
    for (Index j = 0; j < periods(); ++j)
        for (int s = 0; s < len; ++s) out(j * len + s) = stacked_(j, series * te_.size() + offset + s);
    return out;
}

std::string to_string(CovarianceKind kind) {
    switch (kind) {
        case CovarianceKind::ols: return "ols";
        case CovarianceKind::struc: return "struc";
        case CovarianceKind::wls: return "wls";
        case CovarianceKind::wlsv: return "wlsv";
        case CovarianceKind::shr: return "shr";
        case CovarianceKind::sam: return "sam";
        case CovarianceKind::bdshr: return "bdshr";
        case CovarianceKind::bdsam: return "bdsam";
        case CovarianceKind::kron: return "kron";
    }
    return "?";
}

CovarianceModel CovarianceModel::diagonal(CovarianceKind kind, Vector diag) {
    CovarianceModel m;
    m.kind_ = kind;
    m.diagonal_ = true;
    m.diag_ = std::move(diag);
    m.validate();
    return m;
}

CovarianceModel CovarianceModel::general(CovarianceKind kind, SparseMatrix matrix, std::optional<double> lambda) {
    CovarianceModel m;
    m.kind_ = kind;
    m.diagonal_ = false;
    m.full_ = std::move(matrix);
    m.full_.makeCompressed();
    m.lambda_ = lambda;
    m.validate();
    return m;
}

void CovarianceModel::validate() const {
    if (dim() == 0) throw Error(ErrorCode::InvalidArgument, "empty covariance");
    if (!diagonal_ && full_.rows() != full_.cols()) throw Error(ErrorCode::ShapeMismatch, "covariance must be square");
    const Vector d = diagonal_entries();
    for (Index i = 0; i < d.size(); ++i)
        if (!(d(i) > 0.0) || !std::isfinite(d(i)))
            throw Error(ErrorCode::DegenerateVariance,
                        "diagonal entry " + std::to_string(i) + " is not strictly positive (" + std::to_string(d(i)) + ")");
    if (!diagonal_) {
        const SparseMatrix asym = full_ - SparseMatrix(full_.transpose());
        double scale = 0.0, worst = 0.0;
        for (Index k = 0; k < full_.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(full_, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
        for (Index k = 0; k < asym.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(asym, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
        if (worst > 1e-12 * scale) throw Error(ErrorCode::InvalidArgument, "covariance matrix is not symmetric");
    }
}

Vector CovarianceModel::diagonal_entries() const {
    return diagonal_ ? diag_ : Vector(full_.diagonal());
}

SparseMatrix CovarianceModel::sparse() const {
    if (!diagonal_) return full_;
    SparseMatrix out(diag_.size(), diag_.size());
    out.reserve(Eigen::VectorXi::Constant(diag_.size(), 1));
    for (Index i = 0; i < diag_.size(); ++i) out.insert(i, i) = diag_(i);
    out.makeCompressed();
    return out;
}

Matrix CovarianceModel::dense() const {
    return diagonal_ ? Matrix(diag_.asDiagonal()) : Matrix(full_);
}

CovarianceModel CovarianceModel::with_jitter(double eps) const {
    if (eps == 0.0) return *this;
    if (eps < 0.0) throw Error(ErrorCode::InvalidArgument, "jitter must be nonnegative");
    CovarianceModel out = *this;
    if (diagonal_) {
        out.diag_.array() += eps;
    } else {
        out.full_ += eps * sparse_identity(dim());
    }
    out.validate();
    return out;
}

namespace {

constexpr Index kMinPeriods = 2;

void require_periods(const ResidualPanel& panel) {
    if (panel.periods() < kMinPeriods)
        throw Error(ErrorCode::InsufficientResiduals,
                    "need at least 2 low-frequency periods of residuals, got " + std::to_string(panel.periods()));
}

double second_moment(const Vector& x, const EstimatorOptions& opt) {
    const double mean = opt.center ? x.mean() : 0.0;
    const double denom = static_cast<double>(x.size()) - (opt.ml_denominator ? 0.0 : 1.0);
    return (x.array() - mean).square().sum() / denom;
}

SparseMatrix to_sparse(const Matrix& dense) {
    SparseMatrix s = dense.sparseView();
    s.makeCompressed();
    return s;
}

void check_dense_size(Index dim, const EstimatorOptions& opt) {
    if (dim > opt.dense_cap)
        throw Error(ErrorCode::DimensionOverflow,
                    "dense covariance of dimension " + std::to_string(dim) + " exceeds cap " + std::to_string(opt.dense_cap));
}

void check_nonsingular(const Matrix& cov, Index samples, const EstimatorOptions& opt) {
    if (samples <= cov.rows())
        throw Error(ErrorCode::SingularCovariance, "sample count " + std::to_string(samples) +
                                                       " does not exceed the dimension " + std::to_string(cov.rows()));
    const double trace = cov.trace();
    if (!(trace > 0.0)) throw Error(ErrorCode::SingularCovariance, "zero sample covariance");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < opt.singular_tolerance * trace)
        throw Error(ErrorCode::SingularCovariance, "sample covariance is rank deficient");
}

Matrix checked_sample(const Matrix& samples, const EstimatorOptions& opt) {
    check_dense_size(samples.cols(), opt);
    Matrix cov = sample_moment(samples, opt);
    if (opt.jitter > 0.0) {
        cov.diagonal().array() += opt.jitter;
        return cov;
    }
    check_nonsingular(cov, samples.rows(), opt);
    return cov;
}

Matrix shrunk_matrix(const Matrix& samples, const EstimatorOptions& opt, double& lambda) {
    check_dense_size(samples.cols(), opt);
    const Matrix cov = sample_moment(samples, opt);
    for (Index i = 0; i < cov.rows() && opt.jitter == 0.0; ++i)
        if (!(cov(i, i) > 0.0))
            throw Error(ErrorCode::DegenerateVariance, "zero residual variance in component " + std::to_string(i));
    lambda = opt.lambda_override ? *opt.lambda_override : shrinkage_intensity(samples, opt);
    if (lambda < 0.0 || lambda > 1.0) throw Error(ErrorCode::InvalidArgument, "shrinkage intensity must lie in [0,1]");
    Matrix out = (1.0 - lambda) * cov;
    out.diagonal() = cov.diagonal().array() + opt.jitter;
    return out;
}

}  // namespace

Matrix sample_moment(const Matrix& samples, const EstimatorOptions& opt) {
    const Index count = samples.rows();
    const double denom = static_cast<double>(count) - (opt.ml_denominator ? 0.0 : 1.0);
    if (!(denom > 0.0)) throw Error(ErrorCode::InsufficientResiduals, "not enough samples");
    if (opt.center) {
        const Matrix centered = samples.rowwise() - samples.colwise().mean();
        return (centered.transpose() * centered) / denom;
    }
    return (samples.transpose() * samples) / denom;
}

double shrinkage_intensity(const Matrix& samples, const EstimatorOptions& opt) {
    const Index count = samples.rows();
    const Index d = samples.cols();
    if (count < 2) throw Error(ErrorCode::InsufficientResiduals, "shrinkage needs at least 2 samples");
    const double nn = static_cast<double>(count);

    Matrix x = opt.center ? Matrix(samples.rowwise() - samples.colwise().mean()) : samples;
    // Scale by the (N-denominator) standard deviations so that x'x/N is the
    // correlation matrix.
    const Vector sd = ((x.array().square().colwise().sum()) / nn).sqrt().transpose();
    for (Index j = 0; j < d; ++j) {
        if (!(sd(j) > 0.0)) {
            // Constant-zero components carry no correlation; tolerated only under jitter.
            if (opt.jitter > 0.0) continue;
            throw Error(ErrorCode::DegenerateVariance, "zero residual variance in component " + std::to_string(j));
        }
        x.col(j) /= sd(j);
    }
    const Matrix corr = (x.transpose() * x) / nn;
    const Matrix x2 = x.array().square().matrix();
    Matrix var_corr = (x2.transpose() * x2 - corr.array().square().matrix() * nn) / (nn * (nn - 1.0));

    double num = 0.0, den = 0.0;
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j)
            if (i != j) {
                num += var_corr(i, j);
                den += corr(i, j) * corr(i, j);
            }
    if (den == 0.0) return 1.0;
    return std::clamp(num / den, 0.0, 1.0);
}

CovarianceModel cov_identity(Index dim) {
    if (dim < 1) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
    return CovarianceModel::diagonal(CovarianceKind::ols, Vector::Ones(dim));
}

CovarianceModel cov_structural(const CrossSectionalStructure& cs) {
    return CovarianceModel::diagonal(CovarianceKind::struc, cs.S * Vector::Ones(cs.n_b));
}

CovarianceModel cov_structural(const TemporalStructure& te) {
    return CovarianceModel::diagonal(CovarianceKind::struc, te.R * Vector::Ones(te.m));
}

CovarianceModel cov_structural(const CrossTemporalStructure& ct) {
    return CovarianceModel::diagonal(CovarianceKind::struc, ct.F * Vector::Ones(ct.F.cols()));
}

CovarianceModel cov_series_variance_cs(const ResidualPanel& panel, int order_idx, const EstimatorOptions& opt) {
    require_periods(panel);
    const Matrix samples = panel.order_samples(order_idx);
    Vector d(panel.n());
    for (Index i = 0; i < panel.n(); ++i) d(i) = second_moment(samples.col(i), opt) + opt.jitter;
    return CovarianceModel::diagonal(CovarianceKind::wls, d);
}

CovarianceModel cov_series_variance_te(const ResidualPanel& panel, Index series, const EstimatorOptions& opt) {
    require_periods(panel);
    const auto& te = panel.temporal();
    Vector d(te.size());
    for (int o = 0; o < te.p(); ++o)
        d.segment(te.block_offset(o), te.block_length(o))
            .setConstant(second_moment(panel.series_order_samples(series, o), opt) + opt.jitter);
    return CovarianceModel::diagonal(CovarianceKind::wlsv, d);
}

CovarianceModel cov_series_variance_ct(const ResidualPanel& panel, const EstimatorOptions& opt) {
    require_periods(panel);
    const Index cols = panel.temporal().size();
    Vector d(panel.width());
    for (Index i = 0; i < panel.n(); ++i)
        d.segment(i * cols, cols) = cov_series_variance_te(panel, i, opt).diagonal_entries();
    return CovarianceModel::diagonal(CovarianceKind::wlsv, d);
}

CovarianceModel cov_sample_cs(const ResidualPanel& panel, int order_idx, const EstimatorOptions& opt) {
    require_periods(panel);
    return CovarianceModel::general(CovarianceKind::sam, to_sparse(checked_sample(panel.order_samples(order_idx), opt)));
}

CovarianceModel cov_sample_te(const ResidualPanel& panel, Index series, const EstimatorOptions& opt) {
    require_periods(panel);
    return CovarianceModel::general(CovarianceKind::sam, to_sparse(checked_sample(panel.series_samples(series), opt)));
}

CovarianceModel cov_sample_ct(const ResidualPanel& panel, const EstimatorOptions& opt) {
    require_periods(panel);
    return CovarianceModel::general(CovarianceKind::sam, to_sparse(checked_sample(panel.stacked(), opt)));
}

CovarianceModel cov_shrunk_cs(const ResidualPanel& panel, int order_idx, const EstimatorOptions& opt) {
    require_periods(panel);
    double lambda = 0.0;
    Matrix m = shrunk_matrix(panel.order_samples(order_idx), opt, lambda);
    return CovarianceModel::general(CovarianceKind::shr, to_sparse(m), lambda);
}

CovarianceModel cov_shrunk_te(const ResidualPanel& panel, Index series, const EstimatorOptions& opt) {
    require_periods(panel);
    double lambda = 0.0;
    Matrix m = shrunk_matrix(panel.series_samples(series), opt, lambda);
    return CovarianceModel::general(CovarianceKind::shr, to_sparse(m), lambda);
}

CovarianceModel cov_shrunk_ct(const ResidualPanel& panel, const EstimatorOptions& opt) {
    require_periods(panel);
    double lambda = 0.0;
    Matrix m = shrunk_matrix(panel.stacked(), opt, lambda);
    return CovarianceModel::general(CovarianceKind::shr, to_sparse(m), lambda);
}

CovarianceModel cov_block_diagonal(const ResidualPanel& panel, const CrossTemporalStructure& ct, bool shrunk,
                                   const EstimatorOptions& opt) {
    require_periods(panel);
    const auto& te = ct.te;
    const Index n = panel.n();
    const Index cols = te.size();
    if (n != ct.cs.n() || te.size() != panel.temporal().size())
        throw Error(ErrorCode::ShapeMismatch, "residual panel does not match the structure");

    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<size_t>(n * n * cols));
    for (int o = 0; o < te.p(); ++o) {
        const Matrix samples = panel.order_samples(o);
        Matrix block;
        if (shrunk) {
            double lambda = 0.0;
            block = shrunk_matrix(samples, opt, lambda);
        } else {
            block = checked_sample(samples, opt);
        }
        const int offset = te.block_offset(o);
        for (int s = 0; s < te.block_length(o); ++s) {
            const Index c = offset + s;
            for (Index i = 0; i < n; ++i)
                for (Index j = 0; j < n; ++j)
                    if (block(i, j) != 0.0) t.emplace_back(i * cols + c, j * cols + c, block(i, j));
        }
    }
    SparseMatrix m(n * cols, n * cols);
    m.setFromTriplets(t.begin(), t.end());
    return CovarianceModel::general(shrunk ? CovarianceKind::bdshr : CovarianceKind::bdsam, std::move(m));
}

CovarianceModel cov_kron(const CovarianceModel& w, const CovarianceModel& omega) {
    if (w.is_diagonal() && omega.is_diagonal()) {
        const Vector a = w.diagonal_entries();
        const Vector b = omega.diagonal_entries();
        Vector d(a.size() * b.size());
        for (Index i = 0; i < a.size(); ++i) d.segment(i * b.size(), b.size()) = a(i) * b;
        return CovarianceModel::diagonal(CovarianceKind::kron, d);
    }
    return CovarianceModel::general(CovarianceKind::kron, kron(w.sparse(), omega.sparse()));
}

}  // namespace ctrec
