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

#include "ctrec/reconcile.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>

namespace ctrec {

namespace {

constexpr double kPivotTolerance = 1e-14;

template <typename Ldlt>
void check_factor(const Ldlt& ldlt, const char* what) {
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, std::string(what) + " could not be factored");
    const Vector d = ldlt.vectorD();
    if (d.size() == 0) return;
    const double top = d.cwiseAbs().maxCoeff();
    if (!(d.minCoeff() > kPivotTolerance * top) || !std::isfinite(top))
        throw Error(ErrorCode::SingularSystem, std::string(what) + " is numerically singular");
}

}  // namespace

struct ProjectionOperator::Factor {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt;
};

ProjectionOperator::ProjectionOperator(const SparseMatrix& constraints, const CovarianceModel& cov)
    : dim_(constraints.cols()), constraints_(constraints) {
    if (cov.dim() != dim_)
        throw Error(ErrorCode::ShapeMismatch, "covariance dimension " + std::to_string(cov.dim()) +
                                                  " does not match " + std::to_string(dim_));
    if (constraints_.rows() == 0) return;
    const SparseMatrix h = constraints_.transpose();
    if (cov.is_diagonal()) {
        omega_h_ = cov.diagonal_entries().asDiagonal() * h;
    } else {
        omega_h_ = cov.sparse() * h;
    }
    omega_h_.makeCompressed();
    const SparseMatrix system = constraints_ * omega_h_;
    auto factor = std::make_shared<Factor>();
    factor->ldlt.compute(system);
    check_factor(factor->ldlt, "H'ΩH");
    factor_ = std::move(factor);
}

Vector ProjectionOperator::apply(const Vector& y) const {
    if (y.size() != dim_) throw Error(ErrorCode::ShapeMismatch, "vector length does not match the operator");
    if (!factor_) return y;
    const Vector lambda = factor_->ldlt.solve(constraints_ * y);
    return y - omega_h_ * lambda;
}

Matrix ProjectionOperator::apply_columns(const Matrix& y) const {
    if (y.rows() != dim_) throw Error(ErrorCode::ShapeMismatch, "row count does not match the operator");
    if (!factor_) return y;
    const Matrix rhs = constraints_ * y;
    const Matrix lambda = factor_->ldlt.solve(rhs);
    return y - omega_h_ * lambda;
}

Matrix ProjectionOperator::matrix() const {
    return apply_columns(Matrix::Identity(dim_, dim_));
}

struct StructuralOperator::Factor {
    bool diagonal = true;
    Vector inv_diag;
    Eigen::SimplicialLDLT<SparseMatrix> normal;  // F'Ω^{-1}F, diagonal Ω
    Eigen::SimplicialLDLT<SparseMatrix> omega;   // Ω, general case
    Eigen::LDLT<Matrix> normal_dense;            // F'Ω^{-1}F, general case

    Vector weighted(const SparseMatrix& f, const Vector& y) const {
        const Vector w = diagonal ? Vector(inv_diag.cwiseProduct(y)) : Vector(omega.solve(y));
        return f.transpose() * w;
    }
    Vector solve_normal(const Vector& b) const { return diagonal ? Vector(normal.solve(b)) : Vector(normal_dense.solve(b)); }
};

StructuralOperator::StructuralOperator(const SparseMatrix& summing, const CovarianceModel& cov, Index dense_cap)
    : summing_(summing) {
    if (cov.dim() != summing.rows()) throw Error(ErrorCode::ShapeMismatch, "covariance dimension does not match F");
    if (summing.cols() > dense_cap)
        throw Error(ErrorCode::DimensionOverflow, "structural system of size " + std::to_string(summing.cols()) +
                                                      " exceeds cap " + std::to_string(dense_cap));
    auto factor = std::make_shared<Factor>();
    factor->diagonal = cov.is_diagonal();
    if (factor->diagonal) {
        factor->inv_diag = cov.diagonal_entries().cwiseInverse();
        const SparseMatrix normal = SparseMatrix(summing.transpose()) * factor->inv_diag.asDiagonal() * summing;
        factor->normal.compute(normal);
        check_factor(factor->normal, "F'Ω⁻¹F");
    } else {
        if (summing.rows() > dense_cap)
            throw Error(ErrorCode::DimensionOverflow, "dense structural path beyond cap");
        factor->omega.compute(cov.sparse());
        check_factor(factor->omega, "Ω");
        const Matrix x = factor->omega.solve(Matrix(summing));
        factor->normal_dense.compute(Matrix(summing.transpose()) * x);
        check_factor(factor->normal_dense, "F'Ω⁻¹F");
    }
    factor_ = std::move(factor);
}

Vector StructuralOperator::apply(const Vector& y) const {
    if (y.size() != summing_.rows()) throw Error(ErrorCode::ShapeMismatch, "vector length does not match F");
    return summing_ * factor_->solve_normal(factor_->weighted(summing_, y));
}

Matrix StructuralOperator::apply_columns(const Matrix& y) const {
    Matrix out(y.rows(), y.cols());
    for (Index c = 0; c < y.cols(); ++c) out.col(c) = apply(y.col(c));
    return out;
}

Matrix StructuralOperator::mapping() const {
    const Index d = summing_.rows();
    Matrix g(summing_.cols(), d);
    for (Index c = 0; c < d; ++c) g.col(c) = factor_->solve_normal(factor_->weighted(summing_, Vector::Unit(d, c)));
    return g;
}

Matrix reconcile_cs(const Matrix& yk, const CrossSectionalStructure& cs, const CovarianceModel& cov, Form form) {
    if (yk.rows() != cs.n()) throw Error(ErrorCode::ShapeMismatch, "cross-sectional block must have n rows");
    if (form == Form::structural) return StructuralOperator(cs.S, cov).apply_columns(yk);
    return ProjectionOperator(cs.U_t, cov).apply_columns(yk);
}

Vector reconcile_te(const Vector& y, const TemporalStructure& te, const CovarianceModel& cov, Form form) {
    if (y.size() != te.size()) throw Error(ErrorCode::ShapeMismatch, "temporal vector must have k*+m entries");
    if (form == Form::structural) return StructuralOperator(te.R, cov).apply(y);
    return ProjectionOperator(te.Z_t, cov).apply(y);
}

ForecastSet reconcile_oct(const ForecastSet& y, const CrossTemporalStructure& ct, const CovarianceModel& cov,
                          Form form) {
    check_shape(y, ct);
    const Vector v = vectorize(y);
    const Vector out = form == Form::structural ? StructuralOperator(ct.F, cov).apply(v)
                                                : ProjectionOperator(ct.H_t, cov).apply(v);
    ForecastSet result = devectorize(out, y.rows(), y.cols());
#ifndef NDEBUG
    const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
    if (max_constraint_violation(result, ct) > 1e-8 * scale)
        throw Error(ErrorCode::SingularSystem, "reconciled forecasts violate the constraints");
#endif
    return result;
}

CrossSectionalStep::CrossSectionalStep(const CrossTemporalStructure& ct, const PerOrderCovariances& covs) : ct_(&ct) {
    if (covs.size() != 1 && covs.size() != static_cast<size_t>(ct.te.p()))
        throw Error(ErrorCode::ShapeMismatch, "need one cross-sectional covariance or one per temporal order");
    ops_.reserve(covs.size());
    for (const auto& c : covs) ops_.emplace_back(ct.cs.U_t, c);
}

const ProjectionOperator& CrossSectionalStep::op(int order_idx) const {
    return ops_.size() == 1 ? ops_.front() : ops_[static_cast<size_t>(order_idx)];
}

ForecastSet CrossSectionalStep::apply(const ForecastSet& y) const {
    check_shape(y, *ct_);
    const auto& te = ct_->te;
    if (ops_.size() == 1) return ops_.front().apply_columns(y);
    ForecastSet out(y.rows(), y.cols());
    for (int o = 0; o < te.p(); ++o) {
        const int off = te.block_offset(o);
        const int len = te.block_length(o);
        out.middleCols(off, len) = op(o).apply_columns(y.middleCols(off, len));
    }
    return out;
}

Matrix CrossSectionalStep::matrix(int order_idx) const { return op(order_idx).matrix(); }

TemporalStep::TemporalStep(const CrossTemporalStructure& ct, const PerSeriesCovariances& covs) : ct_(&ct) {
    if (covs.size() != 1 && covs.size() != static_cast<size_t>(ct.cs.n()))
        throw Error(ErrorCode::ShapeMismatch, "need one temporal covariance or one per series");
    ops_.reserve(covs.size());
    for (const auto& c : covs) ops_.emplace_back(ct.te.Z_t, c);
}

ForecastSet TemporalStep::apply(const ForecastSet& y) const { return apply_rows(y, 0, y.rows()); }

ForecastSet TemporalStep::apply_rows(const ForecastSet& y, Index first_row, Index row_count) const {
    check_shape(y, *ct_);
    ForecastSet out = y;
    if (ops_.size() == 1) {
        out.middleRows(first_row, row_count) =
            ops_.front().apply_columns(y.middleRows(first_row, row_count).transpose()).transpose();
        return out;
    }
    for (Index i = first_row; i < first_row + row_count; ++i)
        out.row(i) = ops_[static_cast<size_t>(i)].apply(y.row(i).transpose()).transpose();
    return out;
}

ForecastSet ct_bottom_up(const Matrix& b1, const CrossTemporalStructure& ct) {
    if (b1.rows() != ct.cs.n_b || b1.cols() != ct.te.m)
        throw Error(ErrorCode::ShapeMismatch, "bottom high-frequency block must be n_b x m");
    // Cross-sectional first, then temporal: the order observed periods are aggregated in.
    const Matrix hf = ct.cs.S * b1;
    return (ct.te.R * hf.transpose()).transpose();
}

Matrix bottom_high_frequency(const ForecastSet& y, const CrossTemporalStructure& ct) {
    check_shape(y, ct);
    return y.bottomRightCorner(ct.cs.n_b, ct.te.m);
}

ForecastSet partly_bottom_up_te(const ForecastSet& y, const CrossTemporalStructure& ct,
                                const PerSeriesCovariances& covs) {
    const TemporalStep step(ct, covs);
    const ForecastSet rec = step.apply_rows(y, ct.cs.n_a, ct.cs.n_b);
    return ct_bottom_up(bottom_high_frequency(rec, ct), ct);
}

ForecastSet partly_bottom_up_cs(const ForecastSet& y, const CrossTemporalStructure& ct, const CovarianceModel& w) {
    check_shape(y, ct);
    const Matrix hf = y.rightCols(ct.te.m);
    const Matrix rec = ProjectionOperator(ct.cs.U_t, w).apply_columns(hf);
    return ct_bottom_up(rec.bottomRows(ct.cs.n_b), ct);
}

ForecastSet reconcile_sequential(const ForecastSet& y, const CrossTemporalStructure& ct,
                                 const PerOrderCovariances& cs_covs, const PerSeriesCovariances& te_covs,
                                 bool temporal_first) {
    const CrossSectionalStep cs(ct, cs_covs);
    const TemporalStep te(ct, te_covs);
    return temporal_first ? cs.apply(te.apply(y)) : te.apply(cs.apply(y));
}

double matrix_norm(const Matrix& x, NormKind norm) {
    if (x.size() == 0) return 0.0;
    return norm == NormKind::l1 ? x.cwiseAbs().sum() : x.cwiseAbs().maxCoeff();
}

double default_delta(const ForecastSet& y) {
    std::vector<double> a(static_cast<size_t>(y.size()));
    Eigen::Map<Matrix>(a.data(), y.rows(), y.cols()) = y.cwiseAbs();
    if (a.empty()) return 1e-12;
    auto mid = a.begin() + static_cast<std::ptrdiff_t>(a.size() / 2);
    std::nth_element(a.begin(), mid, a.end());
    double scale = *mid;
    if (scale == 0.0) scale = *std::max_element(a.begin(), a.end());
    return scale > 0.0 ? 1e-6 * scale : 1e-12;
}

IterativeResult reconcile_iterative(const ForecastSet& y, const CrossTemporalStructure& ct,
                                    const PerOrderCovariances& cs_covs, const PerSeriesCovariances& te_covs,
                                    const IterativeOptions& opt) {
    check_shape(y, ct);
    if (opt.max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be at least 1");
    const double delta = opt.delta.value_or(default_delta(y));
    if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");

    const CrossSectionalStep cs(ct, cs_covs);
    const TemporalStep te(ct, te_covs);

    IterativeResult result{y, {}};
    result.trace.norm = opt.norm;
    result.trace.delta = delta;
    for (int it = 1; it <= opt.max_iter; ++it) {
        double d = 0.0;
        if (opt.temporal_first) {
            result.forecasts = cs.apply(te.apply(result.forecasts));
            d = matrix_norm(ct.te.Z_t * result.forecasts.transpose(), opt.norm);
        } else {
            result.forecasts = te.apply(cs.apply(result.forecasts));
            d = matrix_norm(ct.cs.U_t * result.forecasts, opt.norm);
        }
        result.trace.iterations = it;
        result.trace.discrepancy_history.push_back(d);
        if (!std::isfinite(d)) break;
        if (d < delta) {
            result.trace.converged = true;
            return result;
        }
    }
    throw NotConvergedError(std::move(result));
}

ForecastSet reconcile_ka(const ForecastSet& y, const CrossTemporalStructure& ct, const PerSeriesCovariances& te_covs,
                         const PerOrderCovariances& cs_covs) {
    check_shape(y, ct);
    const TemporalStep te(ct, te_covs);
    const CrossSectionalStep cs(ct, cs_covs);
    const ForecastSet y_te = te.apply(y);
    Matrix mean_projection = Matrix::Zero(ct.cs.n(), ct.cs.n());
    for (int o = 0; o < ct.te.p(); ++o) mean_projection += cs.matrix(o);
    mean_projection /= static_cast<double>(ct.te.p());
    return mean_projection * y_te;
}

ForecastSet sntz(const ForecastSet& y, const CrossTemporalStructure& ct) {
    return ct_bottom_up(bottom_high_frequency(y, ct).cwiseMax(0.0), ct);
}

double max_constraint_violation(const ForecastSet& y, const CrossTemporalStructure& ct) {
    check_shape(y, ct);
    if (ct.H_t.rows() == 0) return 0.0;
    return (ct.H_t * vectorize(y)).cwiseAbs().maxCoeff();
}

}  // namespace ctrec
