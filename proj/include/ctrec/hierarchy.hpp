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

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ctrec {

using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Forecasts for every series (rows, upper series first) and every temporal
/// position (columns, canonical block order: order m first, order 1 last, each
/// block holding m/k chronologically ordered steps).
using ForecastSet = Eigen::MatrixXd;

struct CrossSectionalStructure {
    Index n_a = 0;
    Index n_b = 0;
    SparseMatrix C;    // n_a x n_b
    SparseMatrix S;    // n x n_b, [C ; I]
    SparseMatrix U_t;  // n_a x n, [I | -C]
    std::vector<std::string> labels;  // n entries, uppers first

    Index n() const { return n_a + n_b; }
};

struct TemporalStructure {
    int m = 1;
    std::vector<int> orders;  // descending, orders.front() == m, orders.back() == 1
    int k_star = 0;
    SparseMatrix K;    // k* x m
    SparseMatrix R;    // (k*+m) x m, [K ; I]
    SparseMatrix Z_t;  // k* x (k*+m), [I | -K]

    int size() const { return k_star + m; }
    int p() const { return static_cast<int>(orders.size()); }
    /// Number of columns contributed by orders[idx] (m / k).
    int block_length(int idx) const { return m / orders[idx]; }
    /// First canonical column of orders[idx].
    int block_offset(int idx) const;
    /// Index into `orders` for order k, or -1.
    int order_index(int k) const;
};

struct CrossTemporalStructure {
    CrossSectionalStructure cs;
    TemporalStructure te;
    SparseMatrix F;       // n(k*+m) x m n_b, S kron R
    SparseMatrix U_star;  // n_a m x n(k*+m)
    SparseMatrix H_t;     // (n_a m + n k*) x n(k*+m), [U* ; I_n kron Z_t]
    SparseMatrix P;       // P vec(Y) = vec(Y')

    Index dim() const { return cs.n() * te.size(); }
    Index constraint_count() const { return H_t.rows(); }
};

/// Default cap on n(k*+m) for build_cross_temporal.
inline constexpr Index kDefaultDimensionCap = 2'000'000;

CrossSectionalStructure build_cross_sectional(const Matrix& agg_matrix,
                                              std::vector<std::string> labels = {});

TemporalStructure build_temporal(int m, const std::vector<int>& orders);

CrossTemporalStructure build_cross_temporal(CrossSectionalStructure cs, TemporalStructure te,
                                            Index dimension_cap = kDefaultDimensionCap);

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b);
SparseMatrix sparse_identity(Index n);

/// Row-major stacking vec(Y'): series by series.
Vector vectorize(const ForecastSet& y);
ForecastSet devectorize(const Vector& v, Index rows, Index cols);

void check_shape(const ForecastSet& y, const CrossTemporalStructure& ct);

struct CoherenceResiduals {
    Matrix cs;  // U' Y, n_a x (k*+m)
    Matrix te;  // Z' Y', k* x n
};

CoherenceResiduals coherence_residuals(const ForecastSet& y, const CrossTemporalStructure& ct);

/// Hierarchy level of every series: uppers by strict support inclusion (0 for
/// the series not contained in any other), bottoms one below the deepest upper.
std::vector<int> series_levels(const CrossSectionalStructure& cs);

}  // namespace ctrec
