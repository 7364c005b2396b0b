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

// Shared generators and independent dense oracles for the test binaries.

#pragma once

#include "ctrec/hierarchy.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace testkit {

using ctrec::Index;
using ctrec::Matrix;
using ctrec::Vector;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
    bool coin(double p = 0.5) { return uniform() < p; }
    Matrix normal_matrix(Index rows, Index cols) {
        Matrix out(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) out(i, j) = normal();
        return out;
    }
    Vector uniform_vector(Index size, double lo, double hi) {
        Vector out(size);
        for (Index i = 0; i < size; ++i) out(i) = uniform(lo, hi);
        return out;
    }
    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

/// Aggregation matrix with a grand total row and random 0/1 sub-aggregates,
/// n_a + n_b <= max_n.
inline Matrix random_aggregation(Rng& rng, int max_n) {
    const int n_b = rng.integer(2, std::max(2, max_n - 1));
    const int n_a = rng.integer(1, std::max(1, std::min(max_n - n_b, 4)));
    Matrix c = Matrix::Zero(n_a, n_b);
    c.row(0).setOnes();
    for (int a = 1; a < n_a; ++a) {
        for (int j = 0; j < n_b; ++j) c(a, j) = rng.coin() ? 1.0 : 0.0;
        if (c.row(a).sum() == 0.0) c(a, rng.integer(0, n_b - 1)) = 1.0;
    }
    return c;
}

/// m in [2, max_m] and a random subset of its divisors (m and 1 always kept).
inline std::vector<int> random_orders(Rng& rng, int m) {
    std::vector<int> out{m};
    for (int k = m - 1; k > 1; --k)
        if (m % k == 0 && rng.coin()) out.push_back(k);
    out.push_back(1);
    return out;
}

inline ctrec::CrossTemporalStructure random_structure(Rng& rng, int max_n, int max_m) {
    const int m = rng.integer(2, max_m);
    return ctrec::build_cross_temporal(ctrec::build_cross_sectional(random_aggregation(rng, max_n)),
                                       ctrec::build_temporal(m, random_orders(rng, m)));
}

/// Random structure with n (k*+m) <= max_dim.
inline ctrec::CrossTemporalStructure random_structure_capped(Rng& rng, int max_n, int max_m, Index max_dim) {
    for (;;) {
        auto ct = random_structure(rng, max_n, max_m);
        if (ct.dim() <= max_dim) return ct;
    }
}

/// vec(Y'): series by series.
inline Vector stack_rows(const Matrix& y) {
    Vector v(y.size());
    for (Index i = 0; i < y.rows(); ++i)
        for (Index c = 0; c < y.cols(); ++c) v(i * y.cols() + c) = y(i, c);
    return v;
}

inline Matrix unstack_rows(const Vector& v, Index rows, Index cols) {
    Matrix y(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index c = 0; c < cols; ++c) y(i, c) = v(i * cols + c);
    return y;
}

/// Dense constraint matrix written from the definitions: one row per (upper,
/// hour) cross-sectional sum and one row per (series, aggregated slot)
/// temporal sum, acting on vec(Y').
inline Matrix dense_constraints(const ctrec::CrossTemporalStructure& ct) {
    const auto& te = ct.te;
    const Index cols = te.size();
    const Index n = ct.cs.n(), n_a = ct.cs.n_a, n_b = ct.cs.n_b;
    const Matrix c(ct.cs.C);
    std::vector<Vector> rows;
    for (int t = 0; t < te.m; ++t)
        for (Index a = 0; a < n_a; ++a) {
            Vector r = Vector::Zero(n * cols);
            r(a * cols + te.k_star + t) = 1.0;
            for (Index b = 0; b < n_b; ++b) r((n_a + b) * cols + te.k_star + t) -= c(a, b);
            rows.push_back(r);
        }
    for (Index i = 0; i < n; ++i) {
        int offset = 0;
        for (int k : te.orders) {
            if (k == 1) break;
            for (int s = 0; s < te.m / k; ++s) {
                Vector r = Vector::Zero(n * cols);
                r(i * cols + offset + s) = 1.0;
                for (int j = 0; j < k; ++j) r(i * cols + te.k_star + s * k + j) -= 1.0;
                rows.push_back(r);
            }
            offset += te.m / k;
        }
    }
    Matrix h(static_cast<Index>(rows.size()), n * cols);
    for (size_t r = 0; r < rows.size(); ++r) h.row(static_cast<Index>(r)) = rows[r].transpose();
    return h;
}

/// argmin (y-x)' Ω^{-1} (y-x) subject to H x = 0, by the full KKT system.
inline Vector kkt_solve(const Matrix& h, const Matrix& omega, const Vector& y) {
    const Index d = y.size(), r = h.rows();
    const Matrix omega_inv = omega.inverse();
    Matrix kkt = Matrix::Zero(d + r, d + r);
    kkt.topLeftCorner(d, d) = omega_inv;
    kkt.topRightCorner(d, r) = h.transpose();
    kkt.bottomLeftCorner(r, d) = h;
    Vector rhs = Vector::Zero(d + r);
    rhs.head(d) = omega_inv * y;
    return kkt.fullPivLu().solve(rhs).head(d);
}

/// Dense ct bottom-up from the definition: high-frequency bottoms summed
/// across series with C and across time within each order block.
inline Matrix dense_bottom_up(const ctrec::CrossTemporalStructure& ct, const Matrix& b1) {
    const auto& te = ct.te;
    const Matrix c(ct.cs.C);
    Matrix hf(ct.cs.n(), te.m);
    hf.topRows(ct.cs.n_a) = c * b1;
    hf.bottomRows(ct.cs.n_b) = b1;
    Matrix y(ct.cs.n(), te.size());
    int offset = 0;
    for (int k : te.orders) {
        for (int s = 0; s < te.m / k; ++s) y.col(offset + s) = hf.middleCols(s * k, k).rowwise().sum();
        offset += te.m / k;
    }
    return y;
}

inline double rel_gap(const Matrix& a, const Matrix& b) {
    const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// System total, five zones and 318 plants: the 324-series PV shape.
inline Matrix pv324_aggregation() {
    const std::vector<Index> zones{27, 73, 101, 86, 31};
    Matrix c = Matrix::Zero(6, 318);
    c.row(0).setOnes();
    Index col = 0;
    for (size_t z = 0; z < zones.size(); ++z)
        for (Index j = 0; j < zones[z]; ++j) c(static_cast<Index>(z) + 1, col++) = 1.0;
    return c;
}

inline Vector random_positive(Rng& rng, Index size, double lo = 0.2, double hi = 5.0) {
    return rng.uniform_vector(size, lo, hi);
}

}  // namespace testkit
