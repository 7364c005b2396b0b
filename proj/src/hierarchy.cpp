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

#include "ctrec/hierarchy.hpp"

#include "ctrec/error.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace ctrec {

namespace {

SparseMatrix from_triplets(Index rows, Index cols, const std::vector<Eigen::Triplet<double>>& t) {
    SparseMatrix out(rows, cols);
    out.setFromTriplets(t.begin(), t.end());
    out.makeCompressed();
    return out;
}

bool is_exactly_zero(const SparseMatrix& a) {
    for (Index k = 0; k < a.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(a, k); it; ++it)
            if (it.value() != 0.0) return false;
    return true;
}

SparseMatrix vstack(const SparseMatrix& top, const SparseMatrix& bottom) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<size_t>(top.nonZeros() + bottom.nonZeros()));
    for (Index k = 0; k < top.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(top, k); it; ++it)
            t.emplace_back(it.row(), it.col(), it.value());
    for (Index k = 0; k < bottom.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(bottom, k); it; ++it)
            t.emplace_back(top.rows() + it.row(), it.col(), it.value());
    return from_triplets(top.rows() + bottom.rows(), top.cols(), t);
}

}  // namespace

SparseMatrix sparse_identity(Index n) {
    SparseMatrix id(n, n);
    id.setIdentity();
    return id;
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<size_t>(a.nonZeros() * b.nonZeros()));
    for (Index ka = 0; ka < a.outerSize(); ++ka)
        for (SparseMatrix::InnerIterator ia(a, ka); ia; ++ia)
            for (Index kb = 0; kb < b.outerSize(); ++kb)
                for (SparseMatrix::InnerIterator ib(b, kb); ib; ++ib)
                    t.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                                   ia.value() * ib.value());
    return from_triplets(a.rows() * b.rows(), a.cols() * b.cols(), t);
}

CrossSectionalStructure build_cross_sectional(const Matrix& agg_matrix,
                                              std::vector<std::string> labels) {
    const Index n_a = agg_matrix.rows();
    const Index n_b = agg_matrix.cols();
    if (n_a == 0 || n_b == 0)
        throw Error(ErrorCode::EmptyHierarchy, "aggregation matrix must have at least one upper and one bottom series");
    for (Index a = 0; a < n_a; ++a) {
        if ((agg_matrix.row(a).array() == 0.0).all())
            throw Error(ErrorCode::ZeroRow, "upper series " + std::to_string(a + 1) + " aggregates nothing");
        if (!agg_matrix.row(a).allFinite() || (agg_matrix.row(a).array() < 0.0).any())
            throw Error(ErrorCode::InvalidArgument,
                        "aggregation weights must be finite and nonnegative (row " + std::to_string(a + 1) + ")");
    }

    CrossSectionalStructure cs;
    cs.n_a = n_a;
    cs.n_b = n_b;
    cs.C = agg_matrix.sparseView();
    cs.C.makeCompressed();

    std::vector<Eigen::Triplet<double>> s, u;
    for (Index k = 0; k < cs.C.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(cs.C, k); it; ++it) {
            s.emplace_back(it.row(), it.col(), it.value());
            u.emplace_back(it.row(), n_a + it.col(), -it.value());
        }
    for (Index j = 0; j < n_b; ++j) s.emplace_back(n_a + j, j, 1.0);
    for (Index a = 0; a < n_a; ++a) u.emplace_back(a, a, 1.0);
    cs.S = from_triplets(n_a + n_b, n_b, s);
    cs.U_t = from_triplets(n_a, n_a + n_b, u);

    if (labels.empty()) {
        for (Index a = 0; a < n_a; ++a) labels.push_back("A" + std::to_string(a + 1));
        for (Index j = 0; j < n_b; ++j) labels.push_back("B" + std::to_string(j + 1));
    }
    if (static_cast<Index>(labels.size()) != n_a + n_b)
        throw Error(ErrorCode::ShapeMismatch, "label count does not match n_a + n_b");
    std::set<std::string> unique(labels.begin(), labels.end());
    if (unique.size() != labels.size()) throw Error(ErrorCode::InvalidArgument, "series labels must be unique");
    cs.labels = std::move(labels);

    SparseMatrix check = cs.U_t * cs.S;
    if (!is_exactly_zero(check)) throw Error(ErrorCode::InvalidArgument, "U'S is not zero");
    return cs;
}

int TemporalStructure::block_offset(int idx) const {
    int offset = 0;
    for (int j = 0; j < idx; ++j) offset += block_length(j);
    return offset;
}

int TemporalStructure::order_index(int k) const {
    auto it = std::find(orders.begin(), orders.end(), k);
    return it == orders.end() ? -1 : static_cast<int>(it - orders.begin());
}

TemporalStructure build_temporal(int m, const std::vector<int>& orders) {
    if (m < 1) throw Error(ErrorCode::InvalidArgument, "m must be a positive integer");
    std::set<int, std::greater<>> set{1, m};
    for (int k : orders) {
        if (k < 1 || m % k != 0)
            throw Error(ErrorCode::NonDivisor, "order " + std::to_string(k) + " does not divide m=" + std::to_string(m));
        set.insert(k);
    }

    TemporalStructure te;
    te.m = m;
    te.orders.assign(set.begin(), set.end());
    for (int k : te.orders)
        if (k > 1) te.k_star += m / k;

    std::vector<Eigen::Triplet<double>> kt;
    int row = 0;
    for (int k : te.orders) {
        if (k == 1) continue;
        for (int s = 0; s < m / k; ++s, ++row)
            for (int c = 0; c < k; ++c) kt.emplace_back(row, s * k + c, 1.0);
    }
    te.K = from_triplets(te.k_star, m, kt);

    std::vector<Eigen::Triplet<double>> rt, zt;
    for (const auto& t : kt) {
        rt.emplace_back(t.row(), t.col(), 1.0);
        zt.emplace_back(t.row(), te.k_star + t.col(), -1.0);
    }
    for (int t = 0; t < m; ++t) rt.emplace_back(te.k_star + t, t, 1.0);
    for (int r = 0; r < te.k_star; ++r) zt.emplace_back(r, r, 1.0);
    te.R = from_triplets(te.k_star + m, m, rt);
    te.Z_t = from_triplets(te.k_star, te.k_star + m, zt);

    SparseMatrix check = te.Z_t * te.R;
    if (!is_exactly_zero(check)) throw Error(ErrorCode::InvalidArgument, "Z'R is not zero");
    return te;
}

CrossTemporalStructure build_cross_temporal(CrossSectionalStructure cs, TemporalStructure te,
                                            Index dimension_cap) {
    const Index n = cs.n();
    const Index cols = te.size();
    const Index dim = n * cols;
    if (dim > dimension_cap) {
        std::ostringstream msg;
        msg << "n(k*+m) = " << dim << " exceeds the cap " << dimension_cap;
        throw Error(ErrorCode::DimensionOverflow, msg.str());
    }

    CrossTemporalStructure ct;
    ct.F = kron(cs.S, te.R);

    std::vector<Eigen::Triplet<double>> pt;
    pt.reserve(static_cast<size_t>(dim));
    for (Index i = 0; i < n; ++i)
        for (Index c = 0; c < cols; ++c) pt.emplace_back(i * cols + c, i + n * c, 1.0);
    ct.P = from_triplets(dim, dim, pt);

    // Cross-sectional constraints act on the high-frequency block only: row
    // (t, a) applies row a of U' to column k*+t of Y.
    std::vector<Eigen::Triplet<double>> ut;
    for (Index k = 0; k < cs.U_t.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(cs.U_t, k); it; ++it)
            for (Index t = 0; t < te.m; ++t)
                ut.emplace_back(t * cs.n_a + it.row(), it.col() * cols + te.k_star + t, it.value());
    ct.U_star = from_triplets(cs.n_a * te.m, dim, ut);

    ct.H_t = vstack(ct.U_star, kron(sparse_identity(n), te.Z_t));

    SparseMatrix check = ct.H_t * ct.F;
    if (!is_exactly_zero(check)) throw Error(ErrorCode::InvalidArgument, "H'F is not zero");

    ct.cs = std::move(cs);
    ct.te = std::move(te);
    return ct;
}

Vector vectorize(const ForecastSet& y) {
    Vector v(y.size());
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), y.rows(), y.cols()) = y;
    return v;
}

ForecastSet devectorize(const Vector& v, Index rows, Index cols) {
    if (v.size() != rows * cols) throw Error(ErrorCode::ShapeMismatch, "vector length does not match rows*cols");
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), rows, cols);
}

void check_shape(const ForecastSet& y, const CrossTemporalStructure& ct) {
    if (y.rows() != ct.cs.n() || y.cols() != ct.te.size()) {
        std::ostringstream msg;
        msg << "forecast set is " << y.rows() << "x" << y.cols() << ", expected " << ct.cs.n() << "x" << ct.te.size();
        throw Error(ErrorCode::ShapeMismatch, msg.str());
    }
}

CoherenceResiduals coherence_residuals(const ForecastSet& y, const CrossTemporalStructure& ct) {
    check_shape(y, ct);
    return {ct.cs.U_t * y, ct.te.Z_t * y.transpose()};
}

std::vector<int> series_levels(const CrossSectionalStructure& cs) {
    const Index n_a = cs.n_a;
    Matrix c = Matrix(cs.C);
    auto contains = [&](Index outer, Index inner) {
        // strict inclusion of supports
        bool strict = false;
        for (Index j = 0; j < cs.n_b; ++j) {
            const bool in_inner = c(inner, j) != 0.0;
            const bool in_outer = c(outer, j) != 0.0;
            if (in_inner && !in_outer) return false;
            if (in_outer && !in_inner) strict = true;
        }
        return strict;
    };

    std::vector<Index> by_size(static_cast<size_t>(n_a));
    std::iota(by_size.begin(), by_size.end(), Index{0});
    auto support = [&](Index a) { return (c.row(a).array() != 0.0).count(); };
    std::stable_sort(by_size.begin(), by_size.end(), [&](Index x, Index y) { return support(x) > support(y); });

    std::vector<int> level(static_cast<size_t>(cs.n()), 0);
    int deepest = -1;
    for (Index a : by_size) {
        int lv = 0;
        for (Index b = 0; b < n_a; ++b)
            if (b != a && contains(b, a)) lv = std::max(lv, level[static_cast<size_t>(b)] + 1);
        level[static_cast<size_t>(a)] = lv;
        deepest = std::max(deepest, lv);
    }
    for (Index j = 0; j < cs.n_b; ++j) level[static_cast<size_t>(n_a + j)] = deepest + 1;
    return level;
}

}  // namespace ctrec
