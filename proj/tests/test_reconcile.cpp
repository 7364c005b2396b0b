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
#include "ctrec/reconcile.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace ctrec;
using testkit::Rng;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

Vector vec3(double a, double b, double c) {
    Vector v(3);
    v << a, b, c;
    return v;
}

CrossTemporalStructure tiny_ct() {
    return build_cross_temporal(build_cross_sectional(Matrix::Ones(1, 2)), build_temporal(2, {2, 1}));
}

CovarianceModel diag(const Vector& d) { return CovarianceModel::diagonal(CovarianceKind::wls, d); }

Matrix kkt_forecasts(const CrossTemporalStructure& ct, const Matrix& omega, const Matrix& y) {
    const Vector x = testkit::kkt_solve(testkit::dense_constraints(ct), omega, testkit::stack_rows(y));
    return testkit::unstack_rows(x, y.rows(), y.cols());
}

}  // namespace

TEST_CASE("cross-sectional reconciliation of (10,4,5)") {
    const auto cs = build_cross_sectional(Matrix::Ones(1, 2));
    const Matrix r = reconcile_cs(vec3(10, 4, 5), cs, cov_identity(3));
    CHECK(r(0, 0) == doctest::Approx(29.0 / 3.0).epsilon(1e-14));
    CHECK(r(1, 0) == doctest::Approx(13.0 / 3.0).epsilon(1e-14));
    CHECK(r(2, 0) == doctest::Approx(16.0 / 3.0).epsilon(1e-14));
    CHECK((reconcile_cs(vec3(9, 4, 5), cs, cov_identity(3)) - vec3(9, 4, 5)).norm() < 1e-13);

    const auto w = cov_structural(cs);
    const Matrix rw = reconcile_cs(vec3(10, 4, 5), cs, w);
    const Matrix u(cs.U_t);
    const Vector oracle = testkit::kkt_solve(u, w.dense(), vec3(10, 4, 5));
    CHECK((rw.col(0) - oracle).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs((u * rw)(0, 0)) < 1e-12);
    const Matrix rs = reconcile_cs(vec3(10, 4, 5), cs, w, Form::structural);
    CHECK((rs - rw).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("temporal reconciliation mirrors the three-node problem") {
    const auto te = build_temporal(2, {2, 1});
    const Vector r = reconcile_te(vec3(10, 4, 5), te, cov_identity(3));
    CHECK((r - vec3(29.0 / 3.0, 13.0 / 3.0, 16.0 / 3.0)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((reconcile_te(vec3(9, 4, 5), te, cov_identity(3)) - vec3(9, 4, 5)).norm() < 1e-13);
    const auto om = cov_structural(te);
    const Vector oracle = testkit::kkt_solve(Matrix(te.Z_t), om.dense(), vec3(10, 4, 5));
    CHECK((reconcile_te(vec3(10, 4, 5), te, om) - oracle).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("optimal cross-temporal reconciliation on the 9-dimensional case") {
    const auto ct = tiny_ct();
    Matrix y(3, 3);
    y << 21, 10, 9, 8, 3, 4, 12, 7, 6;
    const Matrix r = reconcile_oct(y, ct, cov_identity(9));
    CHECK(testkit::rel_gap(r, kkt_forecasts(ct, Matrix::Identity(9, 9), y)) < 1e-12);
    CHECK(max_constraint_violation(r, ct) < 1e-12);
    CHECK(testkit::rel_gap(reconcile_oct(r, ct, cov_identity(9)), r) < 1e-12);
    CHECK(testkit::rel_gap(reconcile_oct(y, ct, cov_identity(9), Form::structural), r) < 1e-12);
}

TEST_CASE("bottom-up examples") {
    const auto ct = tiny_ct();
    Matrix b1(2, 2);
    b1 << 1, 2, 3, 4;
    const Matrix y = ct_bottom_up(b1, ct);
    CHECK(y(1, 0) == 3.0);
    CHECK(y(2, 0) == 7.0);
    CHECK(y(0, 1) == 4.0);
    CHECK(y(0, 2) == 6.0);
    CHECK(y(0, 0) == 10.0);
    CHECK(ct_bottom_up(Matrix::Zero(2, 2), ct).isZero(0.0));
    CHECK(code_of([&] { ct_bottom_up(Matrix::Zero(3, 2), ct); }) == ErrorCode::ShapeMismatch);
    CHECK(bottom_high_frequency(y, ct) == b1);
}

TEST_CASE("partly bottom-up") {
    const auto ct = tiny_ct();
    Matrix b1(2, 2);
    b1 << 1, 2, 3, 4;
    Matrix y = ct_bottom_up(b1, ct);
    y.row(0) *= 3.0;  // incoherent top, temporally coherent bottoms
    const Matrix pte = partly_bottom_up_te(y, ct, {cov_identity(3)});
    CHECK((pte - ct_bottom_up(b1, ct)).cwiseAbs().maxCoeff() < 1e-13);

    Matrix z = Matrix::Zero(3, 3);
    z.col(1) = vec3(10, 4, 5);
    z.col(2) = vec3(10, 4, 5);
    const Matrix pcs = partly_bottom_up_cs(z, ct, cov_identity(3));
    CHECK(pcs(1, 1) == doctest::Approx(13.0 / 3.0).epsilon(1e-14));
    CHECK(pcs(2, 2) == doctest::Approx(16.0 / 3.0).epsilon(1e-14));
    CHECK(pcs(0, 0) == doctest::Approx(58.0 / 3.0).epsilon(1e-14));
    CHECK(max_constraint_violation(pcs, ct) < 1e-12);
}

TEST_CASE("sntz clamps the bottom block and sums") {
    const auto ct = tiny_ct();
    Matrix b1(2, 2);
    b1 << -1, 2, 3, 4;
    const Matrix y = sntz(ct_bottom_up(b1, ct), ct);
    CHECK(y(1, 1) == 0.0);
    CHECK(y(0, 0) == 9.0);
    CHECK(y.minCoeff() >= 0.0);
}

TEST_CASE("iterative procedure") {
    const auto ct = tiny_ct();
    Rng rng(3);
    const Matrix y = rng.normal_matrix(3, 3) * 10.0;
    const auto res = reconcile_iterative(y, ct, {cov_identity(3)}, {cov_identity(3)});
    CHECK(res.trace.iterations == 1);
    CHECK(res.trace.converged);
    CHECK(res.trace.discrepancy_history.back() < res.trace.delta);
    CHECK(testkit::rel_gap(res.forecasts, reconcile_oct(y, ct, cov_identity(9))) < 1e-12);

    const Matrix coherent = ct_bottom_up(rng.normal_matrix(2, 2), ct);
    const auto same = reconcile_iterative(coherent, ct, {cov_identity(3)}, {cov_identity(3)});
    CHECK(testkit::rel_gap(same.forecasts, coherent) < 1e-13);

    IterativeOptions cst;
    cst.temporal_first = false;
    const auto r2 = reconcile_iterative(y, ct, {cov_identity(3)}, {cov_identity(3)}, cst);
    CHECK(r2.trace.iterations == 1);
    CHECK(testkit::rel_gap(r2.forecasts, res.forecasts) < 1e-12);

    IterativeOptions bad;
    bad.max_iter = 0;
    CHECK(code_of([&] { reconcile_iterative(y, ct, {cov_identity(3)}, {cov_identity(3)}, bad); }) ==
          ErrorCode::InvalidArgument);
}

TEST_CASE("non-convergence carries the last iterate") {
    Rng rng(12);
    const auto ct = build_cross_temporal(build_cross_sectional(Matrix::Ones(1, 3)), build_temporal(4, {4, 2, 1}));
    const Matrix y = rng.normal_matrix(ct.cs.n(), ct.te.size()) * 5.0 + Matrix::Constant(ct.cs.n(), ct.te.size(), 20.0);
    PerOrderCovariances w;
    for (int o = 0; o < ct.te.p(); ++o) w.push_back(diag(testkit::random_positive(rng, ct.cs.n())));
    PerSeriesCovariances om;
    for (Index i = 0; i < ct.cs.n(); ++i) om.push_back(diag(testkit::random_positive(rng, ct.te.size())));
    IterativeOptions opt;
    opt.max_iter = 1;
    opt.delta = 1e-300;
    try {
        reconcile_iterative(y, ct, w, om, opt);
        FAIL("expected NotConverged");
    } catch (const NotConvergedError& e) {
        CHECK(e.code() == ErrorCode::NotConverged);
        CHECK(e.partial().trace.iterations == 1);
        CHECK(e.partial().forecasts.rows() == ct.cs.n());
        CHECK(!e.partial().trace.converged);
    }
    opt.max_iter = 200;
    opt.delta = 1e-9;
    const auto done = reconcile_iterative(y, ct, w, om, opt);
    CHECK(done.trace.converged);
    CHECK(done.trace.iterations > 1);
    CHECK(matrix_norm(Matrix(ct.cs.U_t) * done.forecasts, NormKind::linf) < 1e-9);
}

TEST_CASE("KA heuristic") {
    Rng rng(4);
    const auto ct = build_cross_temporal(build_cross_sectional(Matrix::Ones(1, 3)), build_temporal(4, {4, 2, 1}));
    const Matrix y = rng.normal_matrix(ct.cs.n(), ct.te.size());
    const auto w = diag(testkit::random_positive(rng, ct.cs.n()));
    const auto om = diag(testkit::random_positive(rng, ct.te.size()));
    const Matrix ka = reconcile_ka(y, ct, {om}, {w});
    CHECK(testkit::rel_gap(ka, reconcile_sequential(y, ct, {w}, {om}, true)) < 1e-12);

    const Matrix coherent = ct_bottom_up(rng.normal_matrix(3, 4), ct);
    CHECK(testkit::rel_gap(reconcile_ka(coherent, ct, {om}, {w}), coherent) < 1e-12);

    PerOrderCovariances ws;
    for (int o = 0; o < ct.te.p(); ++o) ws.push_back(diag(testkit::random_positive(rng, ct.cs.n())));
    PerSeriesCovariances oms;
    for (Index i = 0; i < ct.cs.n(); ++i) oms.push_back(diag(testkit::random_positive(rng, ct.te.size())));
    const Matrix kv = reconcile_ka(y, ct, oms, ws);
    CHECK((Matrix(ct.cs.U_t) * kv).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("singular systems are reported") {
    const auto ct = tiny_ct();
    Matrix bad(9, 9);
    bad.setOnes();  // rank one
    const auto cov = CovarianceModel::general(CovarianceKind::sam, bad.sparseView());
    CHECK(code_of([&] { reconcile_oct(Matrix::Ones(3, 3), ct, cov); }) == ErrorCode::SingularSystem);
}

TEST_CASE("property: projection agrees with the dense KKT oracle and is idempotent") {
    Rng rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        const auto ct = testkit::random_structure_capped(rng, 5, 6, 40);
        CAPTURE(trial);
        const Matrix y = rng.normal_matrix(ct.cs.n(), ct.te.size()) * 10.0;
        // diagonal and dense SPD covariances
        const Vector d = testkit::random_positive(rng, ct.dim());
        const Matrix a = rng.normal_matrix(ct.dim(), ct.dim());
        const Matrix spd = a * a.transpose() / static_cast<double>(ct.dim()) + Matrix::Identity(ct.dim(), ct.dim());
        const Matrix sym = (spd + spd.transpose()) / 2.0;
        for (const auto& cov : {diag(d), CovarianceModel::general(CovarianceKind::sam, sym.sparseView())}) {
            const Matrix oracle = kkt_forecasts(ct, cov.dense(), y);
            const Matrix p = reconcile_oct(y, ct, cov);
            const Matrix s = reconcile_oct(y, ct, cov, Form::structural);
            CHECK(testkit::rel_gap(p, oracle) < 1e-8);
            CHECK(testkit::rel_gap(s, oracle) < 1e-8);
            CHECK(testkit::rel_gap(reconcile_oct(p, ct, cov), p) < 1e-8);
            CHECK(max_constraint_violation(p, ct) <= 1e-8 * std::max(1.0, y.cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("property: projection matrix identities") {
    Rng rng(77);
    for (int trial = 0; trial < 25; ++trial) {
        const auto ct = testkit::random_structure_capped(rng, 5, 6, 40);
        const auto cov = diag(testkit::random_positive(rng, ct.dim()));
        const Matrix m = ProjectionOperator(ct.H_t, cov).matrix();
        const double scale = m.cwiseAbs().maxCoeff();
        CHECK((m * m - m).cwiseAbs().maxCoeff() <= 1e-8 * scale);
        CHECK((Matrix(ct.H_t) * m).cwiseAbs().maxCoeff() <= 1e-8 * scale);
        const Matrix fg = Matrix(ct.F) * StructuralOperator(ct.F, cov).mapping();
        CHECK((fg - m).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    }
}

TEST_CASE("property: scale invariance and Kronecker covariance equivalences") {
    Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        const auto ct = testkit::random_structure_capped(rng, 6, 6, 60);
        const Matrix y = rng.normal_matrix(ct.cs.n(), ct.te.size());
        const double c = rng.uniform(0.1, 20.0);
        const Matrix r = reconcile_oct(y, ct, cov_identity(ct.dim()));
        CHECK(testkit::rel_gap(reconcile_oct(c * y, ct, cov_identity(ct.dim())), c * r) < 1e-12);

        const auto w_ols = cov_identity(ct.cs.n());
        const auto w_struc = cov_structural(ct.cs);
        const auto o_ols = cov_identity(ct.te.size());
        const auto o_struc = cov_structural(ct.te);
        for (const auto& [w, om] : {std::pair{w_ols, o_ols}, std::pair{w_struc, o_struc}, std::pair{w_ols, o_struc},
                                    std::pair{w_struc, o_ols}}) {
            const Matrix oct = reconcile_oct(y, ct, cov_kron(w, om));
            CHECK(testkit::rel_gap(reconcile_sequential(y, ct, {w}, {om}, true), oct) < 1e-10);
            CHECK(testkit::rel_gap(reconcile_sequential(y, ct, {w}, {om}, false), oct) < 1e-10);
        }
        CHECK(testkit::rel_gap(reconcile_oct(y, ct, cov_structural(ct)),
                               reconcile_oct(y, ct, cov_kron(w_struc, o_struc))) < 1e-12);
    }
}

TEST_CASE("property: bottom-up orders of application and sntz on arbitrary input") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto ct = testkit::random_structure(rng, 8, 12);
        const Matrix b1 = rng.normal_matrix(ct.cs.n_b, ct.te.m);
        const Matrix y = ct_bottom_up(b1, ct);
        CHECK(testkit::rel_gap(y, testkit::dense_bottom_up(ct, b1)) < 1e-12);
        const Matrix s = Matrix(ct.cs.S), rt = Matrix(ct.te.R).transpose();
        CHECK(testkit::rel_gap((s * b1) * rt, y) < 1e-12);
        CHECK(testkit::rel_gap(s * (b1 * rt), y) < 1e-12);

        const Matrix z = sntz(rng.normal_matrix(ct.cs.n(), ct.te.size()), ct);
        CHECK(z.minCoeff() >= 0.0);
        CHECK(max_constraint_violation(z, ct) <= 1e-12 * std::max(1.0, z.cwiseAbs().maxCoeff()));
        const Matrix nonneg = ct_bottom_up(b1.cwiseAbs(), ct);
        CHECK(sntz(nonneg, ct) == nonneg);
    }
}
