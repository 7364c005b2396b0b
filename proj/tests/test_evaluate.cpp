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

#include "ctrec/error.hpp"
#include "ctrec/evaluate.hpp"
#include "ctrec/reconcile.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace ctrec;
using testkit::Rng;

namespace {

double nrmse_of(const std::vector<double>& f, const std::vector<double>& a) { return nrmse(f, a); }

CrossTemporalStructure small_ct() {
    return build_cross_temporal(build_cross_sectional((Matrix(1, 2) << 1, 1).finished()), build_temporal(2, {2, 1}));
}

}  // namespace

TEST_CASE("nrmse worked values") {
    CHECK(nrmse_of({2, 0, 2, 0}, {1, 1, 1, 1}) == doctest::Approx(100.0));
    CHECK(nrmse_of({1, 2, 3}, {1, 2, 3}) == 0.0);
    try {
        nrmse_of({1, -1}, {1, -1});
        FAIL("zero-mean actuals accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ZeroMeanActuals);
    }
    CHECK_THROWS_AS(nrmse_of({1, 2}, {1}), Error);
    CHECK_THROWS_AS(nrmse_of({}, {}), Error);
}

TEST_CASE("nrmse is scale invariant and nonnegative") {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        const int len = rng.integer(1, 30);
        std::vector<double> f(len), a(len);
        for (int i = 0; i < len; ++i) {
            f[i] = rng.normal() * 4.0;
            a[i] = rng.uniform(0.1, 10.0);
        }
        const double base = nrmse(f, a);
        CHECK(base >= 0.0);
        const double c = rng.uniform(0.01, 100.0);
        std::vector<double> fs(f), as(a);
        for (int i = 0; i < len; ++i) fs[i] *= c, as[i] *= c;
        CHECK(nrmse(fs, as) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("forecast skill values and antisymmetry") {
    CHECK(forecast_skill(26.71, 34.62) == doctest::Approx(0.2285).epsilon(0.0005 / 0.2285));
    CHECK(forecast_skill(5.0, 5.0) == 0.0);
    CHECK(forecast_skill(10.0, 5.0) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(forecast_skill(1.0, 0.0), Error);
    Rng rng(8);
    for (int t = 0; t < 100; ++t) {
        const double a = rng.uniform(0.1, 50.0), b = rng.uniform(0.1, 50.0);
        const double x = a / b;
        CHECK(forecast_skill(a, b) == doctest::Approx(1.0 - x));
        CHECK(forecast_skill(b, a) == doctest::Approx(1.0 - 1.0 / x));
        CHECK(forecast_skill(a, b) <= 1.0);
    }
}

TEST_CASE("frobenius gap") {
    CHECK(frobenius_gap(Matrix::Identity(2, 2), Matrix::Zero(2, 2)) == doctest::Approx(std::sqrt(2.0)));
    CHECK(frobenius_gap(Matrix::Ones(3, 2), Matrix::Ones(3, 2)) == 0.0);
    CHECK_THROWS_AS(frobenius_gap(Matrix::Ones(3, 2), Matrix::Ones(2, 3)), Error);
}

TEST_CASE("gross discrepancies detect a single perturbation") {
    const auto ct = small_ct();
    const Matrix b = (Matrix(2, 2) << 1, 2, 3, 4).finished();
    Matrix y = ct_bottom_up(b, ct);
    auto d = gross_discrepancies(y, ct);
    CHECK(d.d_cs == 0.0);
    CHECK(d.d_te == 0.0);
    // Perturb the total at k = 1, step 1: one cross-sectional and one temporal violation.
    y(0, 1) += 1.0;
    d = gross_discrepancies(y, ct);
    CHECK(d.d_cs == doctest::Approx(1.0));
    CHECK(d.d_te == doctest::Approx(1.0));
}

TEST_CASE("negativity audit counts") {
    const auto te = build_temporal(4, {4, 2, 1});
    Matrix ok = Matrix::Ones(3, te.size());
    SUBCASE("all nonnegative") {
        const auto rows = negativity_audit({{1, "a", ok}, {2, "a", ok}}, te);
        REQUIRE(rows.size() == 3);
        for (const auto& r : rows) {
            CHECK(r.replications == 0);
            CHECK(r.series_max == 0);
        }
    }
    SUBCASE("single negative entry") {
        Matrix bad = ok;
        bad(2, te.block_offset(2) + 1) = -0.5;
        const auto rows = negativity_audit({{1, "a", ok}, {2, "a", bad}}, te);
        for (const auto& r : rows) {
            CAPTURE(r.k);
            if (r.k == 1) {
                CHECK(r.replications == 1);
                CHECK(r.series_min == 1);
                CHECK(r.series_max == 1);
                CHECK(r.value_min == -0.5);
                CHECK(r.value_max == -0.5);
            } else {
                CHECK(r.replications == 0);
            }
        }
    }
    SUBCASE("series counts range over replications") {
        Matrix one = ok, two = ok;
        one(0, 0) = -1.0;
        two(0, 0) = -3.0;
        two(1, 0) = -0.25;
        NegativityAudit audit(te);
        audit.add("x", one);
        audit.add("x", two);
        audit.add("y", ok);
        const auto rows = audit.rows();
        REQUIRE(rows.size() == 6);
        CHECK(rows[0].approach == "x");
        CHECK(rows[0].k == 4);
        CHECK(rows[0].replications == 2);
        CHECK(rows[0].series_min == 1);
        CHECK(rows[0].series_max == 2);
        CHECK(rows[0].value_min == -3.0);
        CHECK(rows[0].value_max == -0.25);
        CHECK(rows[3].approach == "y");
        CHECK(rows[3].replications == 0);
    }
}

TEST_CASE("accuracy accumulator pools replications") {
    const auto ct = small_ct();
    const Matrix act1 = ct_bottom_up((Matrix(2, 2) << 1, 1, 1, 1).finished(), ct);
    const Matrix act2 = ct_bottom_up((Matrix(2, 2) << 1, 1, 1, 1).finished(), ct);
    AccuracyAccumulator acc(ct);
    acc.add("ref", act1 * 2.0, act1);
    acc.add("ref", act2 * 0.0, act2);
    acc.add("good", act1, act1);
    acc.add("good", act2, act2);
    const auto rep = acc.report("ref");
    // n = 3 series, p = 2 orders, 2 approaches.
    REQUIRE(rep.rows.size() == 12);
    for (const auto& r : rep.rows) {
        CAPTURE(r.series);
        CAPTURE(r.k);
        CHECK(r.count == 2 * 2 / r.k);
        if (r.approach == "ref") {
            CHECK(r.nrmse == doctest::Approx(100.0));
            CHECK(r.skill == 0.0);
        } else {
            CHECK(r.nrmse == 0.0);
            CHECK(r.skill == 1.0);
        }
    }
    const Matrix t = rep.table(1, {"good", "ref"});
    CHECK(t.rows() == 3);
    CHECK(t.col(0).isZero());
    CHECK(t.col(1).isApproxToConstant(100.0));
    for (const auto& l : rep.levels)
        if (l.approach == "ref") {
            CHECK(l.mean_nrmse == doctest::Approx(100.0));
            CHECK(l.pooled_nrmse == doctest::Approx(100.0));
        }
}

TEST_CASE("average ranks with ties") {
    const std::vector<double> row{3.0, 1.0, 3.0, 2.0};
    const Vector r = average_ranks(row);
    CHECK(r(0) == 3.5);
    CHECK(r(1) == 1.0);
    CHECK(r(2) == 3.5);
    CHECK(r(3) == 2.0);
}

TEST_CASE("Nemenyi critical values") {
    CHECK(nemenyi_critical_value(0.05, 2) == doctest::Approx(2.772).epsilon(1e-3));
    CHECK(nemenyi_critical_value(0.05, 3) == doctest::Approx(3.314493).epsilon(1e-5));
    CHECK(nemenyi_critical_value(0.01, 3) == doctest::Approx(4.120).epsilon(1e-3));
    CHECK(nemenyi_critical_value(0.10, 3) == doctest::Approx(2.902).epsilon(1e-3));
    CHECK(nemenyi_critical_value(0.05, 10) == doctest::Approx(4.474).epsilon(1e-3));
    for (double a : {0.01, 0.05, 0.10})
        for (int j = 3; j <= 30; ++j) CHECK(nemenyi_critical_value(a, j) > nemenyi_critical_value(a, j - 1));
    for (int j = 2; j <= 30; ++j) {
        CHECK(nemenyi_critical_value(0.01, j) > nemenyi_critical_value(0.05, j));
        CHECK(nemenyi_critical_value(0.05, j) > nemenyi_critical_value(0.10, j));
    }
    CHECK_THROWS_AS(nemenyi_critical_value(0.05, 31), Error);
    CHECK_THROWS_AS(nemenyi_critical_value(0.05, 1), Error);
    CHECK_THROWS_AS(nemenyi_critical_value(0.2, 3), Error);
}

TEST_CASE("MCB hand table") {
    const Matrix t = (Matrix(4, 3) << 1, 2, 3,  //
                      2, 1, 3,                  //
                      1, 3, 2,                  //
                      3, 3, 1)
                         .finished();
    const auto r = mcb_nemenyi(t, {"a", "b", "c"}, 0.05);
    CHECK(r.series == 4);
    CHECK(r.best == 0);
    CHECK(r.entries[0].mean_rank == doctest::Approx(1.625));
    CHECK(r.entries[1].mean_rank == doctest::Approx(2.125));
    CHECK(r.entries[2].mean_rank == doctest::Approx(2.25));
    CHECK(r.half_width == doctest::Approx(0.5 * 3.314493 * 0.5).epsilon(1e-6));
    CHECK(r.entries[2].lo == doctest::Approx(2.25 - r.half_width));
    for (const auto& e : r.entries) CHECK(!e.significant_vs_best);
}

TEST_CASE("MCB properties") {
    Rng rng(17);
    for (int t = 0; t < 30; ++t) {
        const int n = rng.integer(2, 40), j = rng.integer(2, 8);
        Matrix tab(n, j);
        for (Index i = 0; i < n; ++i)
            for (Index c = 0; c < j; ++c) tab(i, c) = static_cast<double>(rng.integer(1, 5));
        tab(0, 0) = 0.0;  // guarantees one informative row
        std::vector<std::string> names;
        for (int c = 0; c < j; ++c) names.push_back("m" + std::to_string(c));
        const auto r = mcb_nemenyi(tab, names);
        double sum = 0.0;
        for (const auto& e : r.entries) sum += e.mean_rank;
        CHECK(sum == doctest::Approx(j * (j + 1) / 2.0));
        CHECK(r.entries[static_cast<size_t>(r.best)].mean_rank ==
              doctest::Approx(std::min_element(r.entries.begin(), r.entries.end(), [](auto& a, auto& b) {
                                  return a.mean_rank < b.mean_rank;
                              })->mean_rank));
    }
    // Dominant approach has mean rank 1 and is separated from a clearly worse one.
    Matrix dom(60, 3);
    for (Index i = 0; i < 60; ++i) dom.row(i) << 1.0, 2.0 + rng.uniform(), 5.0;
    const auto d = mcb_nemenyi(dom, {"best", "mid", "worst"});
    CHECK(d.entries[0].mean_rank == 1.0);
    CHECK(d.best == 0);
    CHECK(d.entries[2].significant_vs_best);
    CHECK(!d.entries[0].significant_vs_best);
    // Identical columns tie.
    Matrix tie(10, 3);
    for (Index i = 0; i < 10; ++i) {
        const double v = rng.uniform();
        tie.row(i) << v, v, rng.uniform();
    }
    const auto ti = mcb_nemenyi(tie, {"x", "y", "z"});
    CHECK(ti.entries[0].mean_rank == ti.entries[1].mean_rank);
    // Quadrupling N halves the half-width.
    Matrix big(40, 3);
    for (int q = 0; q < 4; ++q) big.middleRows(q * 10, 10) = tie;
    const auto bi = mcb_nemenyi(big, {"x", "y", "z"});
    CHECK(bi.half_width == doctest::Approx(ti.half_width / 2.0).epsilon(1e-12));
}

TEST_CASE("MCB rejects degenerate tables") {
    CHECK_THROWS_AS(mcb_nemenyi(Matrix::Ones(5, 3), {"a", "b", "c"}), Error);
    CHECK_THROWS_AS(mcb_nemenyi(Matrix::Ones(5, 1), {"a"}), Error);
    CHECK_THROWS_AS(mcb_nemenyi(Matrix::Ones(5, 2), {"a"}), Error);
    Matrix nan = (Matrix(3, 2) << 1, 2, 2, 1, std::nan(""), 1).finished();
    const auto r = mcb_nemenyi(nan, {"a", "b"});
    CHECK(r.series == 2);
    try {
        mcb_nemenyi(Matrix::Ones(5, 3), {"a", "b", "c"});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateTable);
    }
}
