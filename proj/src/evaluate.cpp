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

#include "ctrec/evaluate.hpp"

#include "ctrec/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace ctrec {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Studentized range quantiles, infinite df, J = 2..30.
constexpr std::array<double, 29> kQ01 = {
    3.642773, 4.120303, 4.402801, 4.602821, 4.757047, 4.882166, 4.987183, 5.077506, 5.156635, 5.226963,
    5.290196, 5.347592, 5.400105, 5.448476, 5.493291, 5.535020, 5.574047, 5.610690, 5.645215, 5.677844,
    5.708769, 5.738154, 5.766138, 5.792846, 5.818385, 5.842850, 5.866325, 5.888883, 5.910592};
constexpr std::array<double, 29> kQ05 = {
    2.771808, 3.314493, 3.633160, 3.857656, 4.030092, 4.169554, 4.286309, 4.386509, 4.474124, 4.551864,
    4.621655, 4.684920, 4.742732, 4.795924, 4.845154, 4.890951, 4.933745, 4.973892, 5.011689, 5.047385,
    5.081193, 5.113296, 5.143852, 5.172996, 5.200850, 5.227518, 5.253094, 5.277659, 5.301290};
constexpr std::array<double, 29> kQ10 = {
    2.326174, 2.902380, 3.240446, 3.478281, 3.660721, 3.808098, 3.931349, 4.037023, 4.129346, 4.211200,
    4.284635, 4.351158, 4.411913, 4.467782, 4.519464, 4.567519, 4.612403, 4.654494, 4.694104, 4.731500,
    4.766906, 4.800515, 4.832494, 4.862987, 4.892122, 4.920008, 4.946746, 4.972421, 4.997113};

}  // namespace

double nrmse(std::span<const double> forecasts, std::span<const double> actuals) {
    if (forecasts.size() != actuals.size()) throw Error(ErrorCode::ShapeMismatch, "forecast and actual lengths differ");
    if (forecasts.empty()) throw Error(ErrorCode::InvalidArgument, "nRMSE needs at least one value");
    double sq = 0.0, sum = 0.0;
    for (size_t l = 0; l < forecasts.size(); ++l) {
        const double e = forecasts[l] - actuals[l];
        sq += e * e;
        sum += actuals[l];
    }
    const double count = static_cast<double>(forecasts.size());
    const double mean = sum / count;
    if (mean == 0.0) throw Error(ErrorCode::ZeroMeanActuals, "actuals average to zero");
    return 100.0 * std::sqrt(sq / count) / mean;
}

double forecast_skill(double nrmse_j, double nrmse_ref) {
    if (!(nrmse_ref > 0.0)) throw Error(ErrorCode::ZeroReference, "reference nRMSE must be positive");
    return 1.0 - nrmse_j / nrmse_ref;
}

double frobenius_gap(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(ErrorCode::ShapeMismatch, "matrices differ in shape");
    return (a - b).norm();
}

DiscrepancyReport gross_discrepancies(const ForecastSet& y, const CrossTemporalStructure& ct) {
    const auto r = coherence_residuals(y, ct);
    return {r.cs.cwiseAbs().sum(), r.te.cwiseAbs().sum()};
}

bool NegativityAudit::seen(const std::string& approach) const {
    return std::find(order_.begin(), order_.end(), approach) != order_.end();
}

void NegativityAudit::add(const std::string& approach, const ForecastSet& y) {
    if (y.cols() != te_.size()) throw Error(ErrorCode::ShapeMismatch, "forecast set does not match the temporal structure");
    if (!seen(approach)) order_.push_back(approach);
    for (int o = 0; o < te_.p(); ++o) {
        const int k = te_.orders[static_cast<size_t>(o)];
        auto& cell = cells_[{approach, k}];
        auto& row = cell.row;
        row.approach = approach;
        row.k = k;
        const auto block = y.middleCols(te_.block_offset(o), te_.block_length(o));
        int affected = 0;
        for (Index i = 0; i < block.rows(); ++i) {
            bool any = false;
            for (Index c = 0; c < block.cols(); ++c) {
                const double v = block(i, c);
                if (v < 0.0) {
                    any = true;
                    row.value_min = cell.has_value ? std::min(row.value_min, v) : v;
                    row.value_max = cell.has_value ? std::max(row.value_max, v) : v;
                    cell.has_value = true;
                }
            }
            affected += any ? 1 : 0;
        }
        if (affected > 0) {
            row.series_min = row.replications == 0 ? affected : std::min(row.series_min, affected);
            row.series_max = std::max(row.series_max, affected);
            ++row.replications;
        }
    }
}

std::vector<NegativityRow> NegativityAudit::rows() const {
    std::vector<NegativityRow> out;
    for (const auto& a : order_)
        for (int k : te_.orders) out.push_back(cells_.at({a, k}).row);
    return out;
}

std::vector<NegativityRow> negativity_audit(const std::vector<TaggedRun>& runs, const TemporalStructure& te) {
    NegativityAudit audit(te);
    for (const auto& r : runs) audit.add(r.approach, r.forecasts);
    return audit.rows();
}

AccuracyAccumulator::AccuracyAccumulator(const CrossTemporalStructure& ct) : ct_(&ct) {}

void AccuracyAccumulator::add(const std::string& approach, const ForecastSet& forecasts, const ForecastSet& actuals) {
    check_shape(forecasts, *ct_);
    check_shape(actuals, *ct_);
    const auto& te = ct_->te;
    const Index n = ct_->cs.n();
    auto it = cells_.find(approach);
    if (it == cells_.end()) {
        approaches_.push_back(approach);
        Cell c{Matrix::Zero(n, te.p()), Matrix::Zero(n, te.p()), Eigen::MatrixXi::Zero(n, te.p())};
        it = cells_.emplace(approach, std::move(c)).first;
    }
    Cell& cell = it->second;
    for (int o = 0; o < te.p(); ++o) {
        const int off = te.block_offset(o);
        const int len = te.block_length(o);
        const Matrix err = forecasts.middleCols(off, len) - actuals.middleCols(off, len);
        cell.sq_err.col(o) += err.rowwise().squaredNorm();
        cell.actual.col(o) += actuals.middleCols(off, len).rowwise().sum();
        cell.count.col(o).array() += len;
    }
}

AccuracyReport AccuracyAccumulator::report(const std::string& reference) const {
    const auto& te = ct_->te;
    const auto& cs = ct_->cs;
    const std::vector<int> levels = series_levels(cs);
    const auto ref_it = cells_.find(reference);

    auto cell_nrmse = [](double sq, double act, double count) {
        const double mean = act / count;
        return mean == 0.0 ? kNaN : 100.0 * std::sqrt(sq / count) / mean;
    };

    AccuracyReport report;
    for (const auto& approach : approaches_) {
        const Cell& c = cells_.at(approach);
        for (Index i = 0; i < cs.n(); ++i)
            for (int o = 0; o < te.p(); ++o) {
                AccuracyRow row;
                row.level = levels[static_cast<size_t>(i)];
                row.series = cs.labels[static_cast<size_t>(i)];
                row.k = te.orders[static_cast<size_t>(o)];
                row.approach = approach;
                row.count = c.count(i, o);
                row.nrmse = cell_nrmse(c.sq_err(i, o), c.actual(i, o), static_cast<double>(row.count));
                if (approach == reference) {
                    row.skill = 0.0;
                } else if (ref_it != cells_.end()) {
                    const Cell& r = ref_it->second;
                    const double ref = cell_nrmse(r.sq_err(i, o), r.actual(i, o), static_cast<double>(r.count(i, o)));
                    row.skill = ref > 0.0 && std::isfinite(row.nrmse) ? forecast_skill(row.nrmse, ref) : kNaN;
                } else {
                    row.skill = kNaN;
                }
                report.rows.push_back(row);
            }
    }

    const int max_level = *std::max_element(levels.begin(), levels.end());
    for (const auto& approach : approaches_) {
        const Cell& c = cells_.at(approach);
        for (int lv = 0; lv <= max_level; ++lv)
            for (int o = 0; o < te.p(); ++o) {
                LevelSummary s;
                s.level = lv;
                s.k = te.orders[static_cast<size_t>(o)];
                s.approach = approach;
                double sum_n = 0.0, sum_s = 0.0, sq = 0.0, act = 0.0, count = 0.0;
                int used_n = 0, used_s = 0;
                for (const auto& row : report.rows) {
                    if (row.approach != approach || row.level != lv || row.k != s.k) continue;
                    if (std::isfinite(row.nrmse)) sum_n += row.nrmse, ++used_n;
                    if (std::isfinite(row.skill)) sum_s += row.skill, ++used_s;
                }
                for (Index i = 0; i < cs.n(); ++i) {
                    if (levels[static_cast<size_t>(i)] != lv) continue;
                    sq += c.sq_err(i, o);
                    act += c.actual(i, o);
                    count += c.count(i, o);
                }
                if (count == 0.0) continue;
                s.mean_nrmse = used_n ? sum_n / used_n : kNaN;
                s.mean_skill = used_s ? sum_s / used_s : kNaN;
                s.pooled_nrmse = cell_nrmse(sq, act, count);
                report.levels.push_back(s);
            }
    }
    return report;
}

Matrix AccuracyReport::table(int k, const std::vector<std::string>& names) const {
    std::vector<std::string> series;
    for (const auto& r : rows)
        if (r.k == k && std::find(series.begin(), series.end(), r.series) == series.end()) series.push_back(r.series);
    Matrix out = Matrix::Constant(static_cast<Index>(series.size()), static_cast<Index>(names.size()), kNaN);
    for (const auto& r : rows) {
        if (r.k != k) continue;
        const auto j = std::find(names.begin(), names.end(), r.approach);
        if (j == names.end()) continue;
        const auto i = std::find(series.begin(), series.end(), r.series);
        out(i - series.begin(), j - names.begin()) = r.nrmse;
    }
    return out;
}

double nemenyi_critical_value(double alpha, int approaches) {
    if (approaches < 2 || approaches > 30)
        throw Error(ErrorCode::DegenerateTable, "critical values tabulated for 2..30 approaches, got " + std::to_string(approaches));
    const size_t idx = static_cast<size_t>(approaches - 2);
    if (std::abs(alpha - 0.01) < 1e-12) return kQ01[idx];
    if (std::abs(alpha - 0.05) < 1e-12) return kQ05[idx];
    if (std::abs(alpha - 0.10) < 1e-12) return kQ10[idx];
    throw Error(ErrorCode::DegenerateTable, "alpha must be one of 0.01, 0.05, 0.10");
}

Vector average_ranks(std::span<const double> row) {
    const size_t j = row.size();
    std::vector<size_t> idx(j);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return row[a] < row[b]; });
    Vector ranks(static_cast<Index>(j));
    size_t start = 0;
    while (start < j) {
        size_t end = start + 1;
        while (end < j && row[idx[end]] == row[idx[start]]) ++end;
        const double avg = 0.5 * static_cast<double>(start + 1 + end);  // mean of ranks start+1 .. end
        for (size_t q = start; q < end; ++q) ranks(static_cast<Index>(idx[q])) = avg;
        start = end;
    }
    return ranks;
}

MCBReport mcb_nemenyi(const Matrix& table, const std::vector<std::string>& names, double alpha) {
    const Index cols = table.cols();
    if (static_cast<Index>(names.size()) != cols) throw Error(ErrorCode::ShapeMismatch, "one name per approach column");
    if (cols < 2) throw Error(ErrorCode::InvalidArgument, "MCB needs at least 2 approaches");

    Vector rank_sum = Vector::Zero(cols);
    Index used = 0;
    bool informative = false;
    for (Index i = 0; i < table.rows(); ++i) {
        if (!table.row(i).allFinite()) continue;
        const Vector row = table.row(i).transpose();
        rank_sum += average_ranks(std::span<const double>(row.data(), static_cast<size_t>(cols)));
        informative = informative || (row.array() != row(0)).any();
        ++used;
    }
    if (used < 2) throw Error(ErrorCode::InvalidArgument, "MCB needs at least 2 complete series");
    if (!informative) throw Error(ErrorCode::DegenerateTable, "every series ties all approaches");

    MCBReport report;
    report.series = used;
    report.critical_value = nemenyi_critical_value(alpha, static_cast<int>(cols));
    const double jj = static_cast<double>(cols);
    report.half_width = 0.5 * report.critical_value * std::sqrt(jj * (jj + 1.0) / (12.0 * static_cast<double>(used)));
    const Vector mean_rank = rank_sum / static_cast<double>(used);
    mean_rank.minCoeff(&report.best);
    for (Index j = 0; j < cols; ++j) {
        MCBEntry e;
        e.approach = names[static_cast<size_t>(j)];
        e.mean_rank = mean_rank(j);
        e.lo = e.mean_rank - report.half_width;
        e.hi = e.mean_rank + report.half_width;
        report.entries.push_back(e);
    }
    const auto& best = report.entries[static_cast<size_t>(report.best)];
    for (auto& e : report.entries) e.significant_vs_best = e.lo > best.hi || e.hi < best.lo;
    return report;
}

}  // namespace ctrec
