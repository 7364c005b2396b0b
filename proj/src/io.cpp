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

#include "ctrec/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace ctrec {

namespace {

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string at_line(int line, const std::string& msg) { return "line " + std::to_string(line) + ": " + msg; }

template <class T>
bool parse_value(const std::string& text, T& out) {
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

template <class T>
T field_as(const std::string& text, const char* name, int line) {
    T out{};
    if (!parse_value(text, out))
        throw Error(ErrorCode::ParseError, at_line(line, std::string("bad ") + name + " '" + text + "'"));
    return out;
}

std::string num(double v, int digits) {
    if (std::isnan(v)) return "NaN";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string exact(double v) { return num(v, 17); }
std::string report(double v) { return num(v, 12); }

// Iterates CSV records after checking the header; calls fn(fields, line).
template <class Fn>
void for_each_record(const std::string& text, const std::vector<std::string>& header, Fn&& fn) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        auto fields = split_csv_record(line);
        for (auto& f : fields) f = trim(f);
        if (!header_seen) {
            if (fields != header) {
                std::string want;
                for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
                throw Error(ErrorCode::SchemaError, at_line(lineno, "expected header '" + want + "'"));
            }
            header_seen = true;
            continue;
        }
        if (fields.size() != header.size())
            throw Error(ErrorCode::ParseError, at_line(lineno, "expected " + std::to_string(header.size()) +
                                                                   " fields, got " + std::to_string(fields.size())));
        fn(fields, lineno);
    }
    if (!header_seen) throw Error(ErrorCode::SchemaError, "missing header");
}

std::map<std::string, Index> label_index(const std::vector<std::string>& labels) {
    std::map<std::string, Index> out;
    for (size_t i = 0; i < labels.size(); ++i) out.emplace(labels[i], static_cast<Index>(i));
    return out;
}

Index series_of(const std::map<std::string, Index>& index, const std::string& label, int line) {
    auto it = index.find(label);
    if (it == index.end()) throw Error(ErrorCode::SchemaError, at_line(line, "unknown series '" + label + "'"));
    return it->second;
}

int order_of(const TemporalStructure& te, const std::string& text, int line) {
    const int k = field_as<int>(text, "k", line);
    const int o = te.order_index(k);
    if (o < 0) throw Error(ErrorCode::SchemaError, at_line(line, "k=" + text + " is not a configured order"));
    return o;
}

int step_of(const TemporalStructure& te, int o, const std::string& text, int line) {
    const int step = field_as<int>(text, "step", line);
    if (step < 1 || step > te.block_length(o))
        throw Error(ErrorCode::SchemaError,
                    at_line(line, "step " + text + " outside 1.." + std::to_string(te.block_length(o))));
    return step;
}

void ensure_finite(double v, int line) {
    if (!std::isfinite(v)) throw Error(ErrorCode::ParseError, at_line(line, "non-finite value"));
}

}  // namespace

std::vector<std::string> split_csv_record(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    out << content;
    if (!out) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

HierarchySpec parse_hierarchy(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    Index n_a = -1, n_b = -1, row = 0;
    HierarchySpec spec;
    std::vector<std::string> uppers, bottoms;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        if (n_a < 0) {
            std::istringstream hdr(body);
            long long a = 0, b = 0;
            std::string extra;
            if (!(hdr >> a >> b) || (hdr >> extra))
                throw Error(ErrorCode::ParseError, at_line(lineno, "expected 'n_a n_b'"));
            if (a < 1 || b < 1) throw Error(ErrorCode::EmptyHierarchy, at_line(lineno, "n_a and n_b must be positive"));
            n_a = a;
            n_b = b;
            spec.C = Matrix::Zero(n_a, n_b);
            continue;
        }
        const auto colon = body.find(':');
        if (colon == std::string::npos) throw Error(ErrorCode::ParseError, at_line(lineno, "expected 'label: values'"));
        const std::string label = trim(std::string_view(body).substr(0, colon));
        std::istringstream rest(body.substr(colon + 1));
        if (label.empty()) throw Error(ErrorCode::ParseError, at_line(lineno, "empty label"));
        if (label == "bottom") {
            if (!bottoms.empty()) throw Error(ErrorCode::ParseError, at_line(lineno, "bottom labels given twice"));
            std::string tok;
            while (rest >> tok) bottoms.push_back(tok);
            if (static_cast<Index>(bottoms.size()) != n_b)
                throw Error(ErrorCode::ParseError, at_line(lineno, "expected " + std::to_string(n_b) + " bottom labels"));
            continue;
        }
        if (row >= n_a) throw Error(ErrorCode::ParseError, at_line(lineno, "more aggregation rows than n_a"));
        std::string tok;
        Index col = 0;
        while (rest >> tok) {
            if (col >= n_b) throw Error(ErrorCode::ParseError, at_line(lineno, "more than n_b weights"));
            spec.C(row, col++) = field_as<double>(tok, "weight", lineno);
        }
        if (col != n_b)
            throw Error(ErrorCode::ParseError, at_line(lineno, "expected " + std::to_string(n_b) + " weights, got " +
                                                                   std::to_string(col)));
        if (spec.C.row(row).isZero(0.0)) throw Error(ErrorCode::ZeroRow, at_line(lineno, "aggregation row is all zero"));
        uppers.push_back(label);
        ++row;
    }
    if (n_a < 0) throw Error(ErrorCode::EmptyHierarchy, "no header line");
    if (row != n_a)
        throw Error(ErrorCode::ParseError, "expected " + std::to_string(n_a) + " aggregation rows, got " +
                                               std::to_string(row));
    if (bottoms.empty())
        for (Index j = 0; j < n_b; ++j) bottoms.push_back("B" + std::to_string(j + 1));
    spec.labels = uppers;
    spec.labels.insert(spec.labels.end(), bottoms.begin(), bottoms.end());
    return spec;
}

HierarchySpec read_hierarchy_file(const std::string& path) { return parse_hierarchy(read_text_file(path)); }

std::string format_hierarchy(const CrossSectionalStructure& cs) {
    std::ostringstream out;
    out << cs.n_a << ' ' << cs.n_b << '\n';
    const Matrix c(cs.C);
    for (Index a = 0; a < cs.n_a; ++a) {
        out << cs.labels[static_cast<size_t>(a)] << ':';
        for (Index j = 0; j < cs.n_b; ++j) out << ' ' << num(c(a, j), 17);
        out << '\n';
    }
    out << "bottom:";
    for (Index j = 0; j < cs.n_b; ++j) out << ' ' << cs.labels[static_cast<size_t>(cs.n_a + j)];
    out << '\n';
    return out.str();
}

std::vector<int> parse_orders(const std::string& text) {
    std::vector<int> out;
    std::string tok;
    for (char c : text + ",") {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!tok.empty()) {
                int v = 0;
                if (!parse_value(tok, v)) throw Error(ErrorCode::ParseError, "bad order '" + tok + "'");
                out.push_back(v);
                tok.clear();
            }
        } else {
            tok += c;
        }
    }
    if (out.empty()) throw Error(ErrorCode::ParseError, "no temporal orders given");
    return out;
}

ForecastCollection parse_forecast_csv(const std::string& text, const CrossTemporalStructure& ct) {
    const auto& te = ct.te;
    const auto index = label_index(ct.cs.labels);
    ForecastCollection sets;
    std::map<int, Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>> seen;
    for_each_record(text, {"replication", "series", "k", "step", "value"}, [&](const auto& f, int line) {
        const int rep = field_as<int>(f[0], "replication", line);
        const Index i = series_of(index, f[1], line);
        const int o = order_of(te, f[2], line);
        const int step = step_of(te, o, f[3], line);
        const double v = field_as<double>(f[4], "value", line);
        ensure_finite(v, line);
        auto [it, fresh] = sets.try_emplace(rep, ForecastSet::Zero(ct.cs.n(), te.size()));
        if (fresh) seen[rep] = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(ct.cs.n(), te.size(), false);
        const Index col = te.block_offset(o) + step - 1;
        if (seen[rep](i, col))
            throw Error(ErrorCode::SchemaError, at_line(line, "duplicate row for series " + f[1] + ", k=" + f[2] +
                                                                  ", step " + f[3] + ", replication " + f[0]));
        seen[rep](i, col) = true;
        it->second(i, col) = v;
    });
    if (sets.empty()) throw Error(ErrorCode::SchemaError, "no forecast rows");
    for (const auto& [rep, mask] : seen)
        for (Index i = 0; i < ct.cs.n(); ++i)
            for (int o = 0; o < te.p(); ++o)
                for (int s = 0; s < te.block_length(o); ++s)
                    if (!mask(i, te.block_offset(o) + s))
                        throw Error(ErrorCode::MissingCell,
                                    "series " + ct.cs.labels[static_cast<size_t>(i)] + ", k=" +
                                        std::to_string(te.orders[static_cast<size_t>(o)]) + ", step " +
                                        std::to_string(s + 1) + ", replication " + std::to_string(rep));
    return sets;
}

ForecastCollection read_forecast_csv(const std::string& path, const CrossTemporalStructure& ct) {
    return parse_forecast_csv(read_text_file(path), ct);
}

std::string format_forecast_csv(const ForecastCollection& sets, const CrossTemporalStructure& ct) {
    const auto& te = ct.te;
    std::string out = "replication,series,k,step,value\n";
    for (const auto& [rep, y] : sets) {
        check_shape(y, ct);
        for (Index i = 0; i < ct.cs.n(); ++i)
            for (int o = 0; o < te.p(); ++o)
                for (int s = 0; s < te.block_length(o); ++s)
                    out += std::to_string(rep) + ',' + csv_field(ct.cs.labels[static_cast<size_t>(i)]) + ',' +
                           std::to_string(te.orders[static_cast<size_t>(o)]) + ',' + std::to_string(s + 1) + ',' +
                           exact(y(i, te.block_offset(o) + s)) + '\n';
    }
    return out;
}

ResidualPanel parse_residual_csv(const std::string& text, const CrossTemporalStructure& ct) {
    const auto& te = ct.te;
    const auto index = label_index(ct.cs.labels);
    std::map<long long, std::pair<Vector, std::vector<bool>>> periods;
    for_each_record(text, {"series", "k", "period", "step", "value"}, [&](const auto& f, int line) {
        const Index i = series_of(index, f[0], line);
        const int o = order_of(te, f[1], line);
        const long long period = field_as<long long>(f[2], "period", line);
        const int step = step_of(te, o, f[3], line);
        const double v = field_as<double>(f[4], "value", line);
        ensure_finite(v, line);
        auto [it, fresh] = periods.try_emplace(period);
        if (fresh) it->second = {Vector::Zero(ct.dim()), std::vector<bool>(static_cast<size_t>(ct.dim()), false)};
        const Index col = i * te.size() + te.block_offset(o) + step - 1;
        if (it->second.second[static_cast<size_t>(col)])
            throw Error(ErrorCode::SchemaError, at_line(line, "duplicate residual for series " + f[0] + ", k=" + f[1] +
                                                                  ", period " + f[2] + ", step " + f[3]));
        it->second.second[static_cast<size_t>(col)] = true;
        it->second.first(col) = v;
    });
    if (periods.empty()) throw Error(ErrorCode::InsufficientResiduals, "no residual rows");
    Matrix stacked(static_cast<Index>(periods.size()), ct.dim());
    Index r = 0;
    for (const auto& [period, entry] : periods) {
        for (Index i = 0; i < ct.cs.n(); ++i)
            for (int o = 0; o < te.p(); ++o)
                for (int s = 0; s < te.block_length(o); ++s)
                    if (!entry.second[static_cast<size_t>(i * te.size() + te.block_offset(o) + s)])
                        throw Error(ErrorCode::MissingCell,
                                    "residual for series " + ct.cs.labels[static_cast<size_t>(i)] + ", k=" +
                                        std::to_string(te.orders[static_cast<size_t>(o)]) + ", period " +
                                        std::to_string(period) + ", step " + std::to_string(s + 1));
        stacked.row(r++) = entry.first.transpose();
    }
    return ResidualPanel(ct.cs.n(), te, std::move(stacked));
}

ResidualPanel read_residual_csv(const std::string& path, const CrossTemporalStructure& ct) {
    return parse_residual_csv(read_text_file(path), ct);
}

std::string format_residual_csv(const ResidualPanel& panel, const CrossTemporalStructure& ct) {
    const auto& te = ct.te;
    if (panel.width() != ct.dim()) throw Error(ErrorCode::ShapeMismatch, "residual panel does not match the structure");
    std::string out = "series,k,period,step,value\n";
    for (Index j = 0; j < panel.periods(); ++j)
        for (Index i = 0; i < ct.cs.n(); ++i)
            for (int o = 0; o < te.p(); ++o)
                for (int s = 0; s < te.block_length(o); ++s)
                    out += csv_field(ct.cs.labels[static_cast<size_t>(i)]) + ',' +
                           std::to_string(te.orders[static_cast<size_t>(o)]) + ',' + std::to_string(j + 1) + ',' +
                           std::to_string(s + 1) + ',' + exact(panel.at(i, te.block_offset(o) + s, j)) + '\n';
    return out;
}

SeriesPanel parse_panel_csv(const std::string& text, const CrossSectionalStructure& cs) {
    const auto index = label_index(cs.labels);
    struct Obs {
        Index series;
        std::string stamp;
        double value;
        int line;
    };
    std::vector<Obs> obs;
    for_each_record(text, {"series", "timestamp", "value"}, [&](const auto& f, int line) {
        const Index i = series_of(index, f[0], line);
        if (f[1].empty()) throw Error(ErrorCode::ParseError, at_line(line, "empty timestamp"));
        const double v = field_as<double>(f[2], "value", line);
        ensure_finite(v, line);
        obs.push_back({i, f[1], v, line});
    });
    if (obs.empty()) throw Error(ErrorCode::SchemaError, "no observations");

    std::vector<std::string> stamps;
    {
        std::set<std::string> uniq;
        for (const auto& o : obs) uniq.insert(o.stamp);
        stamps.assign(uniq.begin(), uniq.end());
    }
    bool numeric = true;
    for (const auto& s : stamps) {
        long long v = 0;
        numeric = numeric && parse_value(s, v);
    }
    if (numeric)
        std::sort(stamps.begin(), stamps.end(), [](const std::string& a, const std::string& b) {
            long long x = 0, y = 0;
            parse_value(a, x);
            parse_value(b, y);
            return x < y;
        });
    std::map<std::string, Index> stamp_index;
    for (size_t t = 0; t < stamps.size(); ++t) stamp_index.emplace(stamps[t], static_cast<Index>(t));

    const Index T = static_cast<Index>(stamps.size());
    Matrix values = Matrix::Zero(cs.n(), T);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> seen =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(cs.n(), T, false);
    std::vector<bool> has_series(static_cast<size_t>(cs.n()), false);
    for (const auto& o : obs) {
        const Index t = stamp_index.at(o.stamp);
        if (seen(o.series, t))
            throw Error(ErrorCode::SchemaError, at_line(o.line, "duplicate observation for series " +
                                                                    cs.labels[static_cast<size_t>(o.series)] +
                                                                    " at " + o.stamp));
        seen(o.series, t) = true;
        values(o.series, t) = o.value;
        has_series[static_cast<size_t>(o.series)] = true;
    }
    bool any_upper = false;
    for (Index a = 0; a < cs.n_a; ++a) any_upper = any_upper || has_series[static_cast<size_t>(a)];
    const Index first_required = any_upper ? 0 : cs.n_a;
    for (Index i = first_required; i < cs.n(); ++i)
        for (Index t = 0; t < T; ++t)
            if (!seen(i, t))
                throw Error(ErrorCode::MissingCell, "no observation for series " + cs.labels[static_cast<size_t>(i)] +
                                                        " at " + stamps[static_cast<size_t>(t)]);
    if (!any_upper) return derive_panel(cs, values.bottomRows(cs.n_b), std::move(stamps));
    SeriesPanel p;
    p.observations = std::move(values);
    p.labels = cs.labels;
    p.timestamps = std::move(stamps);
    return p;
}

SeriesPanel read_panel_csv(const std::string& path, const CrossSectionalStructure& cs) {
    return parse_panel_csv(read_text_file(path), cs);
}

std::string format_panel_csv(const SeriesPanel& panel) {
    std::string out = "series,timestamp,value\n";
    for (Index i = 0; i < panel.observations.rows(); ++i)
        for (Index t = 0; t < panel.length(); ++t) {
            const std::string stamp =
                panel.timestamps.empty() ? std::to_string(t) : panel.timestamps[static_cast<size_t>(t)];
            out += csv_field(panel.labels[static_cast<size_t>(i)]) + ',' + csv_field(stamp) + ',' +
                   exact(panel.observations(i, t)) + '\n';
        }
    return out;
}

std::string format_accuracy_csv(const AccuracyReport& rep) {
    std::string out = "level,series,k,approach,nrmse,skill\n";
    for (const auto& r : rep.rows)
        out += std::to_string(r.level) + ',' + csv_field(r.series) + ',' + std::to_string(r.k) + ',' +
               csv_field(r.approach) + ',' + report(r.nrmse) + ',' + report(r.skill) + '\n';
    return out;
}

std::string format_levels_csv(const AccuracyReport& rep) {
    std::string out = "level,k,approach,mean_nrmse,pooled_nrmse,mean_skill\n";
    for (const auto& s : rep.levels)
        out += std::to_string(s.level) + ',' + std::to_string(s.k) + ',' + csv_field(s.approach) + ',' +
               report(s.mean_nrmse) + ',' + report(s.pooled_nrmse) + ',' + report(s.mean_skill) + '\n';
    return out;
}

std::string format_discrepancy_csv(const std::vector<DiscrepancyRecord>& records) {
    std::string out = "replication,approach,d_cs,d_te\n";
    for (const auto& d : records)
        out += std::to_string(d.replication) + ',' + csv_field(d.approach) + ',' + report(d.values.d_cs) + ',' +
               report(d.values.d_te) + '\n';
    return out;
}

std::string format_negativity_csv(const std::vector<NegativityRow>& rows) {
    std::string out = "approach,k,n_rep,series_min,series_max,value_min,value_max\n";
    for (const auto& r : rows)
        out += csv_field(r.approach) + ',' + std::to_string(r.k) + ',' + std::to_string(r.replications) + ',' +
               std::to_string(r.series_min) + ',' + std::to_string(r.series_max) + ',' + report(r.value_min) + ',' +
               report(r.value_max) + '\n';
    return out;
}

std::string format_mcb_csv(const MCBReport& rep) {
    std::string out = "approach,mean_rank,lo,hi,significant_vs_best\n";
    for (const auto& e : rep.entries)
        out += csv_field(e.approach) + ',' + report(e.mean_rank) + ',' + report(e.lo) + ',' + report(e.hi) + ',' +
               (e.significant_vs_best ? "1" : "0") + '\n';
    return out;
}

void write_experiment_reports(const ExperimentResult& result, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create '" + dir + "': " + ec.message());
    const std::filesystem::path base(dir);
    write_text_file((base / "accuracy.csv").string(), format_accuracy_csv(result.accuracy));
    write_text_file((base / "levels.csv").string(), format_levels_csv(result.accuracy));
    write_text_file((base / "discrepancy.csv").string(), format_discrepancy_csv(result.discrepancies));
    write_text_file((base / "negativity.csv").string(), format_negativity_csv(result.negativity));
    for (const auto& [k, rep] : result.mcb)
        write_text_file((base / ("mcb_k" + std::to_string(k) + ".csv")).string(), format_mcb_csv(rep));
    if (!result.notes.empty()) {
        std::string notes;
        for (const auto& n : result.notes) notes += n + '\n';
        write_text_file((base / "notes.txt").string(), notes);
    }
}

}  // namespace ctrec
