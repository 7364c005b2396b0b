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

#include "ctrec/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace ctrec {

namespace {

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* first = value.data();
    const char* last = first + value.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last)
        throw Error(ErrorCode::ParseError, "'" + key + "' expects a number, got '" + value + "'");
    return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
    if (out.empty()) throw Error(ErrorCode::ParseError, "'" + key + "' is empty");
    return out;
}

// Temporal aggregate at order k of observations [start, start + length).
Vector aggregate_window(const SeriesPanel& panel, Index series, Index start, Index length, int k) {
    Vector out(length / k);
    for (Index t = 0; t < out.size(); ++t) {
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += panel.observations(series, start + t * k + j);
        out(t) = s;
    }
    return out;
}

struct SesFit {
    double alpha = 0.0;
    Vector levels;     // final level per seasonal position
    Matrix fitted;     // periods x season, row 0 unused
};

SesFit fit_seasonal_ses(const Vector& x, int season) {
    const Index periods = x.size() / season;
    SesFit best;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int g = 1; g <= 9; ++g) {
        const double alpha = 0.1 * g;
        Vector level = x.head(season);
        Matrix fitted = Matrix::Zero(periods, season);
        double sse = 0.0;
        for (Index j = 1; j < periods; ++j)
            for (int s = 0; s < season; ++s) {
                const double obs = x(j * season + s);
                fitted(j, s) = level(s);
                const double e = obs - level(s);
                sse += e * e;
                level(s) += alpha * e;
            }
        if (sse < best_sse) {
            best_sse = sse;
            best = {alpha, level, fitted};
        }
    }
    return best;
}

void check_window(const SeriesPanel& panel, Index origin, const TemporalStructure& te, int window_length) {
    if (window_length <= 0 || window_length % te.m != 0)
        throw Error(ErrorCode::InvalidArgument, "window length must be a positive multiple of m");
    if (origin - window_length < 0 || origin > panel.length())
        throw Error(ErrorCode::InsufficientHistory, "window [" + std::to_string(origin - window_length) + ", " +
                                                        std::to_string(origin) + ") is outside the panel");
}

}  // namespace

SeriesPanel derive_panel(const CrossSectionalStructure& cs, const Matrix& bottom, std::vector<std::string> timestamps) {
    if (bottom.rows() != cs.n_b) throw Error(ErrorCode::ShapeMismatch, "bottom panel rows must equal n_b");
    if (!timestamps.empty() && static_cast<Index>(timestamps.size()) != bottom.cols())
        throw Error(ErrorCode::ShapeMismatch, "one timestamp per observation");
    SeriesPanel p;
    p.observations.resize(cs.n(), bottom.cols());
    // Same product as ct_bottom_up, so coherent forecasts can match observations bit for bit.
    p.observations = cs.S * bottom;
    p.labels = cs.labels;
    p.timestamps = std::move(timestamps);
    return p;
}

BaseKind parse_base_kind(const std::string& text) {
    if (text == "snaive") return BaseKind::snaive;
    if (text == "mean") return BaseKind::mean;
    if (text == "ses") return BaseKind::ses;
    throw Error(ErrorCode::ParseError, "unknown base method '" + text + "'");
}

std::string to_string(BaseKind kind) {
    switch (kind) {
        case BaseKind::snaive: return "snaive";
        case BaseKind::mean: return "mean";
        case BaseKind::ses: return "ses";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
    if (m < 1) fail("m must be positive");
    if (window_length <= 0 || window_length % m != 0) fail("window_length must be a positive multiple of m");
    if (replications < 1) fail("replications must be positive");
    if (horizon < 1) fail("horizon must be positive");
    if (eval_first < 1 || eval_last > horizon || eval_first > eval_last) fail("evaluation slice outside the horizon");
    if (eval_last - eval_first + 1 != m) fail("the evaluation slice must span exactly m steps");
    if ((eval_first - 1) % m != 0) fail("the evaluation slice must start on a low-frequency boundary");
    if (persistence_lag() < horizon) fail("persistence lag shorter than the horizon would use unobserved values");
    if (!(alpha == 0.01 || alpha == 0.05 || alpha == 0.10)) fail("alpha must be 0.01, 0.05 or 0.10");
    if (jitter < 0.0) fail("jitter must be non-negative");
    if (max_iter < 1) fail("max_iter must be positive");
    if (jobs < 1) fail("jobs must be positive");
    if (approaches.empty()) fail("no approaches configured");
    // Names compare in canonical form, so "seq(ols,ols)" matches "seq(ols_cs,ols_te)".
    std::vector<std::string> canonical;
    for (const auto& a : approaches) canonical.push_back(parse_approach(a).name);
    if (std::find(canonical.begin(), canonical.end(), parse_approach(reference).name) == canonical.end())
        fail("reference '" + reference + "' is not among the approaches");
}

std::vector<std::string> split_top_level(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char c : text) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if ((c == ',' || c == ';') && depth == 0) {
            if (auto t = trim(cur); !t.empty()) out.push_back(t);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (depth != 0) throw Error(ErrorCode::ParseError, "unbalanced parentheses in '" + text + "'");
    if (auto t = trim(cur); !t.empty()) out.push_back(t);
    return out;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        try {
            if (key == "m") cfg.m = parse_number<int>(key, value);
            else if (key == "orders") cfg.orders = parse_int_list(key, value);
            else if (key == "window_length") cfg.window_length = parse_number<int>(key, value);
            else if (key == "horizon") cfg.horizon = parse_number<int>(key, value);
            else if (key == "evaluation_slice") {
                const auto dots = value.find("..");
                if (dots == std::string::npos) throw Error(ErrorCode::ParseError, "evaluation_slice expects 'a..b'");
                cfg.eval_first = parse_number<int>(key, trim(value.substr(0, dots)));
                cfg.eval_last = parse_number<int>(key, trim(value.substr(dots + 2)));
            } else if (key == "replications") cfg.replications = parse_number<int>(key, value);
            else if (key == "approaches") cfg.approaches = split_top_level(value);
            else if (key == "reference") cfg.reference = value;
            else if (key == "delta") cfg.delta = parse_number<double>(key, value);
            else if (key == "norm") {
                if (value == "linf" || value == "inf") cfg.norm = NormKind::linf;
                else if (value == "l1" || value == "1") cfg.norm = NormKind::l1;
                else throw Error(ErrorCode::ParseError, "norm must be l1 or linf");
            } else if (key == "max_iter") cfg.max_iter = parse_number<int>(key, value);
            else if (key == "alpha") cfg.alpha = parse_number<double>(key, value);
            else if (key == "jitter") cfg.jitter = parse_number<double>(key, value);
            else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
            else if (key == "base") cfg.base = parse_base_kind(value);
            else if (key == "lag") cfg.lag = parse_number<int>(key, value);
            else if (key == "jobs") cfg.jobs = parse_number<int>(key, value);
            else throw Error(ErrorCode::ParseError, "unknown key '" + key + "'");
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(lineno) + ": " + e.detail());
        }
    }
    return cfg;
}

ExperimentConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

Matrix persistence_base(const SeriesPanel& panel, Index origin, int horizon, int lag) {
    if (lag < horizon) throw Error(ErrorCode::InvalidArgument, "persistence lag shorter than the horizon");
    if (origin - lag < 0)
        throw Error(ErrorCode::InsufficientHistory,
                    "persistence at origin " + std::to_string(origin) + " needs " + std::to_string(lag) + " past steps");
    if (origin > panel.length()) throw Error(ErrorCode::InsufficientHistory, "origin beyond the panel");
    Matrix out(panel.observations.rows(), horizon);
    for (int h = 1; h <= horizon; ++h) out.col(h - 1) = panel.observations.col(origin + h - 1 - lag);
    return out;
}

ForecastSet pers_bu_benchmark(const SeriesPanel& panel, Index origin, const CrossTemporalStructure& ct,
                              const ExperimentConfig& cfg) {
    const Matrix pers = persistence_base(panel, origin, cfg.horizon, cfg.persistence_lag());
    const Matrix b1 = pers.block(ct.cs.n_a, cfg.eval_first - 1, ct.cs.n_b, ct.te.m);
    return ct_bottom_up(b1, ct);
}

ForecastSet naive_base(const SeriesPanel& panel, Index origin, const CrossTemporalStructure& ct, BaseKind kind,
                       const ExperimentConfig& cfg) {
    const auto& te = ct.te;
    check_window(panel, origin, te, cfg.window_length);
    if (panel.observations.rows() != ct.cs.n()) throw Error(ErrorCode::ShapeMismatch, "panel rows must equal n");
    const Index start = origin - cfg.window_length;
    ForecastSet y(ct.cs.n(), te.size());
    for (Index i = 0; i < ct.cs.n(); ++i)
        for (int o = 0; o < te.p(); ++o) {
            const int k = te.orders[static_cast<size_t>(o)];
            const int season = te.block_length(o);
            const Vector x = aggregate_window(panel, i, start, cfg.window_length, k);
            const int off = te.block_offset(o);
            switch (kind) {
                case BaseKind::snaive:
                    for (int s = 0; s < season; ++s) y(i, off + s) = x(x.size() - season + s);
                    break;
                case BaseKind::mean:
                    y.row(i).segment(off, season).setConstant(x.mean());
                    break;
                case BaseKind::ses: {
                    const SesFit fit = fit_seasonal_ses(x, season);
                    y.row(i).segment(off, season) = fit.levels.transpose();
                    break;
                }
            }
        }
    return y;
}

ResidualPanel residual_panel_from_window(const SeriesPanel& panel, Index origin, const CrossTemporalStructure& ct,
                                         BaseKind kind, int window_length) {
    const auto& te = ct.te;
    check_window(panel, origin, te, window_length);
    if (panel.observations.rows() != ct.cs.n()) throw Error(ErrorCode::ShapeMismatch, "panel rows must equal n");
    const Index start = origin - window_length;
    const Index periods = window_length / te.m;
    if (periods < 2)
        throw Error(ErrorCode::InsufficientResiduals, "the window must hold at least two low-frequency periods");
    Matrix stacked(periods - 1, ct.dim());
    for (Index i = 0; i < ct.cs.n(); ++i)
        for (int o = 0; o < te.p(); ++o) {
            const int k = te.orders[static_cast<size_t>(o)];
            const int season = te.block_length(o);
            const Vector x = aggregate_window(panel, i, start, window_length, k);
            const Index col0 = i * te.size() + te.block_offset(o);
            Matrix fitted(periods, season);
            if (kind == BaseKind::ses) {
                fitted = fit_seasonal_ses(x, season).fitted;
            } else {
                double running = 0.0;
                for (Index t = 0; t < x.size(); ++t) {
                    const Index j = t / season, s = t % season;
                    if (j > 0)
                        fitted(j, s) = kind == BaseKind::snaive ? x(t - season) : running / static_cast<double>(t);
                    running += x(t);
                }
            }
            for (Index j = 1; j < periods; ++j)
                for (int s = 0; s < season; ++s) stacked(j - 1, col0 + s) = x(j * season + s) - fitted(j, s);
        }
    return ResidualPanel(ct.cs.n(), te, std::move(stacked));
}

ForecastSet observed_period(const SeriesPanel& panel, Index first, const CrossTemporalStructure& ct) {
    const auto& te = ct.te;
    if (first < 0 || first + te.m > panel.length())
        throw Error(ErrorCode::InsufficientHistory, "evaluation period extends past the panel");
    if (panel.observations.rows() != ct.cs.n()) throw Error(ErrorCode::ShapeMismatch, "panel rows must equal n");
    const Matrix hf = panel.observations.middleCols(first, te.m);  // n x m
    return (te.R * hf.transpose()).transpose();
}

Scoreboard::Scoreboard(const CrossTemporalStructure& ct) : ct_(&ct), accuracy_(ct), negativity_(ct.te) {}

void Scoreboard::add(int replication, const std::string& approach, const ForecastSet& forecasts,
                     const ForecastSet& actuals) {
    accuracy_.add(approach, forecasts, actuals);
    negativity_.add(approach, forecasts);
    discrepancies_.push_back({replication, approach, gross_discrepancies(forecasts, *ct_)});
}

ExperimentResult Scoreboard::finish(const std::string& reference, double alpha) const {
    ExperimentResult out;
    out.accuracy = accuracy_.report(reference);
    out.discrepancies = discrepancies_;
    out.negativity = negativity_.rows();
    const auto& names = accuracy_.approaches();
    if (names.size() < 2) {
        out.notes.push_back("MCB skipped: fewer than two approaches");
        return out;
    }
    for (int k : ct_->te.orders) {
        try {
            out.mcb.emplace(k, mcb_nemenyi(out.accuracy.table(k, names), names, alpha));
        } catch (const Error& e) {
            out.notes.push_back("MCB at k=" + std::to_string(k) + " skipped: " + std::string(e.what()));
        }
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const SeriesPanel& panel, const CrossTemporalStructure& ct,
                                const std::map<int, ForecastSet>* ingested) {
    cfg.validate();
    if (ct.te.m != cfg.m || ct.te.orders != build_temporal(cfg.m, cfg.orders).orders)
        throw Error(ErrorCode::InvalidArgument, "temporal structure does not match the configuration");
    if (panel.observations.rows() != ct.cs.n()) throw Error(ErrorCode::ShapeMismatch, "panel rows must equal n");
    const Index needed = cfg.window_length + static_cast<Index>(cfg.replications - 1) * cfg.m + cfg.horizon;
    if (panel.length() < needed)
        throw Error(ErrorCode::InsufficientHistory, "panel holds " + std::to_string(panel.length()) +
                                                        " steps, the design needs " + std::to_string(needed));

    std::vector<Approach> approaches;
    bool need_res = false;
    for (const auto& name : cfg.approaches) {
        approaches.push_back(parse_approach(name));
        need_res = need_res || approaches.back().needs_residuals();
    }

    ApproachContext base_ctx;
    base_ctx.ct = &ct;
    base_ctx.jitter = cfg.jitter;
    base_ctx.iterative.delta = cfg.delta;
    base_ctx.iterative.norm = cfg.norm;
    base_ctx.iterative.max_iter = cfg.max_iter;

    struct Outcome {
        std::vector<ForecastSet> forecasts;
        ForecastSet actuals;
        std::exception_ptr error;
    };

    auto run_one = [&](int r, Outcome& out) {
        try {
            const Index origin = cfg.window_length + static_cast<Index>(r) * cfg.m;
            ForecastSet base;
            if (ingested) {
                auto it = ingested->find(r);
                if (it == ingested->end())
                    throw Error(ErrorCode::MissingCell, "no base forecasts for replication " + std::to_string(r));
                base = it->second;
                check_shape(base, ct);
            } else {
                base = naive_base(panel, origin, ct, cfg.base, cfg);
            }
            std::optional<ResidualPanel> res;
            if (need_res) res = residual_panel_from_window(panel, origin, ct, cfg.base, cfg.window_length);
            ApproachContext ctx = base_ctx;
            ctx.residuals = res ? &*res : nullptr;
            out.actuals = observed_period(panel, origin + cfg.eval_first - 1, ct);
            for (const auto& a : approaches) {
                if (a.family == Approach::Family::pers_bu) {
                    ForecastSet y = pers_bu_benchmark(panel, origin, ct, cfg);
                    if (y.minCoeff() < 0.0)
                        throw Error(ErrorCode::InvalidArgument, "persistence benchmark has negative values");
                    out.forecasts.push_back(std::move(y));
                } else {
                    out.forecasts.push_back(apply_approach(a, base, ctx));
                }
            }
        } catch (...) {
            out.error = std::current_exception();
        }
    };

    Scoreboard board(ct);
    for (int first = 0; first < cfg.replications; first += cfg.jobs) {
        const int count = std::min(cfg.jobs, cfg.replications - first);
        std::vector<Outcome> batch(static_cast<size_t>(count));
        if (count == 1) {
            run_one(first, batch[0]);
        } else {
            std::vector<std::thread> workers;
            for (int b = 0; b < count; ++b) workers.emplace_back(run_one, first + b, std::ref(batch[static_cast<size_t>(b)]));
            for (auto& w : workers) w.join();
        }
        for (int b = 0; b < count; ++b) {
            Outcome& o = batch[static_cast<size_t>(b)];
            const int r = first + b;
            if (o.error) {
                try {
                    std::rethrow_exception(o.error);
                } catch (const Error& e) {
                    throw Error(e.code(), "replication " + std::to_string(r) + ": " + e.detail());
                }
            }
            for (size_t j = 0; j < approaches.size(); ++j) board.add(r, approaches[j].name, o.forecasts[j], o.actuals);
        }
    }
    return board.finish(parse_approach(cfg.reference).name, cfg.alpha);
}

SyntheticPV synth_pv_panel(Index n_b, const std::vector<Index>& zone_sizes, int days, std::uint64_t seed,
                           bool cloudless) {
    if (n_b < 1) throw Error(ErrorCode::InvalidArgument, "at least one plant required");
    if (days < 1) throw Error(ErrorCode::InvalidArgument, "at least one day required");
    Index total = 0;
    for (Index z : zone_sizes) {
        if (z < 1) throw Error(ErrorCode::BadPartition, "every zone needs at least one plant");
        total += z;
    }
    if (zone_sizes.empty() || total != n_b)
        throw Error(ErrorCode::BadPartition, "zone sizes sum to " + std::to_string(total) + ", expected " +
                                                 std::to_string(n_b));

    const Index zones = static_cast<Index>(zone_sizes.size());
    const int m = 24;
    const Index steps = static_cast<Index>(days) * m;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SyntheticPV out;
    out.aggregation = Matrix::Zero(1 + zones, n_b);
    out.aggregation.row(0).setOnes();
    out.labels.push_back("ISO");
    Index col = 0;
    std::vector<Index> zone_of(static_cast<size_t>(n_b));
    for (Index z = 0; z < zones; ++z) {
        out.labels.push_back("Z" + std::to_string(z + 1));
        for (Index j = 0; j < zone_sizes[static_cast<size_t>(z)]; ++j, ++col) {
            out.aggregation(1 + z, col) = 1.0;
            zone_of[static_cast<size_t>(col)] = z;
        }
    }
    for (Index j = 0; j < n_b; ++j) out.labels.push_back("P" + std::to_string(j + 1));

    Vector capacity(n_b);
    for (Index j = 0; j < n_b; ++j) capacity(j) = 1.0 + 9.0 * unif(rng);
    Vector sunrise(zones);
    for (Index z = 0; z < zones; ++z) sunrise(z) = 5.5 + 1.0 * unif(rng);
    const double daylight = 13.0;

    Matrix bottom(n_b, steps);
    Vector zone_state = Vector::Zero(zones);
    Vector plant_state = Vector::Zero(n_b);
    for (Index t = 0; t < steps; ++t) {
        const double hour = static_cast<double>(t % m) + 0.5;
        if (!cloudless && t % m == 0)
            for (Index z = 0; z < zones; ++z) zone_state(z) = 0.6 * zone_state(z) + 0.8 * gauss(rng);
        for (Index j = 0; j < n_b; ++j) {
            const Index z = zone_of[static_cast<size_t>(j)];
            const double phase = (hour - sunrise(z)) / daylight;
            const double clear = phase > 0.0 && phase < 1.0 ? std::pow(std::sin(M_PI * phase), 1.3) : 0.0;
            double atten = 1.0;
            if (!cloudless) {
                plant_state(j) = 0.8 * plant_state(j) + 0.5 * gauss(rng);
                const double logit = zone_state(z) + plant_state(j) - 0.5;
                atten = 1.0 - 0.75 / (1.0 + std::exp(-logit));
            }
            bottom(j, t) = clear > 0.0 ? capacity(j) * clear * atten : 0.0;
        }
    }

    std::vector<std::string> stamps;
    stamps.reserve(static_cast<size_t>(steps));
    for (Index t = 0; t < steps; ++t) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "d%04lld-h%02lld", static_cast<long long>(t / m + 1),
                      static_cast<long long>(t % m));
        stamps.emplace_back(buf);
    }
    const auto cs = build_cross_sectional(out.aggregation, out.labels);
    out.panel = derive_panel(cs, bottom, std::move(stamps));
    return out;
}

}  // namespace ctrec
