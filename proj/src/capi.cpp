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

#include "ctrec/ctrec.h"

#include "ctrec/approach.hpp"
#include "ctrec/experiment.hpp"
#include "ctrec/io.hpp"

#include <cmath>
#include <memory>
#include <new>
#include <string>

struct ctr_structure {
    ctrec::CrossTemporalStructure ct;
};

struct ctr_forecasts {
    ctrec::ForecastCollection sets;
};

struct ctr_residuals {
    ctrec::ResidualPanel panel;
};

namespace {

thread_local std::string g_last_error;

ctr_status fail(ctr_status status, std::string message) {
    g_last_error = std::move(message);
    return status;
}

template <class Fn>
ctr_status guarded(Fn&& fn) noexcept {
    try {
        g_last_error.clear();
        fn();
        return CTR_OK;
    } catch (const ctrec::Error& e) {
        return fail(static_cast<ctr_status>(static_cast<int>(e.code()) + 1), e.what());
    } catch (const std::bad_alloc&) {
        return fail(CTR_INTERNAL_ERROR, "out of memory");
    } catch (const std::exception& e) {
        return fail(CTR_INTERNAL_ERROR, e.what());
    } catch (...) {
        return fail(CTR_INTERNAL_ERROR, "unknown failure");
    }
}

void require(const void* p, const char* what) {
    if (!p) throw ctrec::Error(ctrec::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

ctrec::Index design_length(const ctrec::ExperimentConfig& cfg) {
    return cfg.window_length + static_cast<ctrec::Index>(cfg.replications - 1) * cfg.m + cfg.horizon;
}

ctrec::SyntheticPV make_synth(const ctr_synth_options& opt, int days) {
    require(opt.zones, "zones");
    std::vector<ctrec::Index> zones(opt.zones, opt.zones + opt.n_zones);
    return ctrec::synth_pv_panel(static_cast<ctrec::Index>(opt.n_b), zones, days, opt.seed, opt.cloudless != 0);
}

}  // namespace

extern "C" {

const char* ctr_version(void) { return "1.0.0"; }

const char* ctr_last_error(void) { return g_last_error.c_str(); }

const char* ctr_status_name(ctr_status status) {
    if (status == CTR_OK) return "Ok";
    if (status >= CTR_INVALID_ARGUMENT && status <= CTR_IO_ERROR)
        return ctrec::to_string(static_cast<ctrec::ErrorCode>(static_cast<int>(status) - 1)).data();
    return "InternalError";
}

int ctr_status_is_numerical(ctr_status status) {
    if (status >= CTR_INVALID_ARGUMENT && status <= CTR_IO_ERROR)
        return ctrec::is_numerical(static_cast<ctrec::ErrorCode>(static_cast<int>(status) - 1)) ? 1 : 0;
    return 0;
}

ctr_status ctr_structure_from_file(const char* hierarchy_path, int m, const char* orders, ctr_structure** out) {
    return guarded([&] {
        require(hierarchy_path, "hierarchy_path");
        require(orders, "orders");
        require(out, "out");
        auto spec = ctrec::read_hierarchy_file(hierarchy_path);
        auto cs = ctrec::build_cross_sectional(spec.C, spec.labels);
        auto te = ctrec::build_temporal(m, ctrec::parse_orders(orders));
        *out = new ctr_structure{ctrec::build_cross_temporal(std::move(cs), std::move(te))};
    });
}

ctr_status ctr_structure_from_matrix(const double* agg, size_t n_a, size_t n_b, const char* const* labels, int m,
                                     const int* orders, size_t n_orders, ctr_structure** out) {
    return guarded([&] {
        require(agg, "agg");
        require(orders, "orders");
        require(out, "out");
        ctrec::Matrix c(static_cast<ctrec::Index>(n_a), static_cast<ctrec::Index>(n_b));
        for (size_t a = 0; a < n_a; ++a)
            for (size_t j = 0; j < n_b; ++j)
                c(static_cast<ctrec::Index>(a), static_cast<ctrec::Index>(j)) = agg[a * n_b + j];
        std::vector<std::string> names;
        if (labels)
            for (size_t i = 0; i < n_a + n_b; ++i) {
                require(labels[i], "label");
                names.emplace_back(labels[i]);
            }
        auto cs = ctrec::build_cross_sectional(c, std::move(names));
        auto te = ctrec::build_temporal(m, std::vector<int>(orders, orders + n_orders));
        *out = new ctr_structure{ctrec::build_cross_temporal(std::move(cs), std::move(te))};
    });
}

ctr_status ctr_structure_from_config(const char* hierarchy_path, const char* config_path, ctr_structure** out) {
    return guarded([&] {
        require(hierarchy_path, "hierarchy_path");
        require(config_path, "config_path");
        require(out, "out");
        const auto cfg = ctrec::read_config_file(config_path);
        auto spec = ctrec::read_hierarchy_file(hierarchy_path);
        auto cs = ctrec::build_cross_sectional(spec.C, spec.labels);
        *out = new ctr_structure{ctrec::build_cross_temporal(std::move(cs), ctrec::build_temporal(cfg.m, cfg.orders))};
    });
}

void ctr_structure_free(ctr_structure* s) { delete s; }

ctr_status ctr_structure_summary(const ctr_structure* s, ctr_summary* out) {
    return guarded([&] {
        require(s, "structure");
        require(out, "out");
        const auto& ct = s->ct;
        out->n = static_cast<size_t>(ct.cs.n());
        out->n_a = static_cast<size_t>(ct.cs.n_a);
        out->n_b = static_cast<size_t>(ct.cs.n_b);
        out->m = ct.te.m;
        out->k_star = ct.te.k_star;
        out->orders = ct.te.p();
        out->dim = static_cast<size_t>(ct.dim());
        out->cs_constraints = static_cast<size_t>(ct.cs.n_a * ct.te.m);
        out->te_constraints = static_cast<size_t>(ct.cs.n() * ct.te.k_star);
        out->ct_constraints = static_cast<size_t>(ct.constraint_count());
    });
}

const char* ctr_structure_label(const ctr_structure* s, size_t i) {
    if (!s || i >= s->ct.cs.labels.size()) return nullptr;
    return s->ct.cs.labels[i].c_str();
}

ctr_status ctr_forecasts_read(const ctr_structure* s, const char* path, ctr_forecasts** out) {
    return guarded([&] {
        require(s, "structure");
        require(path, "path");
        require(out, "out");
        *out = new ctr_forecasts{ctrec::read_forecast_csv(path, s->ct)};
    });
}

ctr_status ctr_forecasts_write(const ctr_structure* s, const ctr_forecasts* f, const char* path) {
    return guarded([&] {
        require(s, "structure");
        require(f, "forecasts");
        require(path, "path");
        ctrec::write_text_file(path, ctrec::format_forecast_csv(f->sets, s->ct));
    });
}

ctr_status ctr_forecasts_from_buffer(const ctr_structure* s, const double* values, size_t replications,
                                     ctr_forecasts** out) {
    return guarded([&] {
        require(s, "structure");
        require(values, "values");
        require(out, "out");
        const auto rows = s->ct.cs.n();
        const auto cols = static_cast<ctrec::Index>(s->ct.te.size());
        auto f = std::make_unique<ctr_forecasts>();
        for (size_t r = 0; r < replications; ++r) {
            ctrec::ForecastSet y(rows, cols);
            const double* base = values + r * static_cast<size_t>(rows * cols);
            for (ctrec::Index i = 0; i < rows; ++i)
                for (ctrec::Index c = 0; c < cols; ++c) {
                    y(i, c) = base[i * cols + c];
                    if (!std::isfinite(y(i, c)))
                        throw ctrec::Error(ctrec::ErrorCode::InvalidArgument, "non-finite forecast value");
                }
            f->sets.emplace(static_cast<int>(r), std::move(y));
        }
        *out = f.release();
    });
}

ctr_status ctr_forecasts_to_buffer(const ctr_structure* s, const ctr_forecasts* f, size_t position, double* values) {
    return guarded([&] {
        require(s, "structure");
        require(f, "forecasts");
        require(values, "values");
        if (position >= f->sets.size()) throw ctrec::Error(ctrec::ErrorCode::InvalidArgument, "position out of range");
        auto it = std::next(f->sets.begin(), static_cast<long>(position));
        const auto& y = it->second;
        for (ctrec::Index i = 0; i < y.rows(); ++i)
            for (ctrec::Index c = 0; c < y.cols(); ++c) values[i * y.cols() + c] = y(i, c);
    });
}

size_t ctr_forecasts_count(const ctr_forecasts* f) { return f ? f->sets.size() : 0; }

void ctr_forecasts_free(ctr_forecasts* f) { delete f; }

ctr_status ctr_residuals_read(const ctr_structure* s, const char* path, ctr_residuals** out) {
    return guarded([&] {
        require(s, "structure");
        require(path, "path");
        require(out, "out");
        *out = new ctr_residuals{ctrec::read_residual_csv(path, s->ct)};
    });
}

ctr_status ctr_residuals_from_buffer(const ctr_structure* s, const double* stacked, size_t periods,
                                     ctr_residuals** out) {
    return guarded([&] {
        require(s, "structure");
        require(stacked, "stacked");
        require(out, "out");
        const auto dim = s->ct.dim();
        ctrec::Matrix m(static_cast<ctrec::Index>(periods), dim);
        for (ctrec::Index j = 0; j < m.rows(); ++j)
            for (ctrec::Index c = 0; c < dim; ++c) m(j, c) = stacked[j * dim + c];
        *out = new ctr_residuals{ctrec::ResidualPanel(s->ct.cs.n(), s->ct.te, std::move(m))};
    });
}

void ctr_residuals_free(ctr_residuals* r) { delete r; }

void ctr_options_init(ctr_options* opt) {
    if (!opt) return;
    opt->delta = 0.0;
    opt->norm = 0;
    opt->max_iter = 100;
    opt->jitter = 0.0;
    opt->sntz = 0;
    opt->structural = 0;
}

ctr_status ctr_options_from_config(const char* config_path, ctr_options* opt) {
    return guarded([&] {
        require(config_path, "config_path");
        require(opt, "options");
        const auto cfg = ctrec::read_config_file(config_path);
        ctr_options_init(opt);
        opt->delta = cfg.delta.value_or(0.0);
        opt->norm = cfg.norm == ctrec::NormKind::l1 ? 1 : 0;
        opt->max_iter = cfg.max_iter;
        opt->jitter = cfg.jitter;
    });
}

ctr_status ctr_reconcile(const ctr_structure* s, const ctr_forecasts* base, const char* approach,
                         const ctr_residuals* residuals, const ctr_options* opt, ctr_forecasts** out) {
    return guarded([&] {
        require(s, "structure");
        require(base, "base");
        require(approach, "approach");
        require(out, "out");
        ctr_options o;
        ctr_options_init(&o);
        if (opt) o = *opt;
        ctrec::Approach a = ctrec::parse_approach(approach);
        if (o.sntz) a.sntz = true;
        ctrec::ApproachContext ctx;
        ctx.ct = &s->ct;
        ctx.residuals = residuals ? &residuals->panel : nullptr;
        ctx.jitter = o.jitter;
        if (o.delta > 0.0) ctx.iterative.delta = o.delta;
        ctx.iterative.norm = o.norm == 1 ? ctrec::NormKind::l1 : ctrec::NormKind::linf;
        ctx.iterative.max_iter = o.max_iter;
        ctx.form = o.structural ? ctrec::Form::structural : ctrec::Form::projection;
        auto result = std::make_unique<ctr_forecasts>();
        for (const auto& [rep, y] : base->sets) {
            try {
                result->sets.emplace(rep, ctrec::apply_approach(a, y, ctx));
            } catch (const ctrec::Error& e) {
                throw ctrec::Error(e.code(), "replication " + std::to_string(rep) + ": " + e.detail());
            }
        }
        *out = result.release();
    });
}

ctr_status ctr_forecasts_discrepancy(const ctr_structure* s, const ctr_forecasts* f, ctr_discrepancy* out) {
    return guarded([&] {
        require(s, "structure");
        require(f, "forecasts");
        require(out, "out");
        if (f->sets.empty()) throw ctrec::Error(ctrec::ErrorCode::InvalidArgument, "empty forecast collection");
        ctr_discrepancy d{0.0, 0.0, std::numeric_limits<double>::infinity(), 0.0};
        for (const auto& [rep, y] : f->sets) {
            const auto g = ctrec::gross_discrepancies(y, s->ct);
            d.d_cs = std::max(d.d_cs, g.d_cs);
            d.d_te = std::max(d.d_te, g.d_te);
            d.min_value = std::min(d.min_value, y.minCoeff());
            d.max_violation = std::max(d.max_violation, ctrec::max_constraint_violation(y, s->ct));
        }
        *out = d;
    });
}

ctr_status ctr_synth(const ctr_synth_options* opt, const char* hierarchy_path, const char* panel_path) {
    return guarded([&] {
        require(opt, "options");
        require(hierarchy_path, "hierarchy_path");
        require(panel_path, "panel_path");
        const auto pv = make_synth(*opt, opt->days);
        const auto cs = ctrec::build_cross_sectional(pv.aggregation, pv.labels);
        ctrec::write_text_file(hierarchy_path, ctrec::format_hierarchy(cs));
        ctrec::write_text_file(panel_path, ctrec::format_panel_csv(pv.panel));
    });
}

ctr_status ctr_run_experiment(const ctr_experiment_request* req) {
    return guarded([&] {
        require(req, "request");
        require(req->config_path, "config_path");
        require(req->out_dir, "out_dir");
        std::string text = ctrec::read_text_file(req->config_path);
        if (req->overrides) text += std::string("\n") + req->overrides;
        const auto cfg = ctrec::parse_config(text);
        cfg.validate();
        auto te = ctrec::build_temporal(cfg.m, cfg.orders);

        std::optional<ctrec::CrossTemporalStructure> ct;
        ctrec::SeriesPanel panel;
        if (req->synth) {
            if (cfg.m != 24) throw ctrec::Error(ctrec::ErrorCode::InvalidArgument, "synthetic panels are hourly (m = 24)");
            const auto needed = design_length(cfg);
            const int days = req->synth->days > 0 ? req->synth->days : static_cast<int>((needed + 23) / 24);
            ctr_synth_options synth = *req->synth;
            synth.seed = cfg.seed;
            auto pv = make_synth(synth, days);
            ct = ctrec::build_cross_temporal(ctrec::build_cross_sectional(pv.aggregation, pv.labels), te);
            panel = std::move(pv.panel);
        } else {
            require(req->hierarchy_path, "hierarchy_path");
            require(req->panel_path, "panel_path");
            const auto spec = ctrec::read_hierarchy_file(req->hierarchy_path);
            ct = ctrec::build_cross_temporal(ctrec::build_cross_sectional(spec.C, spec.labels), te);
            panel = ctrec::read_panel_csv(req->panel_path, ct->cs);
        }
        std::optional<ctrec::ForecastCollection> ingested;
        if (req->base_path) ingested = ctrec::read_forecast_csv(req->base_path, *ct);
        const auto result = ctrec::run_experiment(cfg, panel, *ct, ingested ? &*ingested : nullptr);
        ctrec::write_experiment_reports(result, req->out_dir);
    });
}

ctr_status ctr_evaluate(const ctr_structure* s, const char* actuals_path, const char* const* names,
                        const char* const* paths, size_t count, const char* reference, double alpha,
                        const char* out_dir) {
    return guarded([&] {
        require(s, "structure");
        require(actuals_path, "actuals_path");
        require(reference, "reference");
        require(out_dir, "out_dir");
        if (count == 0) throw ctrec::Error(ctrec::ErrorCode::InvalidArgument, "no forecasts to evaluate");
        require(names, "names");
        require(paths, "paths");
        const auto actuals = ctrec::read_forecast_csv(actuals_path, s->ct);
        std::vector<std::pair<std::string, ctrec::ForecastCollection>> runs;
        bool has_reference = false;
        for (size_t j = 0; j < count; ++j) {
            require(names[j], "name");
            require(paths[j], "path");
            runs.emplace_back(names[j], ctrec::read_forecast_csv(paths[j], s->ct));
            has_reference = has_reference || runs.back().first == reference;
        }
        if (!has_reference)
            throw ctrec::Error(ctrec::ErrorCode::InvalidArgument,
                               "reference '" + std::string(reference) + "' is not among the forecasts");
        ctrec::Scoreboard board(s->ct);
        for (const auto& [rep, y] : actuals)
            for (const auto& [name, sets] : runs) {
                auto it = sets.find(rep);
                if (it == sets.end())
                    throw ctrec::Error(ctrec::ErrorCode::MissingCell,
                                       "forecasts '" + name + "' lack replication " + std::to_string(rep));
                board.add(rep, name, it->second, y);
            }
        ctrec::write_experiment_reports(board.finish(reference, alpha), out_dir);
    });
}

}  // extern "C"
