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

// ctrec command-line tool. Exit codes: 0 success, 1 user error, 2 numerical
// failure.

#include "ctrec/ctrec.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Failure {
    ctr_status status;
};

void check(ctr_status st) {
    if (st != CTR_OK) throw Failure{st};
}

int exit_code(ctr_status st) { return st == CTR_OK ? 0 : (ctr_status_is_numerical(st) ? 2 : 1); }

template <class T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(p); }
};

using Structure = Handle<ctr_structure, ctr_structure_free>;
using Forecasts = Handle<ctr_forecasts, ctr_forecasts_free>;
using Residuals = Handle<ctr_residuals, ctr_residuals_free>;

struct StructureArgs {
    std::string hierarchy;
    std::optional<int> m;
    std::string orders;
    std::string config;
};

void add_structure_flags(CLI::App* cmd, StructureArgs& a) {
    cmd->add_option("--hierarchy", a.hierarchy, "hierarchy file")->required();
    cmd->add_option("--m", a.m, "high-frequency steps per low-frequency period");
    cmd->add_option("--orders", a.orders, "temporal orders, e.g. 24,12,8,6,4,3,2,1");
    cmd->add_option("--config", a.config, "config file supplying m and orders");
}

void load_structure(const StructureArgs& a, Structure& s) {
    if (a.m) {
        std::string orders = a.orders;
        if (orders.empty()) {
            // Every divisor of m, largest first.
            for (int k = *a.m; k >= 1; --k)
                if (*a.m % k == 0) orders += (orders.empty() ? "" : ",") + std::to_string(k);
        }
        check(ctr_structure_from_file(a.hierarchy.c_str(), *a.m, orders.c_str(), &s.p));
    } else if (!a.config.empty()) {
        check(ctr_structure_from_config(a.hierarchy.c_str(), a.config.c_str(), &s.p));
    } else {
        throw CLI::ValidationError("--m", "give --m (and optionally --orders) or --config");
    }
}

struct TuningArgs {
    std::optional<double> delta;
    std::string norm;
    std::optional<double> jitter;
    std::optional<int> max_iter;
};

void add_tuning_flags(CLI::App* cmd, TuningArgs& t) {
    cmd->add_option("--delta", t.delta, "iterative convergence tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--norm", t.norm, "iterative convergence norm")->check(CLI::IsMember({"l1", "linf"}));
    cmd->add_option("--jitter", t.jitter, "value added to covariance diagonals")->check(CLI::NonNegativeNumber);
    cmd->add_option("--max-iter", t.max_iter, "iteration cap")->check(CLI::PositiveNumber);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

int run_check(const StructureArgs& a) {
    Structure s;
    load_structure(a, s);
    ctr_summary sum{};
    check(ctr_structure_summary(s.p, &sum));
    std::printf("n=%zu n_a=%zu n_b=%zu\n", sum.n, sum.n_a, sum.n_b);
    std::printf("m=%d k*=%d orders=%d\n", sum.m, sum.k_star, sum.orders);
    std::printf("dim=%zu constraints=%zu (cs=%zu te=%zu)\n", sum.dim, sum.ct_constraints, sum.cs_constraints,
                sum.te_constraints);
    std::printf("kernel identities: ok\n");
    return 0;
}

struct ReconcileArgs {
    StructureArgs structure;
    TuningArgs tuning;
    std::string base, approach, residuals, out;
    bool sntz = false;
    bool structural = false;
};

int run_reconcile(const ReconcileArgs& a) {
    Structure s;
    load_structure(a.structure, s);
    ctr_options opt;
    if (!a.structure.config.empty()) check(ctr_options_from_config(a.structure.config.c_str(), &opt));
    else ctr_options_init(&opt);
    if (a.tuning.delta) opt.delta = *a.tuning.delta;
    if (!a.tuning.norm.empty()) opt.norm = a.tuning.norm == "l1" ? 1 : 0;
    if (a.tuning.jitter) opt.jitter = *a.tuning.jitter;
    if (a.tuning.max_iter) opt.max_iter = *a.tuning.max_iter;
    opt.sntz = a.sntz ? 1 : 0;
    opt.structural = a.structural ? 1 : 0;

    Forecasts base, out;
    Residuals res;
    check(ctr_forecasts_read(s.p, a.base.c_str(), &base.p));
    if (!a.residuals.empty()) check(ctr_residuals_read(s.p, a.residuals.c_str(), &res.p));
    check(ctr_reconcile(s.p, base.p, a.approach.c_str(), res.p, &opt, &out.p));
    check(ctr_forecasts_write(s.p, out.p, a.out.c_str()));
    ctr_discrepancy d{};
    check(ctr_forecasts_discrepancy(s.p, out.p, &d));
    std::printf("d_cs=%s d_te=%s min=%s\n", fmt(d.d_cs).c_str(), fmt(d.d_te).c_str(), fmt(d.min_value).c_str());
    return 0;
}

struct EvaluateArgs {
    StructureArgs structure;
    std::string actuals, reference, out_dir;
    std::vector<std::string> forecasts;
    double alpha = 0.05;
};

int run_evaluate(const EvaluateArgs& a) {
    Structure s;
    load_structure(a.structure, s);
    std::vector<std::string> names, paths;
    for (const auto& item : a.forecasts) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
            throw CLI::ValidationError("--forecasts", "expected name=path, got '" + item + "'");
        names.push_back(item.substr(0, eq));
        paths.push_back(item.substr(eq + 1));
    }
    std::vector<const char*> n, p;
    for (size_t j = 0; j < names.size(); ++j) {
        n.push_back(names[j].c_str());
        p.push_back(paths[j].c_str());
    }
    const std::string reference = a.reference.empty() ? names.front() : a.reference;
    check(ctr_evaluate(s.p, a.actuals.c_str(), n.data(), p.data(), n.size(), reference.c_str(), a.alpha,
                       a.out_dir.c_str()));
    std::printf("reports written to %s\n", a.out_dir.c_str());
    return 0;
}

struct SynthArgs {
    std::size_t n_b = 0;
    std::string zones;
    int days = 0;
    std::uint64_t seed = 1;
    bool cloudless = false;
};

std::vector<std::size_t> parse_zones(const SynthArgs& a) {
    std::vector<std::size_t> out;
    std::stringstream in(a.zones);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        try {
            size_t used = 0;
            const long long v = std::stoll(tok, &used);
            if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--zones", "bad zone size '" + tok + "'");
        }
    }
    if (out.empty()) out.push_back(a.n_b);
    return out;
}

void add_synth_flags(CLI::App* cmd, SynthArgs& s, bool experiment) {
    cmd->add_option("--n-b", s.n_b, "number of plants");
    cmd->add_option("--zones", s.zones, "zone sizes, comma separated (default: one zone)");
    cmd->add_option("--days", s.days, experiment ? "days to simulate (default: fit the design)" : "days to simulate");
    if (!experiment) cmd->add_option("--seed", s.seed, "random seed");
    cmd->add_flag("--cloudless", s.cloudless, "clear-sky panel, exactly periodic");
}

int run_synth(const SynthArgs& a, const std::string& out_dir) {
    if (a.n_b == 0) throw CLI::ValidationError("--n-b", "required and positive");
    if (a.days <= 0) throw CLI::ValidationError("--days", "required and positive");
    const auto zones = parse_zones(a);
    ctr_synth_options opt{a.n_b, zones.data(), zones.size(), a.days, a.seed, a.cloudless ? 1 : 0};
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const auto base = std::filesystem::path(out_dir);
    const std::string h = (base / "hierarchy.txt").string();
    const std::string p = (base / "panel.csv").string();
    check(ctr_synth(&opt, h.c_str(), p.c_str()));
    std::printf("wrote %s and %s\n", h.c_str(), p.c_str());
    return 0;
}

struct ExperimentArgs {
    std::string config, hierarchy, panel, base, out_dir;
    TuningArgs tuning;
    std::optional<double> alpha;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::vector<std::string> approaches;
    std::string reference;
    bool synth = false;
    SynthArgs synth_args;
};

int run_experiment(const ExperimentArgs& a) {
    std::string overrides;
    auto put = [&](const char* key, const std::string& value) { overrides += std::string(key) + " = " + value + "\n"; };
    if (a.tuning.delta) put("delta", fmt(*a.tuning.delta));
    if (!a.tuning.norm.empty()) put("norm", a.tuning.norm);
    if (a.tuning.jitter) put("jitter", fmt(*a.tuning.jitter));
    if (a.tuning.max_iter) put("max_iter", std::to_string(*a.tuning.max_iter));
    if (a.alpha) put("alpha", fmt(*a.alpha));
    if (a.seed) put("seed", std::to_string(*a.seed));
    if (a.jobs) put("jobs", std::to_string(*a.jobs));
    if (!a.approaches.empty()) {
        std::string list;
        for (const auto& name : a.approaches) list += (list.empty() ? "" : "; ") + name;
        put("approaches", list);
    }
    if (!a.reference.empty()) put("reference", a.reference);

    ctr_experiment_request req{};
    req.config_path = a.config.c_str();
    req.overrides = overrides.c_str();
    req.out_dir = a.out_dir.c_str();
    if (!a.base.empty()) req.base_path = a.base.c_str();

    std::vector<std::size_t> zones;
    ctr_synth_options synth{};
    if (a.synth) {
        if (a.synth_args.n_b == 0) throw CLI::ValidationError("--n-b", "required with --synth");
        zones = parse_zones(a.synth_args);
        synth = {a.synth_args.n_b, zones.data(), zones.size(), a.synth_args.days, 0, a.synth_args.cloudless ? 1 : 0};
        req.synth = &synth;
    } else {
        if (a.hierarchy.empty() || a.panel.empty())
            throw CLI::ValidationError("--panel", "give --hierarchy and --panel, or --synth");
        req.hierarchy_path = a.hierarchy.c_str();
        req.panel_path = a.panel.c_str();
    }
    check(ctr_run_experiment(&req));
    std::printf("reports written to %s\n", a.out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-temporal forecast reconciliation"};
    app.require_subcommand(1);

    StructureArgs check_args;
    auto* check_cmd = app.add_subcommand("check", "build the structures and print a summary");
    add_structure_flags(check_cmd, check_args);

    ReconcileArgs rec;
    auto* rec_cmd = app.add_subcommand("reconcile", "reconcile base forecasts");
    add_structure_flags(rec_cmd, rec.structure);
    add_tuning_flags(rec_cmd, rec.tuning);
    rec_cmd->add_option("--base", rec.base, "base forecast CSV")->required();
    rec_cmd->add_option("--approach", rec.approach, "e.g. oct(wlsv), ite(wlsv_te,wls_cs), ctbu")->required();
    rec_cmd->add_option("--residuals", rec.residuals, "residual CSV for residual-based approaches");
    rec_cmd->add_flag("--sntz", rec.sntz, "set negative bottom values to zero, then bottom-up");
    rec_cmd->add_flag("--structural", rec.structural, "use the structural form");
    rec_cmd->add_option("--out", rec.out, "output CSV")->required();

    EvaluateArgs ev;
    auto* ev_cmd = app.add_subcommand("evaluate", "score forecast files against actuals");
    add_structure_flags(ev_cmd, ev.structure);
    ev_cmd->add_option("--actuals", ev.actuals, "actuals in the base forecast schema")->required();
    ev_cmd->add_option("--forecasts", ev.forecasts, "name=path, repeatable")->required();
    ev_cmd->add_option("--reference", ev.reference, "reference name for skill (default: first)");
    ev_cmd->add_option("--alpha", ev.alpha, "MCB significance level");
    ev_cmd->add_option("--out-dir", ev.out_dir, "report directory")->required();

    ExperimentArgs ex;
    auto* ex_cmd = app.add_subcommand("experiment", "rolling-origin experiment");
    ex_cmd->add_option("--config", ex.config, "config file")->required();
    ex_cmd->add_option("--hierarchy", ex.hierarchy, "hierarchy file");
    ex_cmd->add_option("--panel", ex.panel, "panel CSV");
    ex_cmd->add_option("--base", ex.base, "ingested base forecasts (replications from 0)");
    ex_cmd->add_flag("--synth", ex.synth, "use a synthetic PV panel");
    add_synth_flags(ex_cmd, ex.synth_args, true);
    add_tuning_flags(ex_cmd, ex.tuning);
    ex_cmd->add_option("--approach", ex.approaches, "approach to run, repeatable (replaces the config list)");
    ex_cmd->add_option("--reference", ex.reference, "reference approach for skill scores");
    ex_cmd->add_option("--alpha", ex.alpha, "MCB significance level");
    ex_cmd->add_option("--seed", ex.seed, "random seed");
    ex_cmd->add_option("--jobs", ex.jobs, "parallel replications")->check(CLI::PositiveNumber);
    ex_cmd->add_option("--out-dir", ex.out_dir, "report directory")->required();

    SynthArgs sy;
    std::string synth_out;
    auto* sy_cmd = app.add_subcommand("synth", "write a synthetic PV hierarchy and panel");
    add_synth_flags(sy_cmd, sy, false);
    sy_cmd->add_option("--out-dir", synth_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*check_cmd) return run_check(check_args);
        if (*rec_cmd) return run_reconcile(rec);
        if (*ev_cmd) return run_evaluate(ev);
        if (*ex_cmd) return run_experiment(ex);
        if (*sy_cmd) return run_synth(sy, synth_out);
    } catch (const Failure& f) {
        std::fprintf(stderr, "error: %s\n", ctr_last_error());
        return exit_code(f.status);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
