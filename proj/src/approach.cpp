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

#include "ctrec/approach.hpp"

#include "ctrec/error.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <vector>

namespace ctrec {

namespace {

std::string strip(std::string_view s) {
    std::string out;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

[[noreturn]] void bad(std::string_view text, const std::string& why) {
    throw Error(ErrorCode::ParseError, "approach '" + std::string(text) + "': " + why);
}

std::optional<CovarianceKind> kind_from(std::string_view s) {
    if (s == "ols") return CovarianceKind::ols;
    if (s == "struc") return CovarianceKind::struc;
    if (s == "wls") return CovarianceKind::wls;
    if (s == "wlsv") return CovarianceKind::wlsv;
    if (s == "shr") return CovarianceKind::shr;
    if (s == "sam") return CovarianceKind::sam;
    if (s == "bdshr") return CovarianceKind::bdshr;
    if (s == "bdsam") return CovarianceKind::bdsam;
    return std::nullopt;
}

enum class Dim { any, cs, te };

struct Arg {
    CovarianceKind kind;
    Dim dim;
};

Arg parse_arg(std::string_view text, std::string_view arg) {
    Dim dim = Dim::any;
    std::string_view body = arg;
    if (body.size() > 3 && body.substr(body.size() - 3) == "_cs") {
        dim = Dim::cs;
        body.remove_suffix(3);
    } else if (body.size() > 3 && body.substr(body.size() - 3) == "_te") {
        dim = Dim::te;
        body.remove_suffix(3);
    }
    const auto kind = kind_from(body);
    if (!kind) bad(text, "unknown covariance kind '" + std::string(body) + "'");
    if (*kind == CovarianceKind::wls) {
        if (dim == Dim::te) bad(text, "wls is a cross-sectional kind");
        dim = Dim::cs;
    }
    if (*kind == CovarianceKind::wlsv) {
        if (dim == Dim::cs) bad(text, "wlsv is a temporal kind");
        dim = Dim::te;
    }
    if (*kind == CovarianceKind::bdshr || *kind == CovarianceKind::bdsam)
        bad(text, "block-diagonal kinds only exist for oct");
    return {*kind, dim};
}

std::vector<std::string> split_args(std::string_view inner) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : inner) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string dim_suffix(Dim d) { return d == Dim::cs ? "_cs" : "_te"; }

}  // namespace

bool Approach::needs_residuals() const {
    auto residual_kind = [](CovarianceKind k) {
        return k != CovarianceKind::ols && k != CovarianceKind::struc && k != CovarianceKind::kron;
    };
    switch (family) {
        case Family::oct: return residual_kind(oct_kind);
        case Family::seq:
        case Family::ite:
        case Family::ka: return residual_kind(cs_kind) || residual_kind(te_kind);
        case Family::pbu_te: return residual_kind(te_kind);
        case Family::pbu_cs: return residual_kind(cs_kind);
        default: return false;
    }
}

bool Approach::is_coherent() const {
    if (sntz) return true;
    switch (family) {
        case Family::oct:
        case Family::oct_mixed:
        case Family::ctbu:
        case Family::pbu_te:
        case Family::pbu_cs:
        case Family::pers_bu: return true;
        default: return false;
    }
}

Approach parse_approach(std::string_view text) {
    std::string s = strip(text);
    Approach a;
    const std::string suffix = "+sntz";
    if (s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix) {
        a.sntz = true;
        s.resize(s.size() - suffix.size());
    }
    if (s.empty()) bad(text, "empty");

    const auto open = s.find('(');
    std::string head = s.substr(0, open);
    std::vector<std::string> args;
    if (open != std::string::npos) {
        if (s.back() != ')') bad(text, "missing ')'");
        args = split_args(std::string_view(s).substr(open + 1, s.size() - open - 2));
    }

    auto expect_args = [&](size_t count) {
        if (args.size() != count) bad(text, "expected " + std::to_string(count) + " argument(s)");
    };

    if (head == "base" || head == "ctbu" || head == "pers_bu") {
        if (open != std::string::npos) bad(text, "takes no arguments");
        a.family = head == "base" ? Approach::Family::base
                   : head == "ctbu" ? Approach::Family::ctbu
                                    : Approach::Family::pers_bu;
        a.name = head;
    } else if (head == "oct") {
        if (args.size() == 1) {
            const auto kind = kind_from(args[0]);
            if (!kind || *kind == CovarianceKind::wls) bad(text, "unknown oct covariance '" + args[0] + "'");
            a.family = Approach::Family::oct;
            a.oct_kind = *kind;
            a.name = "oct(" + args[0] + ")";
        } else {
            expect_args(2);
            Arg x = parse_arg(text, args[0]);
            Arg y = parse_arg(text, args[1]);
            if (x.dim == Dim::any) x.dim = Dim::cs;
            if (y.dim == Dim::any) y.dim = Dim::te;
            if (x.dim == y.dim) bad(text, "needs one cs and one te kind");
            const Arg& cs = x.dim == Dim::cs ? x : y;
            const Arg& te = x.dim == Dim::cs ? y : x;
            for (auto k : {cs.kind, te.kind})
                if (k != CovarianceKind::ols && k != CovarianceKind::struc)
                    bad(text, "two-argument oct supports ols and struc only");
            a.family = Approach::Family::oct_mixed;
            a.cs_kind = cs.kind;
            a.te_kind = te.kind;
            a.name = "oct(" + to_string(cs.kind) + "_cs," + to_string(te.kind) + "_te)";
        }
    } else if (head == "seq" || head == "ite" || head == "ka") {
        expect_args(2);
        Arg x = parse_arg(text, args[0]);
        Arg y = parse_arg(text, args[1]);
        // seq(<cs>,<te>) reads cs first; ite/ka default to (te, cs).
        const Dim first_default = head == "seq" ? Dim::cs : Dim::te;
        if (x.dim == Dim::any && y.dim == Dim::any) {
            x.dim = first_default;
            y.dim = first_default == Dim::cs ? Dim::te : Dim::cs;
        } else if (x.dim == Dim::any) {
            x.dim = y.dim == Dim::cs ? Dim::te : Dim::cs;
        } else if (y.dim == Dim::any) {
            y.dim = x.dim == Dim::cs ? Dim::te : Dim::cs;
        }
        if (x.dim == y.dim) bad(text, "needs one cs and one te kind");
        a.family = head == "seq" ? Approach::Family::seq : head == "ite" ? Approach::Family::ite : Approach::Family::ka;
        a.temporal_first = x.dim == Dim::te;
        if (a.family == Approach::Family::ka && !a.temporal_first) bad(text, "ka reconciles temporally first");
        a.cs_kind = x.dim == Dim::cs ? x.kind : y.kind;
        a.te_kind = x.dim == Dim::te ? x.kind : y.kind;
        a.name = head + "(" + to_string(x.kind) + dim_suffix(x.dim) + "," + to_string(y.kind) + dim_suffix(y.dim) + ")";
    } else if (head == "pbu") {
        expect_args(1);
        const auto eq = args[0].find('=');
        if (eq == std::string::npos) bad(text, "expected pbu(te=<kind>) or pbu(cs=<kind>)");
        const std::string dim = args[0].substr(0, eq);
        Arg arg = parse_arg(text, args[0].substr(eq + 1));
        if (dim == "te") {
            if (arg.dim == Dim::cs) bad(text, "cross-sectional kind given for te");
            a.family = Approach::Family::pbu_te;
            a.te_kind = arg.kind;
        } else if (dim == "cs") {
            if (arg.dim == Dim::te) bad(text, "temporal kind given for cs");
            a.family = Approach::Family::pbu_cs;
            a.cs_kind = arg.kind;
        } else {
            bad(text, "expected te= or cs=");
        }
        a.name = "pbu(" + dim + "=" + to_string(arg.kind) + ")";
    } else {
        bad(text, "unknown approach");
    }
    if (a.sntz) a.name += suffix;
    return a;
}

namespace {

const ResidualPanel& need_residuals(const ApproachContext& ctx, CovarianceKind kind) {
    if (!ctx.residuals)
        throw Error(ErrorCode::InsufficientResiduals, "covariance kind '" + to_string(kind) + "' needs in-sample residuals");
    return *ctx.residuals;
}

EstimatorOptions estimator_of(const ApproachContext& ctx) {
    if (ctx.jitter < 0.0) throw Error(ErrorCode::InvalidArgument, "jitter must be nonnegative");
    EstimatorOptions opt = ctx.estimator;
    opt.jitter = ctx.jitter;
    return opt;
}

}  // namespace

PerOrderCovariances cs_covariances(CovarianceKind kind, const ApproachContext& ctx) {
    const auto& ct = *ctx.ct;
    PerOrderCovariances out;
    switch (kind) {
        case CovarianceKind::ols: out.push_back(cov_identity(ct.cs.n())); break;
        case CovarianceKind::struc: out.push_back(cov_structural(ct.cs)); break;
        case CovarianceKind::wls:
        case CovarianceKind::shr:
        case CovarianceKind::sam: {
            const auto& panel = need_residuals(ctx, kind);
            for (int o = 0; o < ct.te.p(); ++o) {
                if (kind == CovarianceKind::wls) out.push_back(cov_series_variance_cs(panel, o, estimator_of(ctx)));
                else if (kind == CovarianceKind::shr) out.push_back(cov_shrunk_cs(panel, o, estimator_of(ctx)));
                else out.push_back(cov_sample_cs(panel, o, estimator_of(ctx)));
            }
            break;
        }
        default: throw Error(ErrorCode::InvalidArgument, "'" + to_string(kind) + "' is not a cross-sectional kind");
    }
    return out;
}

PerSeriesCovariances te_covariances(CovarianceKind kind, const ApproachContext& ctx) {
    const auto& ct = *ctx.ct;
    PerSeriesCovariances out;
    switch (kind) {
        case CovarianceKind::ols: out.push_back(cov_identity(ct.te.size())); break;
        case CovarianceKind::struc: out.push_back(cov_structural(ct.te)); break;
        case CovarianceKind::wlsv:
        case CovarianceKind::shr:
        case CovarianceKind::sam: {
            const auto& panel = need_residuals(ctx, kind);
            for (Index i = 0; i < ct.cs.n(); ++i) {
                if (kind == CovarianceKind::wlsv) out.push_back(cov_series_variance_te(panel, i, estimator_of(ctx)));
                else if (kind == CovarianceKind::shr) out.push_back(cov_shrunk_te(panel, i, estimator_of(ctx)));
                else out.push_back(cov_sample_te(panel, i, estimator_of(ctx)));
            }
            break;
        }
        default: throw Error(ErrorCode::InvalidArgument, "'" + to_string(kind) + "' is not a temporal kind");
    }
    return out;
}

CovarianceModel ct_covariance(CovarianceKind kind, const ApproachContext& ctx) {
    const auto& ct = *ctx.ct;
    auto cov = [&]() -> CovarianceModel {
        switch (kind) {
            case CovarianceKind::ols: return cov_identity(ct.dim());
            case CovarianceKind::struc: return cov_structural(ct);
            case CovarianceKind::wlsv: return cov_series_variance_ct(need_residuals(ctx, kind), estimator_of(ctx));
            case CovarianceKind::shr: return cov_shrunk_ct(need_residuals(ctx, kind), estimator_of(ctx));
            case CovarianceKind::sam: return cov_sample_ct(need_residuals(ctx, kind), estimator_of(ctx));
            case CovarianceKind::bdshr: return cov_block_diagonal(need_residuals(ctx, kind), ct, true, estimator_of(ctx));
            case CovarianceKind::bdsam: return cov_block_diagonal(need_residuals(ctx, kind), ct, false, estimator_of(ctx));
            default: throw Error(ErrorCode::InvalidArgument, "'" + to_string(kind) + "' is not a cross-temporal kind");
        }
    }();
    return cov;
}

ForecastSet apply_approach(const Approach& a, const ForecastSet& base, const ApproachContext& ctx) {
    if (!ctx.ct) throw Error(ErrorCode::InvalidArgument, "approach context has no structure");
    const auto& ct = *ctx.ct;
    check_shape(base, ct);
    ForecastSet out;
    switch (a.family) {
        case Approach::Family::base: out = base; break;
        case Approach::Family::oct: out = reconcile_oct(base, ct, ct_covariance(a.oct_kind, ctx), ctx.form); break;
        case Approach::Family::oct_mixed: {
            const auto w = cs_covariances(a.cs_kind, ctx).front();
            const auto omega = te_covariances(a.te_kind, ctx).front();
            out = reconcile_oct(base, ct, cov_kron(w, omega), ctx.form);
            break;
        }
        case Approach::Family::seq:
            out = reconcile_sequential(base, ct, cs_covariances(a.cs_kind, ctx), te_covariances(a.te_kind, ctx),
                                       a.temporal_first);
            break;
        case Approach::Family::ite: {
            IterativeOptions opt = ctx.iterative;
            opt.temporal_first = a.temporal_first;
            out = reconcile_iterative(base, ct, cs_covariances(a.cs_kind, ctx), te_covariances(a.te_kind, ctx), opt)
                      .forecasts;
            break;
        }
        case Approach::Family::ka:
            out = reconcile_ka(base, ct, te_covariances(a.te_kind, ctx), cs_covariances(a.cs_kind, ctx));
            break;
        case Approach::Family::ctbu: out = ct_bottom_up(bottom_high_frequency(base, ct), ct); break;
        case Approach::Family::pbu_te: out = partly_bottom_up_te(base, ct, te_covariances(a.te_kind, ctx)); break;
        case Approach::Family::pbu_cs: {
            const auto covs = cs_covariances(a.cs_kind, ctx);
            out = partly_bottom_up_cs(base, ct, covs.size() == 1 ? covs.front() : covs.back());
            break;
        }
        case Approach::Family::pers_bu:
            throw Error(ErrorCode::InvalidArgument, "pers_bu is computed from observations, not from base forecasts");
    }
    return a.sntz ? sntz(out, ct) : out;
}

}  // namespace ctrec
