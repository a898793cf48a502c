#include "nlop/nonlinearity.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace nlop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double signed_pow(double t, double g) {
    // |t|^g t
    if (g == 0.0) return t;
    return std::pow(std::abs(t), g) * t;
}

std::string g_name(GKind k) { return k == GKind::Identity ? "Identity" : "Power"; }

std::string f_name(FKind k) {
    switch (k) {
        case FKind::Constant: return "Constant";
        case FKind::Power: return "Power";
        case FKind::AffinePlusPower: return "AffinePlusPower";
        case FKind::LipschitzTable: return "LipschitzTable";
    }
    return "?";
}

double table_slope_max(const NonlinearitySpec& s) {
    double m = 0.0;
    for (std::size_t i = 1; i < s.table_t.size(); ++i)
        m = std::max(m, std::abs((s.table_f[i] - s.table_f[i - 1]) / (s.table_t[i] - s.table_t[i - 1])));
    return m;
}

}  // namespace

void validate(const NonlinearitySpec& s) {
    if (s.g_kind == GKind::Power && !(s.gamma >= 0.0 && std::isfinite(s.gamma)))
        throw ConfigError("nonlinearity.gamma must be >= 0");
    switch (s.f_kind) {
        case FKind::Constant: break;
        case FKind::Power:
            if (!(s.s > 0.0)) throw ConfigError("nonlinearity.s must be positive");
            break;
        case FKind::AffinePlusPower:
            if (!(s.s >= 0.0)) throw ConfigError("nonlinearity.s must be >= 0");
            if (!(s.clip_lo <= s.clip_hi)) throw ConfigError("nonlinearity.clip range is empty");
            break;
        case FKind::LipschitzTable: {
            if (s.table_t.size() < 2 || s.table_t.size() != s.table_f.size())
                throw ConfigError("nonlinearity.table needs matching t and f lists of length >= 2");
            for (std::size_t i = 1; i < s.table_t.size(); ++i)
                if (!(s.table_t[i] > s.table_t[i - 1]))
                    throw ConfigError("nonlinearity.table_t must be strictly increasing");
            if (s.lipschitz > 0.0 && table_slope_max(s) > s.lipschitz * (1.0 + 1e-12))
                throw ConfigError("nonlinearity.lipschitz is below the table's slope");
            break;
        }
    }
    if (s.g2prime_claim) {
        const double g = s.g_kind == GKind::Identity ? 0.0 : s.gamma;
        if (!(g < s.s)) throw ConfigError("condition (G'2) requires gamma < s");
        if (!(s.C1 > 0.0 && s.C2 > 0.0 && s.eps_g2 > 0.0))
            throw ConfigError("nonlinearity.C1, C2 and eps_g2 must be positive");
    }
}

NonlinearitySpec make_identity_g() { return NonlinearitySpec{}; }

NonlinearitySpec make_power_g(double gamma) {
    NonlinearitySpec s;
    s.g_kind = GKind::Power;
    s.gamma = gamma;
    validate(s);
    return s;
}

NonlinearitySpec with_constant_f(NonlinearitySpec s, double a) {
    s.f_kind = FKind::Constant;
    s.a = a;
    validate(s);
    return s;
}

NonlinearitySpec with_power_f(NonlinearitySpec s, double exponent, double scale) {
    s.f_kind = FKind::Power;
    s.s = exponent;
    s.scale = scale;
    validate(s);
    return s;
}

NonlinearitySpec with_affine_power_f(NonlinearitySpec s, double a, double b, double c,
                                     double exponent, double clip_lo, double clip_hi) {
    s.f_kind = FKind::AffinePlusPower;
    s.a = a;
    s.b = b;
    s.c = c;
    s.s = exponent;
    s.clip_lo = clip_lo;
    s.clip_hi = clip_hi;
    validate(s);
    return s;
}

NonlinearitySpec with_table_f(NonlinearitySpec s, std::vector<double> t, std::vector<double> f) {
    s.f_kind = FKind::LipschitzTable;
    s.table_t = std::move(t);
    s.table_f = std::move(f);
    validate(s);
    return s;
}

nlohmann::json to_json(const NonlinearitySpec& s) {
    nlohmann::json j;
    j["g_kind"] = g_name(s.g_kind);
    j["gamma"] = s.gamma;
    j["f_kind"] = f_name(s.f_kind);
    j["a"] = s.a;
    j["b"] = s.b;
    j["c"] = s.c;
    j["s"] = s.s;
    j["scale"] = s.scale;
    if (std::isfinite(s.clip_lo)) j["clip_lo"] = s.clip_lo;
    if (std::isfinite(s.clip_hi)) j["clip_hi"] = s.clip_hi;
    if (!s.table_t.empty()) {
        j["table_t"] = s.table_t;
        j["table_f"] = s.table_f;
    }
    j["lipschitz"] = s.lipschitz;
    j["C1"] = s.C1;
    j["C2"] = s.C2;
    j["eps_g2"] = s.eps_g2;
    j["g2prime_claim"] = s.g2prime_claim;
    return j;
}

NonlinearitySpec nonlinearity_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("nonlinearity must be an object");
    NonlinearitySpec s;
    try {
        const std::string g = j.value("g_kind", std::string("Identity"));
        if (g == "Identity") {
            s.g_kind = GKind::Identity;
        } else if (g == "Power" || g == "PowerG") {
            s.g_kind = GKind::Power;
        } else {
            throw ConfigError("nonlinearity.g_kind: unknown value '" + g + "'");
        }
        s.gamma = j.value("gamma", 0.0);
        const std::string f = j.value("f_kind", std::string("Constant"));
        if (f == "Constant") {
            s.f_kind = FKind::Constant;
        } else if (f == "Power" || f == "PowerF") {
            s.f_kind = FKind::Power;
        } else if (f == "AffinePlusPower") {
            s.f_kind = FKind::AffinePlusPower;
        } else if (f == "LipschitzTable") {
            s.f_kind = FKind::LipschitzTable;
        } else {
            throw ConfigError("nonlinearity.f_kind: unknown value '" + f + "'");
        }
        s.a = j.value("a", 0.0);
        s.b = j.value("b", 0.0);
        s.c = j.value("c", 0.0);
        s.s = j.value("s", 1.0);
        s.scale = j.value("scale", 1.0);
        s.clip_lo = j.value("clip_lo", -kInf);
        s.clip_hi = j.value("clip_hi", kInf);
        s.table_t = j.value("table_t", std::vector<double>{});
        s.table_f = j.value("table_f", std::vector<double>{});
        s.lipschitz = j.value("lipschitz", 0.0);
        s.C1 = j.value("C1", 0.5);
        s.C2 = j.value("C2", 10.0);
        s.eps_g2 = j.value("eps_g2", 1.0);
        s.g2prime_claim = j.value("g2prime_claim", false);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("nonlinearity: malformed value: ") + e.what());
    }
    validate(s);
    return s;
}

bool g_is_linear(const NonlinearitySpec& s) {
    return s.g_kind == GKind::Identity || s.gamma == 0.0;
}

double eval_G(const NonlinearitySpec& s, double t) {
    if (g_is_linear(s)) return t;
    return signed_pow(t, s.gamma);
}

double eval_G_prime(const NonlinearitySpec& s, double t) {
    if (g_is_linear(s)) return 1.0;
    if (t == 0.0) return 0.0;
    return (s.gamma + 1.0) * std::pow(std::abs(t), s.gamma);
}

double eval_f(const NonlinearitySpec& s, double t) {
    switch (s.f_kind) {
        case FKind::Constant: return s.a;
        case FKind::Power: return s.scale * signed_pow(t, s.s);
        case FKind::AffinePlusPower: {
            const double T = std::clamp(t, s.clip_lo, s.clip_hi);
            return s.a + s.b * T + s.c * signed_pow(T, s.s);
        }
        case FKind::LipschitzTable: {
            const auto& x = s.table_t;
            const auto& y = s.table_f;
            if (t <= x.front()) return y.front();
            if (t >= x.back()) return y.back();
            const auto it = std::upper_bound(x.begin(), x.end(), t);
            const std::size_t i = static_cast<std::size_t>(it - x.begin());
            const double w = (t - x[i - 1]) / (x[i] - x[i - 1]);
            return (1.0 - w) * y[i - 1] + w * y[i];
        }
    }
    return 0.0;
}

double eval_f_prime(const NonlinearitySpec& s, double t) {
    switch (s.f_kind) {
        case FKind::Constant: return 0.0;
        case FKind::Power:
            if (t == 0.0) return 0.0;
            return s.scale * (s.s + 1.0) * std::pow(std::abs(t), s.s);
        case FKind::AffinePlusPower: {
            if (t < s.clip_lo || t >= s.clip_hi) return 0.0;
            const double p = t == 0.0 ? (s.s == 0.0 ? 1.0 : 0.0) : std::pow(std::abs(t), s.s);
            return s.b + s.c * (s.s + 1.0) * p;
        }
        case FKind::LipschitzTable: {
            const auto& x = s.table_t;
            const auto& y = s.table_f;
            if (t < x.front() || t >= x.back()) return 0.0;
            const auto it = std::upper_bound(x.begin(), x.end(), t);
            const std::size_t i = static_cast<std::size_t>(it - x.begin());
            return (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
        }
    }
    return 0.0;
}

double f_lipschitz(const NonlinearitySpec& s) {
    switch (s.f_kind) {
        case FKind::Constant: return 0.0;
        case FKind::Power: return kInf;
        case FKind::AffinePlusPower: {
            const double m = std::max(std::abs(s.clip_lo), std::abs(s.clip_hi));
            if (!std::isfinite(m)) return s.c == 0.0 ? std::abs(s.b) : kInf;
            return std::abs(s.b) + std::abs(s.c) * (s.s + 1.0) * std::pow(m, s.s);
        }
        case FKind::LipschitzTable:
            return s.lipschitz > 0.0 ? s.lipschitz : table_slope_max(s);
    }
    return kInf;
}

ConditionReport check_G1(const RealFn& G, int sample_count, std::uint64_t seed) {
    ConditionReport rep;
    rep.condition = Condition::G1;
    std::vector<double> ts = {1.0, 0.5, 2.0, 1e-3, 10.0};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> lm(-4.0, 1.0);
    for (int k = 0; k < sample_count; ++k) ts.push_back(std::pow(10.0, lm(rng)));
    rep.samples = static_cast<int>(ts.size());
    if (G(0.0) != 0.0) {
        rep.witness = Witness{{0.0, 0.0, 0.0}, G(0.0)};
        rep.note = "G(0) != 0";
        return rep;
    }
    double worst = 0.0;
    for (double t : ts) {
        const double gp = G(t), gm = G(-t);
        const double odd_err = std::abs(gp + gm);
        if (odd_err > 1e-12 * std::max(1.0, std::abs(gp))) {
            rep.witness = Witness{{t, 0.0, 0.0}, odd_err};
            rep.estimate = odd_err;
            rep.note = "G is not odd";
            return rep;
        }
        worst = std::max(worst, odd_err);
    }
    std::uniform_real_distribution<double> ud(-10.0, 10.0);
    for (int k = 0; k < sample_count; ++k) {
        double t1 = ud(rng), t2 = ud(rng);
        if (t1 == t2) continue;
        if (t1 > t2) std::swap(t1, t2);
        if (!(G(t1) < G(t2))) {
            rep.witness = Witness{{t1, t2, 0.0}, G(t2) - G(t1)};
            rep.note = "G is not strictly increasing";
            return rep;
        }
    }
    rep.holds = true;
    rep.estimate = worst;
    return rep;
}

ConditionReport check_G1(const NonlinearitySpec& spec, int sample_count, std::uint64_t seed) {
    return check_G1([&](double t) { return eval_G(spec, t); }, sample_count, seed);
}

ConditionReport check_G2(const NonlinearitySpec& spec, double t_min) {
    if (!(t_min > 0.0 && t_min < 1.0)) throw ConfigError("t_min must lie in (0,1)");
    ConditionReport rep;
    rep.condition = Condition::G2;
    std::vector<double> ts, ratios;
    for (double t = t_min; t <= 1.0; t *= 2.0) {
        const double gp = eval_G_prime(spec, t);
        const double fp = eval_f_prime(spec, t);
        if (gp == 0.0) {
            rep.witness = Witness{{t, 0.0, 0.0}, kInf};
            rep.estimate = kInf;
            rep.note = "G'(t) = 0 at a sample";
            return rep;
        }
        ts.push_back(t);
        ratios.push_back(fp / gp);
    }
    rep.samples = static_cast<int>(ts.size());
    // Running max and log-log slope over the smallest decade.
    double run_max = 0.0;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < ts.size() && ts[i] <= 10.0 * t_min; ++i) {
        run_max = std::max(run_max, std::abs(ratios[i]));
        if (ratios[i] != 0.0) {
            lx.push_back(std::log(ts[i]));
            ly.push_back(std::log(std::abs(ratios[i])));
        }
    }
    rep.estimate = run_max;
    double slope = 0.0;
    if (lx.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= lx.size();
        my /= ly.size();
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        slope = sxy / sxx;
    }
    rep.fitted["loglog_slope"] = slope;
    rep.holds = std::isfinite(run_max) && slope >= kG2SlopeFloor;
    if (!rep.holds) {
        rep.witness = Witness{{ts.front(), 0.0, 0.0}, ratios.front()};
        rep.note = "f'/G' grows as t -> 0+";
    }
    return rep;
}

ConditionReport check_G2prime(const NonlinearitySpec& spec, int sample_count,
                              std::uint64_t seed) {
    ConditionReport rep;
    rep.condition = Condition::G2prime;
    const double gamma = g_is_linear(spec) ? 0.0 : spec.gamma;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(0.0, spec.eps_g2);
    double c1_fit = kInf, c2_fit = 0.0;
    int used = 0, skipped = 0;
    std::optional<Witness> first_bad;
    for (int k = 0; k < sample_count; ++k) {
        double t1 = ud(rng), t2 = ud(rng);
        if (t1 == t2 || t1 == 0.0 || t2 == 0.0) {
            ++skipped;
            continue;
        }
        if (t1 > t2) std::swap(t1, t2);
        ++used;
        const double gdd = (eval_G(spec, t1) - eval_G(spec, t2)) / (t1 - t2);
        const double fdd = (eval_f(spec, t1) - eval_f(spec, t2)) / (t1 - t2);
        const double r1 = gdd / std::pow(t2, gamma);
        const double r2 = fdd / std::pow(t2, spec.s);
        c1_fit = std::min(c1_fit, r1);
        c2_fit = std::max(c2_fit, r2);
        if (!first_bad && (r1 < spec.C1 || r2 > spec.C2)) first_bad = Witness{{t1, t2, 0.0}, r1 < spec.C1 ? r1 : r2};
    }
    rep.samples = used;
    rep.fitted["C1_fit"] = c1_fit;
    rep.fitted["C2_fit"] = c2_fit;
    rep.fitted["skipped_pairs"] = skipped;
    rep.estimate = c1_fit;
    rep.holds = used > 0 && !first_bad;
    rep.witness = first_bad;
    if (first_bad) rep.note = "divided-difference bound violated";
    return rep;
}

MvtResult check_mvt_property(const NonlinearitySpec& spec, double t1, double t2) {
    if (t1 == t2) throw ConfigError("check_mvt_property requires t1 != t2");
    MvtResult r;
    if (g_is_linear(spec)) return r;  // G' constant: property vacuous
    const double g = spec.gamma;
    const double slope = (eval_G(spec, t2) - eval_G(spec, t1)) / (t2 - t1);
    r.applicable = true;
    r.xi = std::pow(slope / (g + 1.0), 1.0 / g);
    r.c0_ratio = r.xi / std::max(std::abs(t1), std::abs(t2));
    return r;
}

double sample_mvt_min_ratio(double gamma, int pairs, double box, std::uint64_t seed) {
    const NonlinearitySpec spec = make_power_g(gamma);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(-box, box);
    double m = kInf;
    for (int k = 0; k < pairs; ++k) {
        const double t1 = ud(rng), t2 = ud(rng);
        if (t1 == t2) continue;
        const MvtResult r = check_mvt_property(spec, t1, t2);
        if (r.applicable) m = std::min(m, r.c0_ratio);
    }
    return m;
}

}  // namespace nlop
