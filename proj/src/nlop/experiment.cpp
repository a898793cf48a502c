#include "nlop/experiment.hpp"

#include "nlop/alpha_limit.hpp"
#include "nlop/field.hpp"
#include "nlop/moving_planes.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

namespace fs = std::filesystem;

namespace nlop {

namespace {

// ---------- config helpers ----------

template <class T>
T get_or(const nlohmann::json& j, const std::string& key, const std::string& path, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(path + "." + key + ": malformed value");
    }
}

template <class T>
T get_req(const nlohmann::json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) throw ConfigError(path + "." + key + " is required");
    return get_or<T>(j, key, path, T{});
}

Vec vec_from(const std::vector<double>& v, int dim, const std::string& key) {
    if (static_cast<int>(v.size()) != dim) throw ConfigError(key + " must have dim entries");
    Vec out{};
    for (int i = 0; i < dim; ++i) out[i] = v[i];
    return out;
}

Vec vec_or_zero(const nlohmann::json& j, const std::string& key, const std::string& path, int dim) {
    if (!j.contains(key)) return Vec{};
    return vec_from(get_or<std::vector<double>>(j, key, path, {}), dim, path + "." + key);
}

template <class F>
auto wrap_section(const std::string& section, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind(section, 0) == 0) throw;
        throw ConfigError(section + ": " + msg);
    }
}

Field field_from_json(const nlohmann::json& j, int dim, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + " must be an object");
    const std::string type = get_req<std::string>(j, "type", path);
    if (type == "gaussian")
        return gaussian_field(dim, vec_or_zero(j, "center", path, dim), get_or(j, "amplitude", path, 1.0),
                              get_or(j, "width", path, 1.0));
    if (type == "bump")
        return bump_field(dim, vec_or_zero(j, "center", path, dim), get_req<double>(j, "rho", path),
                          get_or(j, "amplitude", path, 1.0));
    if (type == "cutoff_gaussian")
        return cutoff_gaussian_field(dim, vec_or_zero(j, "center", path, dim), get_req<double>(j, "rho", path));
    if (type == "constant") return constant_field(dim, get_or(j, "value", path, 0.0));
    if (type == "tanh") return tanh_field(dim);
    if (type == "sin") return sin_field(dim);
    if (type == "odd_decay") return odd_decay_field(dim);
    if (type == "combination") {
        if (!j.contains("terms") || !j["terms"].is_array() || j["terms"].empty())
            throw ConfigError(path + ".terms must be a nonempty array");
        std::optional<Field> acc;
        for (std::size_t i = 0; i < j["terms"].size(); ++i) {
            const auto& t = j["terms"][i];
            const std::string tp = path + ".terms[" + std::to_string(i) + "]";
            const double w = get_req<double>(t, "weight", tp);
            if (!t.contains("field")) throw ConfigError(tp + ".field is required");
            const Field f = field_from_json(t["field"], dim, tp + ".field");
            acc = acc ? linear_combination(1.0, *acc, w, f) : linear_combination(w, f, 0.0, f);
        }
        return *acc;
    }
    throw ConfigError(path + ".type: unknown field type '" + type + "'");
}

// ---------- output helpers ----------

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Csv {
public:
    explicit Csv(const std::vector<std::string>& header) {
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << "\n";
    }
    void row(const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << fmt17(v[i]);
        out_ << "\n";
    }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

struct Artifacts {
    fs::path dir;
    std::vector<std::string> files;

    void write(const std::string& name, const std::string& content) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw Error("cannot write " + (dir / name).string());
        out << content;
        record(name);
    }
    void write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }
    void record(const std::string& name) {
        if (std::find(files.begin(), files.end(), name) == files.end()) files.push_back(name);
    }
};

std::vector<std::string> coord_headers(int dim, const std::string& prefix = "x") {
    std::vector<std::string> h;
    for (int i = 0; i < dim; ++i) h.push_back(prefix + std::to_string(i + 1) + "[length]");
    return h;
}

// ---------- tasks ----------

struct TaskResult {
    bool passed = false;
    nlohmann::json summary = nlohmann::json::object();
};

nlohmann::json cond_json(const ConditionReport& r) { return to_json(r); }

TaskResult task_check_kernel(const ExperimentConfig& c, Artifacts& out) {
    const KernelSpec& k = c.kernel;
    const auto& p = c.params;
    const int samples = get_or(p, "samples", "params", 2000);
    const int even_samples = get_or(p, "even_samples", "params", 10000);
    // Constructed non-zoo fixture: base * (2 + sin(y_1)), or base * (1 + skew * y_1/|y|).
    const bool test_kernel = p.contains("test_kernel");
    const nlohmann::json tk = test_kernel ? p["test_kernel"] : nlohmann::json::object();
    const std::string modulation = get_or<std::string>(tk, "modulation", "params.test_kernel", "sin");
    const double skew = get_or(tk, "skew", "params.test_kernel", 0.0);
    if (modulation != "sin" && modulation != "skew")
        throw ConfigError("params.test_kernel.modulation must be sin or skew");
    KernelFn K = [k, test_kernel, modulation, skew](const Vec& y) {
        const double base = eval_kernel(k, y);
        if (!test_kernel) return base;
        if (modulation == "sin") return base * (2.0 + std::sin(y[0]));
        return base * (1.0 + skew * y[0] / norm(y, k.dim));
    };

    std::map<std::string, bool> holds;
    nlohmann::json conds = nlohmann::json::array();

    // Evenness at random points, compared exactly.
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> ur(-3.0, 1.0);
    int odd_count = 0;
    double worst = 0.0;
    for (int s = 0; s < even_samples; ++s) {
        Vec y{};
        double r = 0.0;
        for (int i = 0; i < k.dim; ++i) {
            y[i] = nd(rng);
            r += y[i] * y[i];
        }
        const double scale = std::pow(10.0, ur(rng)) / std::sqrt(r);
        Vec my{};
        for (int i = 0; i < k.dim; ++i) {
            y[i] *= scale;
            my[i] = -y[i];
        }
        const double a = K(y), b = K(my);
        if (a != b) {
            ++odd_count;
            worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
        }
    }
    holds["even"] = odd_count == 0;
    conds.push_back({{"condition", "even"}, {"holds", odd_count == 0}, {"samples", even_samples},
                     {"violations", odd_count}, {"max_rel_asymmetry", worst}});

    if (!test_kernel) {
        const auto lk = check_levy_khintchine(k);
        holds["LevyKhintchine"] = lk.holds;
        conds.push_back(cond_json(lk));
        const auto k1 = check_K1(k, samples, c.seed);
        holds["K1"] = k1.holds;
        conds.push_back(cond_json(k1));
        bool k2 = true;
        for (int axis = 1; axis <= k.dim; ++axis) {
            const auto r = check_monotone_K2(k, axis, samples, c.seed);
            k2 = k2 && r.holds;
            auto j = cond_json(r);
            j["axis"] = axis;
            conds.push_back(j);
        }
        holds["K2"] = k2;
    } else {
        const auto k1 = check_K1(K, k.dim, k.alpha, samples, c.seed);
        holds["K1"] = k1.holds;
        conds.push_back(cond_json(k1));
        bool k2 = true;
        for (int axis = 1; axis <= k.dim; ++axis) {
            const auto r = check_monotone_K2(K, k.dim, axis, samples, c.seed);
            k2 = k2 && r.holds;
            auto j = cond_json(r);
            j["axis"] = axis;
            conds.push_back(j);
        }
        holds["K2"] = k2;
    }

    nlohmann::json report = {{"kernel", to_json(k)}, {"conditions", conds}};
    if (test_kernel) report["test_kernel"] = tk;

    if (c.nonlinearity) {
        const NonlinearitySpec& g = *c.nonlinearity;
        nlohmann::json gconds = nlohmann::json::array();
        const auto g1 = check_G1(g, samples, c.seed);
        holds["G1"] = g1.holds;
        gconds.push_back(cond_json(g1));
        const auto g2 = check_G2(g, get_or(p, "g2_t_min", "params", 1e-6));
        holds["G2"] = g2.holds;
        gconds.push_back(cond_json(g2));
        if (g.g2prime_claim) {
            const auto g2p = check_G2prime(g, samples, c.seed);
            holds["G2prime"] = g2p.holds;
            gconds.push_back(cond_json(g2p));
        }
        report["nonlinearity"] = to_json(g);
        report["nonlinearity_conditions"] = gconds;
    }
    if (p.contains("mvt")) {
        const auto& m = p["mvt"];
        const int pairs = get_or(m, "pairs", "params.mvt", 10000);
        const double box = get_or(m, "box", "params.mvt", 4.0);
        const double floor = get_or(m, "floor", "params.mvt", 0.2);
        nlohmann::json rows = nlohmann::json::array();
        bool ok = true;
        for (double gamma : get_req<std::vector<double>>(m, "gammas", "params.mvt")) {
            const double r = sample_mvt_min_ratio(gamma, pairs, box, c.seed);
            ok = ok && r > floor;
            rows.push_back({{"gamma", gamma}, {"min_c0_ratio", r}, {"pairs", pairs}});
        }
        holds["mvt_c0"] = ok;
        report["mvt"] = {{"rows", rows}, {"floor", floor}, {"holds", ok}};
    }

    // Verdict: every expected value matches; evenness and Levy-Khintchine
    // are expected by default.
    std::map<std::string, bool> expect = {{"even", true}};
    if (!test_kernel) expect["LevyKhintchine"] = true;
    if (p.contains("expect")) {
        if (!p["expect"].is_object()) throw ConfigError("params.expect must be an object");
        for (auto it = p["expect"].begin(); it != p["expect"].end(); ++it) {
            if (!it.value().is_boolean()) throw ConfigError("params.expect." + it.key() + " must be a boolean");
            expect[it.key()] = it.value().get<bool>();
        }
    }
    bool passed = true;
    nlohmann::json mism = nlohmann::json::array();
    for (const auto& [name, want] : expect) {
        auto it = holds.find(name);
        if (it == holds.end()) throw ConfigError("params.expect." + name + ": condition not checked by this config");
        if (it->second != want) {
            passed = false;
            mism.push_back(name);
        }
    }
    report["holds"] = holds;
    report["expect"] = expect;
    report["mismatches"] = mism;
    report["passed"] = passed;
    out.write_json("kernel_report.json", report);
    return {passed, {{"holds", holds}, {"mismatches", mism}}};
}

TaskResult task_eval_operator(const ExperimentConfig& c, Artifacts& out) {
    const auto& p = c.params;
    const int n = c.kernel.dim;
    if (!p.contains("field")) throw ConfigError("params.field is required");
    const Field u = field_from_json(p["field"], n, "params.field");
    std::vector<Vec> pts;
    if (p.contains("points")) {
        for (const auto& v : get_or<std::vector<std::vector<double>>>(p, "points", "params", {}))
            pts.push_back(vec_from(v, n, "params.points[]"));
    }
    if (p.contains("random_points")) {
        const auto& rp = p["random_points"];
        const int count = get_req<int>(rp, "count", "params.random_points");
        const double radius = get_or(rp, "radius", "params.random_points", 1.0);
        std::mt19937_64 rng(c.seed);
        std::uniform_real_distribution<double> ud(-radius, radius);
        for (int i = 0; i < count; ++i) {
            Vec x{};
            for (int d = 0; d < n; ++d) x[d] = ud(rng);
            pts.push_back(x);
        }
    }
    if (pts.empty()) throw ConfigError("params.points or params.random_points is required");
    const bool nonlinear = c.nonlinearity && !g_is_linear(*c.nonlinearity);
    const std::string sign = get_or<std::string>(p.value("expect", nlohmann::json::object()), "sign",
                                                 "params.expect", "");
    if (!sign.empty() && sign != "negative" && sign != "positive")
        throw ConfigError("params.expect.sign must be negative or positive");

    auto header = coord_headers(n);
    for (const char* h : {"value[u/length^alpha]", "err_estimate[u/length^alpha]",
                          "tail_bound[u/length^alpha]", "inner_contribution[u/length^alpha]"})
        header.push_back(h);
    Csv csv(header);
    bool ok = true;
    int sign_fail = 0;
    for (const Vec& x : pts) {
        const EvalResult r =
            nonlinear ? eval_FGK(u, *c.nonlinearity, c.kernel, x, c.quadrature) : eval_LK(u, c.kernel, x, c.quadrature);
        std::vector<double> row(x.begin(), x.begin() + n);
        row.insert(row.end(), {r.value, r.err_estimate, r.tail_bound, r.inner_contribution});
        csv.row(row);
        ok = ok && r.converged;
        if (sign == "negative" && !(r.value < -r.err_estimate)) ++sign_fail;
        if (sign == "positive" && !(r.value > r.err_estimate)) ++sign_fail;
    }
    out.write("eval.csv", csv.str());
    return {ok && sign_fail == 0,
            {{"points", pts.size()}, {"operator", nonlinear ? "F_GK" : "L_K"}, {"sign_failures", sign_fail}}};
}

struct SolveOut {
    SolveResult res;
    bool converged = false;
    std::string error;
};

SolveOut run_solve(const ExperimentConfig& c, Artifacts& out) {
    if (!c.domain) throw ConfigError("domain is required");
    if (!c.nonlinearity) throw ConfigError("nonlinearity is required");
    if (c.domain->dim != c.kernel.dim) throw ConfigError("domain.dim must equal kernel.dim");
    const auto& p = c.params;
    const double tol = get_or(p, "tol", "params", 1e-8);
    const int max_iter = get_or(p, "max_iter", "params", 200);
    SolveOut so;
    try {
        so.res = g_is_linear(*c.nonlinearity)
                     ? solve_dirichlet(c.kernel, *c.nonlinearity, *c.domain, c.quadrature, tol, max_iter)
                     : solve_dirichlet_nonlinear(*c.nonlinearity, c.kernel, *c.domain, c.quadrature, tol, max_iter);
        so.converged = so.res.report.converged;
    } catch (const SolveError& e) {
        so.res = e.partial;
        so.error = e.what();
    }
    write_grid((out.dir / "solution.grid").string(), so.res.u.grid_data());
    out.record("solution.grid");
    Csv csv({"iteration[1]", "residual_sup[u/length^alpha]"});
    for (std::size_t i = 0; i < so.res.report.residual_history.size(); ++i)
        csv.row({static_cast<double>(i), so.res.report.residual_history[i]});
    out.write("solve_report.csv", csv.str());
    return so;
}

nlohmann::json solve_summary(const SolveOut& so) {
    nlohmann::json j = to_json(so.res.report);
    if (so.res.nodal.size() > 0) j["u_max"] = so.res.nodal.maxCoeff();
    return j;
}

TaskResult task_solve_ball(const ExperimentConfig& c, Artifacts& out, bool& partial) {
    SolveOut so = run_solve(c, out);
    if (!so.error.empty()) {
        partial = true;
        throw ConvergenceError(so.error);
    }
    const double res_max = get_or(c.params, "residual_max", "params", 1e-6);
    const bool ok = so.converged && so.res.report.final_residual_sup <= res_max;
    return {ok, solve_summary(so)};
}

TaskResult task_verify_symmetry(const ExperimentConfig& c, Artifacts& out, bool& partial) {
    const auto& p = c.params;
    const int n = c.kernel.dim;
    TaskResult tr;
    tr.passed = true;
    std::optional<Field> grid_u;
    double sweep_tol = get_or(p, "tolerance", "params", 1e-8);
    double radial_tol = sweep_tol;
    Vec center = vec_or_zero(p, "center", "params", n);
    bool radial = false;
    if (c.domain) {
        SolveOut so = run_solve(c, out);
        if (!so.error.empty()) {
            partial = true;
            throw ConvergenceError(so.error);
        }
        tr.summary["solve"] = solve_summary(so);
        tr.passed = tr.passed && so.converged;
        grid_u = so.res.u;
        const double solve_tol = get_or(p, "tol", "params", 1e-8);
        // Lattice values carry the solve residual amplified by at most 1/lambda_min.
        sweep_tol = get_or(p, "tolerance", "params", 5.0 * solve_tol);
        radial_tol = 5.0 * solve_tol;
        radial = get_or(p, "radial", "params", true);
    } else if (p.contains("field")) {
        const Field u = field_from_json(p["field"], n, "params.field");
        const auto& lat = p.value("lattice", nlohmann::json::object());
        Vec lo{};
        for (int i = 0; i < n; ++i) lo[i] = -3.0;
        if (lat.contains("lo")) lo = vec_from(get_or<std::vector<double>>(lat, "lo", "params.lattice", {}), n, "params.lattice.lo");
        const double h = get_or(lat, "h", "params.lattice", 1.0 / 16.0);
        const int count = get_or(lat, "count", "params.lattice", 97);
        if (!(h > 0.0) || count < 3) throw ConfigError("params.lattice: h must be positive and count >= 3");
        std::array<int, 3> counts{1, 1, 1};
        for (int i = 0; i < n; ++i) counts[i] = count;
        grid_u = sample_to_grid(u, lo, h, counts, 0.0);
        radial = get_or(p, "radial", "params", false);
    }

    if (grid_u) {
        const GridData& g = grid_u->grid_data();
        std::vector<double> expect_center(n, 0.0);
        if (p.contains("expect_center"))
            expect_center = get_or<std::vector<double>>(p, "expect_center", "params", {});
        if (static_cast<int>(expect_center.size()) != n) throw ConfigError("params.expect_center must have dim entries");
        const bool need_sym = get_or(p, "require_symmetric", "params", true);
        auto header = std::vector<std::string>{"axis[1]", "lambda[length]", "min_w[u]", "sigma_count[1]"};
        for (auto& h : coord_headers(n, "argmin_x")) header.push_back(h);
        Csv csv(header);
        nlohmann::json axes = nlohmann::json::array();
        for (int axis = 1; axis <= n; ++axis) {
            const MovingPlaneReport r = sweep_lambda(*grid_u, axis, sweep_tol);
            for (std::size_t i = 0; i < r.lambda_grid.size(); ++i) {
                std::vector<double> row = {static_cast<double>(axis), r.lambda_grid[i], r.min_w[i],
                                           static_cast<double>(r.sigma_count[i])};
                for (int d = 0; d < n; ++d) row.push_back(r.argmin[i][d]);
                csv.row(row);
            }
            const bool located = r.any_admissible && std::abs(r.lambda_o - expect_center[axis - 1]) <= g.h * (1.0 + 1e-9);
            const bool ok = located && (!need_sym || r.symmetric_verdict);
            tr.passed = tr.passed && ok;
            auto j = to_json(r);
            j.erase("lambda_grid");
            j.erase("min_w");
            j.erase("argmin");
            j.erase("sigma_count");
            j["expected_center"] = expect_center[axis - 1];
            j["located"] = located;
            axes.push_back(j);
        }
        out.write("moving_plane.csv", csv.str());
        tr.summary["sweeps"] = axes;
        if (radial) {
            const RadialSymmetryReport rr = verify_radial_symmetry(*grid_u, center, radial_tol);
            const double allowed = radial_tol + rr.interpolation_allowance;
            const bool ok = rr.max_deviation <= allowed && rr.monotone_violations == 0;
            tr.passed = tr.passed && ok;
            auto j = to_json(rr);
            j["allowed_deviation"] = allowed;
            j["holds"] = ok;
            tr.summary["radial"] = j;
        }
    }

    if (p.contains("certificates")) {
        if (!p["certificates"].is_array()) throw ConfigError("params.certificates must be an array");
        nlohmann::json certs = nlohmann::json::array();
        int confirmed = 0;
        for (std::size_t i = 0; i < p["certificates"].size(); ++i) {
            const auto& cj = p["certificates"][i];
            const std::string path = "params.certificates[" + std::to_string(i) + "]";
            if (!cj.contains("field")) throw ConfigError(path + ".field is required");
            const Field u = field_from_json(cj["field"], n, path + ".field");
            const std::string kind = get_or<std::string>(cj, "kind", path, "antisym");
            MinimumCertificate mc;
            if (kind == "antisym") {
                PlaneReflection plane{get_or(cj, "axis", path, 1), get_or(cj, "lambda", path, 0.0)};
                if (plane.axis < 1 || plane.axis > n) throw ConfigError(path + ".axis must lie in [1, dim]");
                mc = check_antisym_max_principle(u, c.kernel, plane, c.quadrature);
            } else if (kind == "simple") {
                if (!c.nonlinearity) throw ConfigError("nonlinearity is required for simple certificates");
                const Vec xm = vec_from(get_req<std::vector<double>>(cj, "x_min", path), n, path + ".x_min");
                mc = check_simple_max_principle(u, *c.nonlinearity, c.kernel, xm, c.quadrature);
            } else {
                throw ConfigError(path + ".kind must be antisym or simple");
            }
            auto j = to_json(mc);
            j["kind"] = kind;
            certs.push_back(j);
            if (mc.status == CertificateStatus::Confirmed) ++confirmed;
        }
        out.write_json("certificates.json", certs);
        const bool ok = confirmed == static_cast<int>(certs.size());
        tr.passed = tr.passed && ok;
        tr.summary["certificates"] = {{"total", certs.size()}, {"confirmed", confirmed}};
    }
    if (!grid_u && !p.contains("certificates"))
        throw ConfigError("VerifySymmetry needs domain, params.field or params.certificates");
    return tr;
}

TaskResult task_sweep_alpha(const ExperimentConfig& c, Artifacts& out) {
    const auto& p = c.params;
    const int n = c.kernel.dim;
    FamilySpec fam;
    fam.kind = alpha_family_from_string(get_or<std::string>(p, "family", "params", "ExponentialScaled"));
    fam.p_norm = get_or(p, "p_norm", "params", 2.0);
    fam.lambda_diag = get_or<std::vector<double>>(p, "lambda_diag", "params", {});
    const std::vector<double> alphas = get_or(p, "alpha_list", "params", kDefaultAlphas);
    const Vec x = vec_or_zero(p, "x", "params", n);
    const Field u = p.contains("field") ? field_from_json(p["field"], n, "params.field") : gaussian_field(n);
    const double tol = get_or(p, "tolerance", "params", 0.02);
    if (fam.kind == AlphaFamily::ExponentialScaled) {
        const auto cal = calibrate_omega_n(n, (out.dir / "omega_cache.json").string());
        fam.omega = cal.omega;
        if (fs::exists(out.dir / "omega_cache.json")) out.record("omega_cache.json");
    }
    const AlphaSweepReport r = sweep_alpha(u, fam, x, alphas, c.quadrature);
    Csv csv({"alpha[1]", "value[u/length^2]", "err_estimate[u/length^2]", "eps_inner[length]",
             "running_extrapolation[u/length^2]"});
    for (std::size_t i = 0; i < r.alpha_list.size(); ++i)
        csv.row({r.alpha_list[i], r.values[i], r.errors[i], r.eps_used[i], r.running[i]});
    out.write("alpha_sweep.csv", csv.str());
    // Zero reference: absolute tolerance on the limit.
    bool ok = r.reference != 0.0 ? r.rel_error <= tol : std::abs(r.extrapolated_limit) <= tol;
    nlohmann::json s = to_json(r);
    s["tolerance"] = tol;
    if (fam.kind == AlphaFamily::Anisotropic) {
        const double cnp = anisotropic_constant(n, fam.p_norm);
        const Bracket b = anisotropic_bracket(n, fam.p_norm);
        const bool in = cnp >= b.lo * (1.0 - 1e-9) && cnp <= b.hi * (1.0 + 1e-9);
        s["C_np"] = cnp;
        s["bracket"] = {b.lo, b.hi};
        s["in_bracket"] = in;
        ok = ok && in;
    }
    return {ok, s};
}

TaskResult bounds_result(const ScalingReport& r, const std::string& param_name, Artifacts& out) {
    Csv csv({param_name, "integral[1/length^alpha]", "reference[1/length^alpha]"});
    for (const auto& row : r.rows) csv.row({row.param, row.integral, row.reference});
    out.write("bounds.csv", csv.str());
    return {r.holds, to_json(r)};
}

PlaneReflection plane_from(const nlohmann::json& p, int n) {
    PlaneReflection plane{get_or(p, "axis", "params", 1), get_or(p, "lambda", "params", 0.0)};
    if (plane.axis < 1 || plane.axis > n) throw ConfigError("params.axis must lie in [1, dim]");
    return plane;
}

TaskResult task_narrow(const ExperimentConfig& c, Artifacts& out) {
    const auto& p = c.params;
    const auto deltas = get_or(p, "deltas", "params", kNarrowDeltas);
    const ScalingReport r = narrow_region_bound(c.kernel, plane_from(p, c.kernel.dim), deltas);
    TaskResult tr = bounds_result(r, "delta[length]", out);
    // Optional two-sided gate |slope + alpha| <= slope_tolerance * alpha.
    if (p.contains("slope_tolerance")) {
        const double st = get_or(p, "slope_tolerance", "params", 0.1);
        const bool two = std::abs(r.slope + c.kernel.alpha) <= st * c.kernel.alpha;
        tr.summary["two_sided"] = two;
        tr.passed = tr.passed && two;
    }
    return tr;
}

TaskResult task_decay(const ExperimentConfig& c, Artifacts& out) {
    const auto& p = c.params;
    const auto radii = get_or(p, "radii", "params", std::vector<double>{2.0, 4.0, 8.0, 16.0, 32.0});
    const ScalingReport r = decay_at_infinity_bound(c.kernel, plane_from(p, c.kernel.dim), radii);
    return bounds_result(r, "radius[length]", out);
}

}  // namespace

// ---------- public ----------

std::string to_string(Task t) {
    switch (t) {
    case Task::CheckKernel: return "CheckKernel";
    case Task::EvalOperator: return "EvalOperator";
    case Task::SolveBall: return "SolveBall";
    case Task::VerifySymmetry: return "VerifySymmetry";
    case Task::SweepAlpha: return "SweepAlpha";
    case Task::NarrowRegion: return "NarrowRegion";
    case Task::DecayInfinity: return "DecayInfinity";
    }
    return "unknown";
}

Task task_from_string(const std::string& s) {
    for (Task t : {Task::CheckKernel, Task::EvalOperator, Task::SolveBall, Task::VerifySymmetry, Task::SweepAlpha,
                   Task::NarrowRegion, Task::DecayInfinity})
        if (to_string(t) == s) return t;
    throw ConfigError("task: unknown task '" + s + "'");
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be an object");
    ExperimentConfig c;
    c.task = task_from_string(get_req<std::string>(j, "task", "config"));
    c.label = get_or<std::string>(j, "label", "config", to_string(c.task));
    if (!j.contains("kernel")) throw ConfigError("kernel is required");
    c.kernel = wrap_section("kernel", [&] { return kernel_from_json(j["kernel"]); });
    if (j.contains("nonlinearity"))
        c.nonlinearity = wrap_section("nonlinearity", [&] { return nonlinearity_from_json(j["nonlinearity"]); });
    if (j.contains("domain")) c.domain = wrap_section("domain", [&] { return domain_from_json(j["domain"]); });
    if (j.contains("quadrature"))
        c.quadrature = wrap_section("quadrature", [&] { return quadrature_from_json(j["quadrature"]); });
    c.output_dir = get_or<std::string>(j, "output_dir", "config", "out");
    c.seed = get_or<std::uint64_t>(j, "seed", "config", 1);
    if (j.contains("params")) {
        if (!j["params"].is_object()) throw ConfigError("params must be an object");
        c.params = j["params"];
    }
    return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j = {{"task", to_string(c.task)},
                        {"label", c.label},
                        {"kernel", to_json(c.kernel)},
                        {"quadrature", to_json(c.quadrature)},
                        {"output_dir", c.output_dir},
                        {"seed", c.seed},
                        {"params", c.params}};
    if (c.nonlinearity) j["nonlinearity"] = to_json(*c.nonlinearity);
    if (c.domain) j["domain"] = to_json(*c.domain);
    return j;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config '" + path + "': parse error: " + e.what());
    }
    return config_from_json(j);
}

nlohmann::json to_json(const RunOutcome& r) {
    return {{"exit_code", r.exit_code}, {"passed", r.passed},   {"partial", r.partial},
            {"message", r.message},     {"files", r.files},     {"summary", r.summary}};
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
    RunOutcome oc;
    Artifacts out;
    out.dir = cfg.output_dir;
    bool partial = false;
    try {
        validate(cfg.kernel);
        validate(cfg.quadrature);
        fs::create_directories(out.dir);
        TaskResult tr;
        switch (cfg.task) {
        case Task::CheckKernel: tr = task_check_kernel(cfg, out); break;
        case Task::EvalOperator: tr = task_eval_operator(cfg, out); break;
        case Task::SolveBall: tr = task_solve_ball(cfg, out, partial); break;
        case Task::VerifySymmetry: tr = task_verify_symmetry(cfg, out, partial); break;
        case Task::SweepAlpha: tr = task_sweep_alpha(cfg, out); break;
        case Task::NarrowRegion: tr = task_narrow(cfg, out); break;
        case Task::DecayInfinity: tr = task_decay(cfg, out); break;
        }
        oc.passed = tr.passed;
        oc.summary = tr.summary;
        oc.message = tr.passed ? "pass" : "fail";
    } catch (const ConfigError& e) {
        oc.exit_code = kExitValidation;
        oc.message = e.what();
    } catch (const DomainError& e) {
        oc.exit_code = kExitValidation;
        oc.message = e.what();
    } catch (const ConvergenceError& e) {
        oc.exit_code = kExitNumeric;
        oc.partial = partial || !out.files.empty();
        oc.message = e.what();
    } catch (const std::exception& e) {
        oc.exit_code = kExitNumeric;
        oc.partial = !out.files.empty();
        oc.message = e.what();
    }
    if (oc.exit_code == kExitValidation && out.files.empty()) return oc;

    // Manifest last: hashes of every artifact, no timestamps.
    try {
        std::sort(out.files.begin(), out.files.end());
        nlohmann::json files = nlohmann::json::array();
        for (const auto& f : out.files)
            files.push_back({{"file", f},
                             {"sha256", sha256_file((out.dir / f).string())},
                             {"bytes", fs::file_size(out.dir / f)},
                             {"partial", oc.partial}});
        nlohmann::json m = {{"task", to_string(cfg.task)}, {"label", cfg.label},    {"seed", cfg.seed},
                            {"exit_code", oc.exit_code},   {"passed", oc.passed},   {"partial", oc.partial},
                            {"message", oc.message},       {"config", to_json(cfg)}, {"files", files},
                            {"summary", oc.summary}};
        std::ofstream mo(out.dir / "manifest.json");
        mo << m.dump(2) << "\n";
        out.files.push_back("manifest.json");
    } catch (const std::exception& e) {
        if (oc.exit_code == kExitOk) oc.exit_code = kExitNumeric;
        oc.message += std::string("; manifest: ") + e.what();
    }
    oc.files = out.files;
    return oc;
}

nlohmann::json to_json(const SuiteResult& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"config", row.config},
                        {"label", row.label},
                        {"task", row.task},
                        {"passed", row.passed},
                        {"exit_code", row.exit_code},
                        {"message", row.message}});
    return {{"exit_code", r.exit_code}, {"rows", rows}};
}

SuiteResult verify_suite(const std::string& config_dir, const std::string& output_dir, int jobs,
                         std::int64_t seed) {
    SuiteResult res;
    std::vector<fs::path> configs;
    if (fs::is_directory(config_dir))
        for (const auto& e : fs::directory_iterator(config_dir))
            if (e.is_regular_file() && e.path().extension() == ".json") configs.push_back(e.path());
    std::sort(configs.begin(), configs.end());
    if (configs.empty()) {
        res.exit_code = kExitValidation;
        return res;
    }
    res.rows.resize(configs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            SuiteRow& row = res.rows[i];
            row.config = configs[i].filename().string();
            try {
                ExperimentConfig c = load_config(configs[i].string());
                c.output_dir = (fs::path(output_dir) / configs[i].stem()).string();
                if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
                row.label = c.label;
                row.task = to_string(c.task);
                const RunOutcome oc = run_experiment(c);
                row.exit_code = oc.exit_code;
                row.passed = oc.exit_code == kExitOk && oc.passed;
                row.message = oc.message;
            } catch (const std::exception& e) {
                row.exit_code = kExitValidation;
                row.message = e.what();
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    bool any_fail = false;
    int worst = kExitOk;
    for (const auto& row : res.rows) {
        any_fail = any_fail || !row.passed;
        worst = std::max(worst, row.exit_code);
    }
    res.exit_code = any_fail ? (worst != kExitOk ? worst : kExitValidation) : kExitOk;
    fs::create_directories(output_dir);
    std::ofstream(fs::path(output_dir) / "suite.json") << to_json(res).dump(2) << "\n";
    return res;
}

std::string format_matrix(const SuiteResult& r) {
    std::ostringstream s;
    std::size_t wl = 5, wc = 6, wt = 4;
    for (const auto& row : r.rows) {
        wl = std::max(wl, row.label.size());
        wc = std::max(wc, row.config.size());
        wt = std::max(wt, row.task.size());
    }
    auto pad = [](const std::string& x, std::size_t w) { return x + std::string(w - x.size(), ' '); };
    s << pad("label", wl) << "  " << pad("config", wc) << "  " << pad("task", wt) << "  result\n";
    std::map<std::string, std::pair<int, int>> by_label;
    for (const auto& row : r.rows) {
        std::string verdict = row.passed ? "PASS" : "FAIL";
        if (!row.passed && row.exit_code != kExitOk) verdict += " (exit " + std::to_string(row.exit_code) + ": " + row.message + ")";
        s << pad(row.label, wl) << "  " << pad(row.config, wc) << "  " << pad(row.task, wt) << "  " << verdict << "\n";
        auto& c = by_label[row.label];
        c.first += row.passed ? 1 : 0;
        c.second += 1;
    }
    s << "\n";
    for (const auto& [label, c] : by_label)
        s << pad(label, wl) << "  " << (c.first == c.second ? "PASS" : "FAIL") << "  " << c.first << "/" << c.second
          << "\n";
    if (r.rows.empty()) s << "no configs found\n";
    return s.str();
}

}  // namespace nlop
