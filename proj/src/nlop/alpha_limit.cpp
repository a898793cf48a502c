#include "nlop/alpha_limit.hpp"

#include "nlop/quadrature.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>

namespace nlop {

namespace {

double neg_laplacian_reference(const Field& u, const FamilySpec& fam, const Vec& x) {
    const int n = u.dim();
    const Mat H = u.hessian(x);
    double s = 0.0;
    switch (fam.kind) {
    case AlphaFamily::ExponentialScaled:
        for (int i = 0; i < n; ++i) s -= H[i][i];
        return s;
    case AlphaFamily::Anisotropic:
        for (int i = 0; i < n; ++i) s -= H[i][i];
        return anisotropic_constant(n, fam.p_norm) * s;
    case AlphaFamily::MatrixTransformed:
        for (int i = 0; i < n; ++i) s -= fam.lambda_diag[i] * fam.lambda_diag[i] * H[i][i];
        return s;
    }
    return 0.0;
}

std::mutex& cache_mutex() {
    static std::mutex m;
    return m;
}

std::map<int, OmegaCalibration>& omega_cache() {
    static std::map<int, OmegaCalibration> c;
    return c;
}

}  // namespace

double gamma_prefactor(double alpha) {
    if (!(alpha >= 0.0 && alpha < 2.0)) throw ConfigError("alpha must lie in [0,2)");
    return 1.0 / std::tgamma(0.5 * (2.0 - alpha));
}

std::string to_string(AlphaFamily f) {
    switch (f) {
    case AlphaFamily::ExponentialScaled: return "ExponentialScaled";
    case AlphaFamily::Anisotropic: return "Anisotropic";
    case AlphaFamily::MatrixTransformed: return "MatrixTransformed";
    }
    return "unknown";
}

AlphaFamily alpha_family_from_string(const std::string& s) {
    if (s == "ExponentialScaled") return AlphaFamily::ExponentialScaled;
    if (s == "Anisotropic") return AlphaFamily::Anisotropic;
    if (s == "MatrixTransformed") return AlphaFamily::MatrixTransformed;
    throw ConfigError("alpha_sweep.family must be ExponentialScaled, Anisotropic or MatrixTransformed");
}

KernelSpec family_kernel(const FamilySpec& fam, int dim, double alpha) {
    switch (fam.kind) {
    case AlphaFamily::ExponentialScaled: {
        KernelSpec k = make_exponential(dim, alpha);
        const double omega = fam.omega > 0.0 ? fam.omega : calibrate_omega_n(dim).omega;
        k.scale = 4.0 * dim / omega;
        return k;
    }
    case AlphaFamily::Anisotropic: return make_anisotropic(dim, alpha, fam.p_norm);
    case AlphaFamily::MatrixTransformed: {
        KernelSpec k = make_matrix(dim, alpha, fam.lambda_diag);
        k.scale = 2.0 * dim / sphere_measure(dim);
        return k;
    }
    }
    throw ConfigError("unknown alpha family");
}

nlohmann::json to_json(const AlphaSweepReport& r) {
    return {{"family", r.family},
            {"alpha_list", r.alpha_list},
            {"values", r.values},
            {"errors", r.errors},
            {"eps_used", r.eps_used},
            {"extrapolated_limit", r.extrapolated_limit},
            {"linear_limit", r.linear_limit},
            {"flagged", r.flagged},
            {"reference", r.reference},
            {"rel_error", r.rel_error},
            {"omega", r.omega}};
}

double extrapolate_to_zero(const std::vector<double>& s, const std::vector<double>& v) {
    // Lagrange interpolation evaluated at 0.
    double out = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double w = 1.0;
        for (std::size_t j = 0; j < s.size(); ++j)
            if (j != i) w *= (0.0 - s[j]) / (s[i] - s[j]);
        out += w * v[i];
    }
    return out;
}

AlphaSweepReport sweep_alpha(const Field& u, const FamilySpec& fam, const Vec& x,
                             const std::vector<double>& alphas, const QuadratureConfig& cfg) {
    validate(cfg);
    if (u.form() != Field::Form::Analytic || !u.has_hessian())
        throw ConfigError("sweep_alpha requires an analytic field with a Hessian");
    if (alphas.size() < 2) throw ConfigError("alpha_list needs at least two values");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0 && alphas[i] < 2.0)) throw ConfigError("alpha must lie in (0,2)");
        if (i > 0 && !(alphas[i] > alphas[i - 1])) throw ConfigError("alpha_list must be strictly increasing");
    }
    if (!(alphas.back() >= 1.9)) throw ConfigError("alpha_list must reach at least 1.9");
    if (fam.kind == AlphaFamily::MatrixTransformed &&
        static_cast<int>(fam.lambda_diag.size()) != u.dim())
        throw ConfigError("alpha_sweep.lambda_diag must have dim entries");
    const int n = u.dim();
    AlphaSweepReport rep;
    rep.family = to_string(fam.kind);
    if (fam.kind == AlphaFamily::ExponentialScaled)
        rep.omega = fam.omega > 0.0 ? fam.omega : calibrate_omega_n(n).omega;
    std::vector<double> s;
    const double s0 = 2.0 - alphas.front();
    for (double a : alphas) {
        FamilySpec f = fam;
        f.omega = rep.omega;
        const KernelSpec k = family_kernel(f, n, a);
        QuadratureConfig q = cfg;
        q.eps_inner = cfg.eps_inner * std::sqrt((2.0 - a) / s0);
        EvalResult r;
        for (int attempt = 0;; ++attempt) {
            try {
                r = eval_LK(u, k, x, q);
                break;
            } catch (const QuadratureError&) {
                if (attempt >= 4) throw;
                q.eps_inner *= 0.5;
            }
        }
        rep.alpha_list.push_back(a);
        rep.values.push_back(r.value);
        rep.errors.push_back(r.err_estimate);
        rep.eps_used.push_back(q.eps_inner);
        s.push_back(2.0 - a);
        const std::size_t m = s.size();
        rep.running.push_back(m < 2 ? r.value
                                    : extrapolate_to_zero({s[m - 2], s[m - 1]},
                                                          {rep.values[m - 2], rep.values[m - 1]}));
    }
    rep.extrapolated_limit = extrapolate_to_zero(s, rep.values);
    rep.linear_limit = rep.running.back();
    rep.flagged = std::abs(rep.extrapolated_limit - rep.linear_limit) >
                  0.01 * std::max(std::abs(rep.extrapolated_limit), 1e-300);
    rep.reference = neg_laplacian_reference(u, fam, x);
    rep.rel_error = rep.reference != 0.0
                        ? std::abs(rep.extrapolated_limit - rep.reference) / std::abs(rep.reference)
                        : std::abs(rep.extrapolated_limit);
    return rep;
}

double anisotropic_constant(int n, double p, double quad_tol) {
    if (n < 1 || n > kMaxDim) throw ConfigError("dim must lie in [1,3]");
    if (!(p >= 1.0)) throw ConfigError("p_norm must be >= 1");
    // (2 - alpha) \int_{B_1} |y|^2 ||y||^{-n-alpha} = \int_S ||theta||^{-n-alpha}.
    std::vector<double> s, v;
    for (double a : kDefaultAlphas) {
        AdaptiveOptions opt;
        opt.rel_tol = quad_tol;
        opt.abs_tol = 0.0;
        auto f = [&](const Vec& th) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += std::pow(std::abs(th[i]), p);
            return std::array<double, 1>{std::pow(acc, -(n + a) / p)};
        };
        const auto r = integrate_sphere<1>(n, false, f, opt);
        if (!r.converged) throw ConvergenceError("anisotropic_constant: angular integral did not converge");
        s.push_back(2.0 - a);
        v.push_back(r.value[0] / n);
    }
    return extrapolate_to_zero(s, v);
}

Bracket anisotropic_bracket(int n, double p) {
    const double e = std::pow(static_cast<double>(n), 1.0 / p - 0.5);
    const double c = std::min(1.0, e), cp = std::max(1.0, e);
    const double base = sphere_measure(n) / n;
    return {std::pow(cp, -(n + 2.0)) * base, std::pow(c, -(n + 2.0)) * base};
}

OmegaCalibration calibrate_omega_n(int n, const std::string& cache_path) {
    if (n < 1 || n > 3) throw ConfigError("calibrate_omega_n supports n in {1,2,3}");
    {
        std::lock_guard<std::mutex> lock(cache_mutex());
        auto it = omega_cache().find(n);
        if (it != omega_cache().end()) return it->second;
    }
    if (!cache_path.empty() && std::filesystem::exists(cache_path)) {
        try {
            std::ifstream in(cache_path);
            const nlohmann::json j = nlohmann::json::parse(in);
            const std::string key = std::to_string(n);
            if (j.contains(key)) {
                OmegaCalibration c;
                c.n = n;
                c.omega = j[key].at("omega").get<double>();
                c.convention = j[key].at("convention").get<std::string>();
                c.limit_sphere = j[key].value("limit_sphere", 0.0);
                c.limit_ball = j[key].value("limit_ball", 0.0);
                std::lock_guard<std::mutex> lock(cache_mutex());
                omega_cache()[n] = c;
                return c;
            }
        } catch (const nlohmann::json::exception&) {
            // Unreadable cache: recompute.
        }
    }
    const Field u = gaussian_field(n);
    const double target = 2.0 * n;
    QuadratureConfig cfg;
    cfg.eps_inner = 0.1;
    cfg.rel_tol = 1e-8;
    auto limit_for = [&](double W) {
        FamilySpec fam;
        fam.omega = W;
        return sweep_alpha(u, fam, Vec{}, kDefaultAlphas, cfg).extrapolated_limit;
    };
    OmegaCalibration c;
    c.n = n;
    const double sphere = sphere_measure(n), ball = ball_volume(n);
    c.limit_sphere = limit_for(sphere);
    c.limit_ball = std::abs(sphere - ball) < 1e-14 ? c.limit_sphere : limit_for(ball);
    const bool ok_sphere = std::abs(c.limit_sphere - target) <= 0.05 * target;
    const bool ok_ball = std::abs(c.limit_ball - target) <= 0.05 * target;
    if (ok_sphere && ok_ball) {
        c.omega = sphere;
        c.convention = std::abs(sphere - ball) < 1e-14 ? "coincide" : "sphere_surface";
    } else if (ok_sphere) {
        c.omega = sphere;
        c.convention = "sphere_surface";
    } else if (ok_ball) {
        c.omega = ball;
        c.convention = "ball_volume";
    } else {
        throw ConvergenceError("calibrate_omega_n: neither omega_n convention reproduces -Laplacian within 5%");
    }
    {
        std::lock_guard<std::mutex> lock(cache_mutex());
        omega_cache()[n] = c;
    }
    if (!cache_path.empty()) {
        nlohmann::json j = nlohmann::json::object();
        if (std::filesystem::exists(cache_path)) {
            try {
                std::ifstream in(cache_path);
                j = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception&) {
                j = nlohmann::json::object();
            }
        }
        j[std::to_string(n)] = {{"omega", c.omega},
                                {"convention", c.convention},
                                {"limit_sphere", c.limit_sphere},
                                {"limit_ball", c.limit_ball}};
        std::ofstream out(cache_path);
        out << j.dump(2) << "\n";
    }
    return c;
}

}  // namespace nlop
