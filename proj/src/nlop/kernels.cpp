#include "nlop/kernels.hpp"

#include "nlop/quadrature.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include <boost/math/special_functions/gamma.hpp>

namespace nlop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double p_norm_of(const Vec& y, int n, double p) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (int i = 0; i < n; ++i) m = std::max(m, std::abs(y[i]));
        return m;
    }
    if (p == 2.0) return norm(y, n);
    if (p == 1.0) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += std::abs(y[i]);
        return s;
    }
    double m = 0.0;
    for (int i = 0; i < n; ++i) m = std::max(m, std::abs(y[i]));
    if (m == 0.0) return 0.0;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::pow(std::abs(y[i]) / m, p);
    return m * std::pow(s, 1.0 / p);
}

double det_lambda(const KernelSpec& s) {
    double d = 1.0;
    for (int i = 0; i < s.dim; ++i) d *= s.lambda_diag[i];
    return d;
}

// Gamma(s, x) for any real s != 0, -1, ... and x > 0, via upward recurrence
// from a positive first argument.
double upper_gamma(double s, double x) {
    if (s > 0.0) return boost::math::tgamma(s, x);
    const double x_s_e = std::exp(s * std::log(x) - x);
    return (upper_gamma(s + 1.0, x) - x_s_e) / s;
}

// \int_a^b e^{-r^2} r^e dr
double exp_moment(double e, double a, double b) {
    const double s = 0.5 * (e + 1.0);
    const double a2 = a * a;
    const double b2 = std::isinf(b) ? kInf : b * b;
    if (s > 0.0 && b2 <= s + 1.0) {
        const double gb = boost::math::tgamma_lower(s, b2);
        const double ga = a2 > 0.0 ? boost::math::tgamma_lower(s, a2) : 0.0;
        return 0.5 * (gb - ga);
    }
    if (a2 == 0.0) {
        if (s <= 0.0) return kInf;
        return 0.5 * (std::tgamma(s) - upper_gamma(s, b2));
    }
    const double ub = std::isinf(b2) ? 0.0 : upper_gamma(s, b2);
    return 0.5 * (upper_gamma(s, a2) - ub);
}

// \int_a^b r^e dr
double power_moment(double e, double a, double b) {
    const double q = e + 1.0;
    if (q == 0.0) return std::log(b / a);
    if (std::isinf(b)) {
        if (q >= 0.0) return kInf;
        return -std::pow(a, q) / q;
    }
    if (a == 0.0) {
        if (q <= 0.0) return kInf;
        return std::pow(b, q) / q;
    }
    return (std::pow(b, q) - std::pow(a, q)) / q;
}

}  // namespace

void validate(const KernelSpec& s) {
    if (s.dim < 1 || s.dim > kMaxDim) throw ConfigError("dim must be 1, 2 or 3");
    if (!(s.alpha > 0.0 && s.alpha < 2.0)) throw ConfigError("alpha must lie in (0,2)");
    if (!(s.scale > 0.0) || !std::isfinite(s.scale)) throw ConfigError("scale must be positive");
    switch (s.kind) {
        case KernelKind::PowerLaw:
            if (!(s.c_lower > 0.0) || !std::isfinite(s.c_lower))
                throw ConfigError("c_lower must be positive");
            break;
        case KernelKind::AnisotropicPNorm:
            if (!(s.p_norm >= 1.0)) throw ConfigError("p_norm must be >= 1");
            break;
        case KernelKind::MatrixTransformed:
        case KernelKind::DiagQuadratic:
            if (static_cast<int>(s.lambda_diag.size()) != s.dim)
                throw ConfigError("lambda_diag must have dim entries");
            for (std::size_t i = 0; i < s.lambda_diag.size(); ++i) {
                if (!(s.lambda_diag[i] > 0.0) || !std::isfinite(s.lambda_diag[i]))
                    throw ConfigError("lambda_diag entries must be positive");
                if (i > 0 && s.lambda_diag[i] < s.lambda_diag[i - 1])
                    throw ConfigError("lambda_diag must be sorted ascending");
            }
            break;
        case KernelKind::VariableOrder:
            if (!(s.beta_order >= s.alpha && s.beta_order < 2.0))
                throw ConfigError("beta_order must lie in [alpha,2)");
            break;
        case KernelKind::Exponential:
            break;
    }
}

KernelSpec make_power_law(int dim, double alpha, double c) {
    KernelSpec s;
    s.kind = KernelKind::PowerLaw;
    s.dim = dim;
    s.alpha = alpha;
    s.c_lower = c;
    validate(s);
    return s;
}

KernelSpec make_exponential(int dim, double alpha) {
    KernelSpec s;
    s.kind = KernelKind::Exponential;
    s.dim = dim;
    s.alpha = alpha;
    validate(s);
    return s;
}

KernelSpec make_anisotropic(int dim, double alpha, double p) {
    KernelSpec s;
    s.kind = KernelKind::AnisotropicPNorm;
    s.dim = dim;
    s.alpha = alpha;
    s.p_norm = p;
    validate(s);
    return s;
}

KernelSpec make_matrix(int dim, double alpha, std::vector<double> lambda) {
    KernelSpec s;
    s.kind = KernelKind::MatrixTransformed;
    s.dim = dim;
    s.alpha = alpha;
    s.lambda_diag = std::move(lambda);
    validate(s);
    return s;
}

KernelSpec make_diag_quadratic(int dim, double alpha, std::vector<double> lambda) {
    KernelSpec s;
    s.kind = KernelKind::DiagQuadratic;
    s.dim = dim;
    s.alpha = alpha;
    s.lambda_diag = std::move(lambda);
    validate(s);
    return s;
}

KernelSpec make_variable_order(int dim, double alpha, double beta) {
    KernelSpec s;
    s.kind = KernelKind::VariableOrder;
    s.dim = dim;
    s.alpha = alpha;
    s.beta_order = beta;
    validate(s);
    return s;
}

std::string to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::PowerLaw: return "PowerLaw";
        case KernelKind::Exponential: return "Exponential";
        case KernelKind::AnisotropicPNorm: return "AnisotropicPNorm";
        case KernelKind::MatrixTransformed: return "MatrixTransformed";
        case KernelKind::DiagQuadratic: return "DiagQuadratic";
        case KernelKind::VariableOrder: return "VariableOrder";
    }
    return "?";
}

KernelKind kernel_kind_from_string(const std::string& s) {
    for (auto k : {KernelKind::PowerLaw, KernelKind::Exponential, KernelKind::AnisotropicPNorm,
                   KernelKind::MatrixTransformed, KernelKind::DiagQuadratic,
                   KernelKind::VariableOrder})
        if (to_string(k) == s) return k;
    throw ConfigError("kernel.kind: unknown kernel kind '" + s + "'");
}

nlohmann::json to_json(const KernelSpec& s) {
    nlohmann::json j;
    j["kind"] = to_string(s.kind);
    j["dim"] = s.dim;
    j["alpha"] = s.alpha;
    j["c_lower"] = s.c_lower;
    j["p_norm"] = s.p_norm;
    j["lambda_diag"] = s.lambda_diag;
    j["beta_order"] = s.beta_order;
    j["scale"] = s.scale;
    return j;
}

KernelSpec kernel_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("kernel must be an object");
    KernelSpec s;
    try {
        if (!j.contains("kind")) throw ConfigError("kernel.kind is required");
        s.kind = kernel_kind_from_string(j.at("kind").get<std::string>());
        s.dim = j.value("dim", 1);
        if (!j.contains("alpha")) throw ConfigError("kernel.alpha is required");
        s.alpha = j.at("alpha").get<double>();
        s.c_lower = j.value("c_lower", 1.0);
        s.p_norm = j.value("p_norm", 2.0);
        s.lambda_diag = j.value("lambda_diag", std::vector<double>{});
        s.beta_order = j.value("beta_order", s.alpha);
        s.scale = j.value("scale", 1.0);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("kernel: malformed value: ") + e.what());
    }
    validate(s);
    return s;
}

double eval_kernel(const KernelSpec& s, const Vec& y) {
    const int n = s.dim;
    const double r = norm(y, n);
    if (!(r > 0.0)) throw DomainError("kernel evaluated at y = 0");
    const double a = s.alpha;
    double k = 0.0;
    switch (s.kind) {
        case KernelKind::PowerLaw:
            k = (2.0 - a) * s.c_lower / std::pow(r, n + a);
            break;
        case KernelKind::Exponential:
            k = std::exp(-r * r) / (std::tgamma(0.5 * (2.0 - a)) * std::pow(r, n + a));
            break;
        case KernelKind::AnisotropicPNorm:
            k = (2.0 - a) / std::pow(p_norm_of(y, n, s.p_norm), n + a);
            break;
        case KernelKind::MatrixTransformed: {
            double q = 0.0;
            for (int i = 0; i < n; ++i) q += (y[i] / s.lambda_diag[i]) * (y[i] / s.lambda_diag[i]);
            k = (2.0 - a) / (det_lambda(s) * std::pow(std::sqrt(q), n + a));
            break;
        }
        case KernelKind::DiagQuadratic: {
            double q = 0.0;
            for (int i = 0; i < n; ++i) q += s.lambda_diag[i] * y[i] * y[i];
            k = (2.0 - a) * q / std::pow(r, n + 2 + a);
            break;
        }
        case KernelKind::VariableOrder:
            k = r <= 1.0 ? 1.0 / std::pow(r, n + s.beta_order) : 1.0 / std::pow(r, n + a);
            break;
    }
    return s.scale * k;
}

double angular_factor(const KernelSpec& s, const Vec& th) {
    const int n = s.dim;
    const double a = s.alpha;
    double A = 0.0;
    switch (s.kind) {
        case KernelKind::PowerLaw: A = (2.0 - a) * s.c_lower; break;
        case KernelKind::Exponential: A = 1.0 / std::tgamma(0.5 * (2.0 - a)); break;
        case KernelKind::AnisotropicPNorm:
            A = (2.0 - a) / std::pow(p_norm_of(th, n, s.p_norm), n + a);
            break;
        case KernelKind::MatrixTransformed: {
            double q = 0.0;
            for (int i = 0; i < n; ++i) q += (th[i] / s.lambda_diag[i]) * (th[i] / s.lambda_diag[i]);
            A = (2.0 - a) / (det_lambda(s) * std::pow(std::sqrt(q), n + a));
            break;
        }
        case KernelKind::DiagQuadratic: {
            double q = 0.0;
            for (int i = 0; i < n; ++i) q += s.lambda_diag[i] * th[i] * th[i];
            A = (2.0 - a) * q;
            break;
        }
        case KernelKind::VariableOrder: A = 1.0; break;
    }
    return s.scale * A;
}

double radial_factor(const KernelSpec& s, double r) {
    const int n = s.dim;
    switch (s.kind) {
        case KernelKind::Exponential: return std::exp(-r * r) / std::pow(r, n + s.alpha);
        case KernelKind::VariableOrder:
            return r <= 1.0 ? std::pow(r, -n - s.beta_order) : std::pow(r, -n - s.alpha);
        default: return std::pow(r, -n - s.alpha);
    }
}

double radial_moment(const KernelSpec& s, double a, double b, double k) {
    if (!(b > a)) return 0.0;
    const int n = s.dim;
    switch (s.kind) {
        case KernelKind::Exponential: return exp_moment(k - n - s.alpha, a, b);
        case KernelKind::VariableOrder: {
            double v = 0.0;
            if (a < 1.0) v += power_moment(k - n - s.beta_order, a, std::min(b, 1.0));
            if (b > 1.0) v += power_moment(k - n - s.alpha, std::max(a, 1.0), b);
            return v;
        }
        default: return power_moment(k - n - s.alpha, a, b);
    }
}

double radial_tail(const KernelSpec& s, double rho) {
    return radial_moment(s, rho, kInf, s.dim - 1);
}

AngularMoments angular_moments(const KernelSpec& s, double rel_tol) {
    const int n = s.dim;
    AdaptiveOptions opt;
    opt.rel_tol = rel_tol;
    opt.abs_tol = 0.0;
    auto f = [&](const Vec& th) {
        const double A = angular_factor(s, th);
        std::array<double, 10> v{};
        v[0] = A;
        int c = 1;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) v[c++] = A * th[i] * th[j];
        return v;
    };
    auto r = integrate_sphere<10>(n, false, f, opt);
    AngularMoments m;
    m.mass = r.value[0];
    int c = 1;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m.second[i][j] = r.value[c++];
    return m;
}

double exterior_mass(const KernelSpec& s, double R) {
    return angular_moments(s).mass * radial_tail(s, R);
}

double half_space_mass(const KernelSpec& s, int axis, double d, double rel_tol) {
    const int n = s.dim;
    if (axis < 1 || axis > n) throw ConfigError("axis out of range");
    if (!(d > 0.0)) throw DomainError("half-space distance must be positive");
    const int h = n - 1;  // coordinate kept nonnegative by integrate_sphere(half)
    auto f = [&](const Vec& th0) {
        Vec th = th0;
        std::swap(th[h], th[axis - 1]);
        const double c = th[axis - 1];
        if (c <= 0.0) return std::array<double, 1>{0.0};
        return std::array<double, 1>{angular_factor(s, th) * radial_tail(s, d / c)};
    };
    AdaptiveOptions opt;
    opt.rel_tol = rel_tol;
    opt.abs_tol = 0.0;
    return integrate_sphere<1>(n, true, f, opt).value[0];
}

std::string to_string(Condition c) {
    switch (c) {
        case Condition::LevyKhintchine: return "LevyKhintchine";
        case Condition::K1: return "K1";
        case Condition::K2: return "K2";
        case Condition::K2prime: return "K2prime";
        case Condition::G1: return "G1";
        case Condition::G2: return "G2";
        case Condition::G2prime: return "G2prime";
    }
    return "?";
}

nlohmann::json to_json(const ConditionReport& r) {
    nlohmann::json j;
    j["condition"] = to_string(r.condition);
    j["holds"] = r.holds;
    j["estimate"] = r.estimate;
    j["samples"] = r.samples;
    if (r.witness) {
        j["witness"] = {{"point", r.witness->point}, {"value", r.witness->value}};
    } else {
        j["witness"] = nullptr;
    }
    if (!r.fitted.empty()) j["fitted"] = r.fitted;
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

ConditionReport check_levy_khintchine(const KernelSpec& s, double rel_tol) {
    ConditionReport rep;
    rep.condition = Condition::LevyKhintchine;
    const int n = s.dim;
    auto g = [&](double r) { return radial_factor(s, r) * std::pow(r, n + 1) / (r * r + 1.0); };

    // Local exponent of the integrand at the origin.
    const double r1 = 1e-8, r2 = 1e-6;
    const double e0 = std::log(g(r2) / g(r1)) / std::log(r2 / r1);
    if (!(e0 > -1.0)) {
        rep.holds = false;
        rep.witness = Witness{{r1, 0.0, 0.0}, g(r1)};
        rep.estimate = kInf;
        rep.note = "integrand not integrable at the origin";
        return rep;
    }
    // r = t^m with m = 1/(e0 + 1) flattens the algebraic endpoint behaviour.
    const double m = 1.0 / (e0 + 1.0);
    auto inner = [&](double t) {
        if (t <= 0.0) return std::array<double, 1>{0.0};
        const double r = std::pow(t, m);
        return std::array<double, 1>{g(r) * m * r / t};
    };
    AdaptiveOptions opt;
    opt.rel_tol = rel_tol * 0.01;
    opt.abs_tol = 0.0;
    const std::array<double, 2> br = {0.0, 1.0};
    auto in = integrate_adaptive<1>(inner, br, opt);
    double total = in.value[0];
    int samples = static_cast<int>(in.evals);

    // Outer part by doubling the truncation radius.
    bool converged = false;
    double R = 1.0;
    auto gf = [&](double r) { return std::array<double, 1>{g(r)}; };
    for (int k = 0; k < 200; ++k) {
        const std::array<double, 2> seg = {R, 2.0 * R};
        auto piece = integrate_adaptive<1>(gf, seg, opt);
        samples += static_cast<int>(piece.evals);
        const double prev = total;
        total += piece.value[0];
        R *= 2.0;
        if (k > 3 && std::abs(total - prev) <= rel_tol * std::abs(total)) {
            converged = true;
            break;
        }
    }
    const double mass = angular_moments(s).mass;
    rep.estimate = mass * total;
    rep.samples = samples;
    rep.holds = converged && std::isfinite(rep.estimate);
    if (!rep.holds) {
        rep.witness = Witness{{R, 0.0, 0.0}, g(R)};
        rep.note = "outer refinement did not converge";
    }
    return rep;
}

namespace {

Vec random_direction(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Vec v{};
    double r = 0.0;
    while (r < 1e-12) {
        for (int i = 0; i < n; ++i) v[i] = nd(rng);
        r = norm(v, n);
    }
    for (int i = 0; i < n; ++i) v[i] /= r;
    return v;
}

}  // namespace

ConditionReport check_K1(const KernelFn& K, int dim, double alpha, int sample_count,
                         std::uint64_t seed) {
    if (sample_count < 10) throw ConfigError("sample_count must be >= 10");
    ConditionReport rep;
    rep.condition = Condition::K1;
    rep.samples = sample_count;
    std::mt19937_64 rng(seed);
    double c_ref = kInf, c_min = kInf;
    Witness worst;
    for (int k = 0; k < sample_count; ++k) {
        const double r = std::pow(10.0, -3.0 + 6.0 * k / (sample_count - 1));
        const Vec th = random_direction(rng, dim);
        Vec y{};
        for (int i = 0; i < dim; ++i) y[i] = r * th[i];
        const double ratio = K(y) * std::pow(r, dim + alpha) / (2.0 - alpha);
        if (r <= 1.0) c_ref = std::min(c_ref, ratio);
        if (ratio < c_min) {
            c_min = ratio;
            worst = Witness{y, ratio};
        }
    }
    rep.estimate = c_min;
    rep.holds = c_min > 0.0 && c_min >= kK1Floor * c_ref;
    if (!rep.holds) rep.witness = worst;
    return rep;
}

ConditionReport check_K1(const KernelSpec& spec, int sample_count, std::uint64_t seed) {
    return check_K1([&](const Vec& y) { return eval_kernel(spec, y); }, spec.dim, spec.alpha,
                    sample_count, seed);
}

ConditionReport check_monotone_K2(const KernelFn& K, int dim, int axis, int sample_count,
                                  std::uint64_t seed) {
    if (axis < 1 || axis > dim) throw ConfigError("axis must lie in [1, dim]");
    ConditionReport rep;
    rep.condition = Condition::K2;
    rep.samples = sample_count;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> logmag(-2.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    const int ax = axis - 1;
    double max_deriv = -kInf;
    for (int k = 0; k < sample_count; ++k) {
        Vec base{};
        for (int i = 0; i < dim; ++i)
            if (i != ax) base[i] = (coin(rng) ? 1.0 : -1.0) * std::pow(10.0, logmag(rng));
        double a = std::pow(10.0, logmag(rng));
        double b = std::pow(10.0, logmag(rng));
        if (a > b) std::swap(a, b);
        if (b < a * (1.0 + 1e-6)) b = a * (1.0 + 1e-3);
        Vec ya = base, yb = base;
        ya[ax] = (coin(rng) ? 1.0 : -1.0) * a;
        yb[ax] = (coin(rng) ? 1.0 : -1.0) * b;
        const double ka = K(ya), kb = K(yb);
        if (!(ka > kb)) {
            rep.holds = false;
            rep.witness = Witness{yb, kb - ka};
            rep.estimate = kb - ka;
            rep.note = "K increases from |y_i| = " + std::to_string(a) + " to " + std::to_string(b);
            return rep;
        }
        // d/dt K(sqrt(t), y') by central differences in t = y_i^2.
        const double t = a * a, dt = 1e-4 * t;
        Vec yp = base, ym = base;
        yp[ax] = std::sqrt(t + dt);
        ym[ax] = std::sqrt(t - dt);
        const double d = (K(yp) - K(ym)) / (2.0 * dt);
        max_deriv = std::max(max_deriv, d);
        if (!(d < 0.0)) {
            rep.holds = false;
            rep.condition = Condition::K2prime;
            Vec w = base;
            w[ax] = a;
            rep.witness = Witness{w, d};
            rep.estimate = d;
            rep.note = "nonnegative derivative in y_i^2";
            return rep;
        }
    }
    rep.holds = true;
    rep.estimate = max_deriv;
    return rep;
}

ConditionReport check_monotone_K2(const KernelSpec& spec, int axis, int sample_count,
                                  std::uint64_t seed) {
    return check_monotone_K2([&](const Vec& y) { return eval_kernel(spec, y); }, spec.dim, axis,
                             sample_count, seed);
}

double reflected_kernel_difference(const KernelSpec& s, const Vec& x, const Vec& y,
                                   double lambda, int axis) {
    if (axis < 1 || axis > s.dim) throw ConfigError("axis must lie in [1, dim]");
    bool same = true;
    for (int i = 0; i < s.dim; ++i) same = same && x[i] == y[i];
    if (same) throw DomainError("reflected_kernel_difference requires y != x");
    Vec yl = y;
    yl[axis - 1] = 2.0 * lambda - y[axis - 1];
    Vec d1{}, d2{};
    for (int i = 0; i < s.dim; ++i) {
        d1[i] = x[i] - y[i];
        d2[i] = x[i] - yl[i];
    }
    return eval_kernel(s, d1) - eval_kernel(s, d2);
}

}  // namespace nlop
