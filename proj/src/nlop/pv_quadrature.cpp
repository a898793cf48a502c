#include "nlop/pv_quadrature.hpp"

#include "nlop/quadrature.hpp"

#include <algorithm>
#include <limits>

namespace nlop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMachEps = std::numeric_limits<double>::epsilon();
constexpr double kPi = std::numbers::pi;

double frobenius(const Mat& m, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += m[i][j] * m[i][j];
    return std::sqrt(s);
}

std::vector<double> shell_breaks(double eps, double R) {
    std::vector<double> br = geometric_breaks(eps, R, 2.0, false);
    if (eps < 1.0 && 1.0 < R) {
        br.push_back(1.0);
        std::sort(br.begin(), br.end());
        br.erase(std::unique(br.begin(), br.end()), br.end());
    }
    return br;
}

void check_common(const Field& u, const KernelSpec& spec, const QuadratureConfig& cfg) {
    validate(spec);
    validate(cfg);
    if (u.dim() != spec.dim) throw ConfigError("field and kernel dimensions differ");
}

// Directional integrand shared by the analytic evaluators: returns
// {A*total, A*inner, A*carried_error} for the paired direction theta.
struct AnalyticSetup {
    int n;
    double eps, R, ux;
    double R2;
    Mat H;
    std::vector<double> shell_br;
    AdaptiveOptions ropt;
};

EvalResult finish(const QuadResult<4>& ang, double extra_value, double tail, bool radial_ok,
                  const char* what) {
    EvalResult r;
    r.value = ang.value[0] + extra_value;
    r.inner_contribution = ang.value[1];
    r.tail_bound = tail + ang.value[3];
    r.err_estimate = ang.err + std::abs(ang.value[2]) + r.tail_bound;
    r.converged = ang.converged && radial_ok;
    if (!r.converged) throw QuadratureError(what, r);
    return r;
}

// Far field R <= r <= R / kFarT, integrated in t = R / r so that the
// algebraic kernel tail becomes t^{alpha - 1} on (kFarT, 1]. Beyond R / kFarT
// only the u(x) part is kept and the rest is bounded.
constexpr double kFarT = 1e-60;

template <class P>
QuadResult<1> far_field(P&& p, const KernelSpec& spec, double R, const AdaptiveOptions& ropt) {
    const int n = spec.dim;
    auto f = [&](double t) {
        const double r = R / t;
        return std::array<double, 1>{p(r) * radial_factor(spec, r) * std::pow(r, n + 1) / R};
    };
    static const std::vector<double> br = geometric_breaks(kFarT, 1.0, 100.0, false);
    return integrate_adaptive<1>(f, br, ropt);
}

EvalResult eval_LK_analytic(const Field& u, const KernelSpec& spec, const Vec& x,
                            const QuadratureConfig& cfg) {
    if (!u.has_hessian()) throw ConfigError("eval_LK on an analytic field requires its Hessian");
    const int n = spec.dim;
    const double eps = cfg.eps_inner, R = cfg.r_outer;
    const double ux = u.value(x);
    const Mat H = u.hessian(x);
    const double R2 = radial_moment(spec, 0.0, eps, n + 1);
    const AngularMoments mom = angular_moments(spec);
    const double tail_R = radial_tail(spec, R);
    const double mass_far = mom.mass * radial_tail(spec, R / kFarT);
    const std::vector<double> sbr = shell_breaks(eps, R);
    const double rho = R - norm(x, n);
    const double tsup = rho > 0.0 ? u.tail_sup(rho) : u.sup_bound();

    double scale = mom.mass * (frobenius(H, n) * radial_moment(spec, 0.0, 1.0, n + 1) +
                               2.0 * (std::abs(ux) + u.sup_bound()) * radial_tail(spec, 1.0));
    if (!std::isfinite(scale) || scale <= 0.0) scale = 1.0;

    AdaptiveOptions ropt;
    ropt.rel_tol = 0.1 * cfg.rel_tol;
    ropt.abs_tol = 1e-3 * cfg.rel_tol * scale / mom.mass;
    ropt.max_depth = cfg.max_depth;
    bool radial_ok = true;

    auto direction = [&](const Vec& th) -> std::array<double, 4> {
        const double A = angular_factor(spec, th);
        const double q = quad_form(H, th, n);
        auto e = [&](double r) { return 2.0 * ux - u.value(axpy(r, th, x)) - u.value(axpy(-r, th, x)); };
        const double up = u.value(axpy(eps, th, x)), um = u.value(axpy(-eps, th, x));
        const double res_eps = 2.0 * ux - up - um + q * eps * eps;
        const double delta = 8.0 * kMachEps * (std::abs(ux) + std::abs(up) + std::abs(um));
        const double C4 = std::abs(res_eps) / (eps * eps * eps * eps);
        double rc = C4 > 0.0 ? std::pow(delta / C4, 0.25) : 0.1 * eps;
        rc = std::clamp(rc, 1e-12 * eps, 0.1 * eps);
        const double trunc_err = C4 * radial_moment(spec, 0.0, rc, n + 3);
        const double noise_err = delta * radial_moment(spec, rc, eps, n - 1);

        auto res_f = [&](double r) {
            return std::array<double, 1>{(e(r) + q * r * r) * radial_factor(spec, r) * std::pow(r, n - 1)};
        };
        const std::vector<double> rbr = geometric_breaks(rc, eps, 4.0, false);
        // The residual cannot be resolved below its rounding noise.
        AdaptiveOptions res_opt = ropt;
        res_opt.abs_tol = std::max(ropt.abs_tol, noise_err);
        const auto res = integrate_adaptive<1>(res_f, rbr, res_opt);
        auto shell_f = [&](double r) {
            return std::array<double, 1>{e(r) * radial_factor(spec, r) * std::pow(r, n - 1)};
        };
        const auto shell = integrate_adaptive<1>(shell_f, sbr, ropt);
        radial_ok = radial_ok && res.converged && shell.converged;
        // Oscillating far fields fall back to the exact u(x) part plus a bound.
        const auto far = far_field(e, spec, R, ropt);
        const double far_value = far.converged ? far.value[0] : 2.0 * ux * tail_R;
        const double far_bound = far.converged ? 0.0 : 2.0 * tsup * tail_R;
        const double inner = -q * R2 + res.value[0];
        const double err = res.err + shell.err + (far.converged ? far.err : 0.0) + trunc_err + noise_err;
        return {A * (inner + shell.value[0] + far_value), A * inner, A * err, A * far_bound};
    };

    AdaptiveOptions aopt;
    aopt.rel_tol = cfg.rel_tol;
    aopt.abs_tol = 1e-3 * cfg.rel_tol * scale;
    aopt.max_depth = cfg.max_depth;
    aopt.err_components = 2;
    const auto ang = integrate_sphere<4>(n, true, direction, aopt);
    return finish(ang, ux * mass_far, tsup * mass_far, radial_ok,
                  "eval_LK: adaptive refinement did not converge");
}

EvalResult eval_FGK_analytic(const Field& u, const NonlinearitySpec& g, const KernelSpec& spec,
                             const Vec& x, const QuadratureConfig& cfg) {
    const int n = spec.dim;
    const double eps = cfg.eps_inner, R = cfg.r_outer;
    const double ux = u.value(x);
    const AngularMoments mom = angular_moments(spec);
    const double tail_R = radial_tail(spec, R);
    const double mass_far = mom.mass * radial_tail(spec, R / kFarT);
    const std::vector<double> sbr = shell_breaks(eps, R);
    const double gamma = g.gamma;
    const double rho = R - norm(x, n);
    const double ts = rho > 0.0 ? u.tail_sup(rho) : u.sup_bound();
    const double gx = eval_G(g, ux);
    const double dev = std::max(std::abs(eval_G(g, ux + ts) - gx), std::abs(eval_G(g, ux - ts) - gx));
    const double su = std::isfinite(u.sup_bound()) ? u.sup_bound() : 1.0;

    double scale = mom.mass * std::abs(eval_G(g, 2.0 * (std::abs(ux) + su))) * radial_tail(spec, 1.0);
    if (!std::isfinite(scale) || scale <= 0.0) scale = 1.0;

    AdaptiveOptions ropt;
    ropt.rel_tol = 0.1 * cfg.rel_tol;
    ropt.abs_tol = 1e-3 * cfg.rel_tol * scale / mom.mass;
    ropt.max_depth = cfg.max_depth;
    bool radial_ok = true;
    const double rc = 1e-6 * eps;

    auto direction = [&](const Vec& th) -> std::array<double, 4> {
        const double A = angular_factor(spec, th);
        auto p = [&](double r) {
            return eval_G(g, ux - u.value(axpy(r, th, x))) + eval_G(g, ux - u.value(axpy(-r, th, x)));
        };
        auto f = [&](double r) {
            return std::array<double, 1>{p(r) * radial_factor(spec, r) * std::pow(r, n - 1)};
        };
        std::vector<double> ibr = geometric_breaks(rc, eps, 4.0, false);
        const auto in = integrate_adaptive<1>(f, ibr, ropt);
        const auto shell = integrate_adaptive<1>(f, sbr, ropt);
        radial_ok = radial_ok && in.converged && shell.converged;
        // Below rc the paired integrand is O(r^{gamma+2}); extrapolate its size.
        const double prc = std::abs(p(rc));
        const double trunc_err =
            prc * std::pow(rc, -(gamma + 2.0)) * radial_moment(spec, 0.0, rc, gamma + 2.0 + n - 1);
        const double noise =
            std::abs(eval_G(g, 8.0 * kMachEps * (std::abs(ux) + su))) * radial_moment(spec, rc, eps, n - 1);
        const auto far = far_field(p, spec, R, ropt);
        const double far_value = far.converged ? far.value[0] : 2.0 * gx * tail_R;
        const double far_bound = far.converged ? 0.0 : 2.0 * dev * tail_R;
        const double err = in.err + shell.err + (far.converged ? far.err : 0.0) + trunc_err + noise;
        return {A * (in.value[0] + shell.value[0] + far_value), A * in.value[0], A * err, A * far_bound};
    };

    AdaptiveOptions aopt;
    aopt.rel_tol = cfg.rel_tol;
    aopt.abs_tol = 1e-3 * cfg.rel_tol * scale;
    aopt.max_depth = cfg.max_depth;
    aopt.err_components = 2;
    const auto ang = integrate_sphere<4>(n, true, direction, aopt);
    return finish(ang, gx * mass_far, 2.0 * dev * mass_far, radial_ok,
                  "eval_FGK: adaptive refinement did not converge");
}

// ---------------------------------------------------------------- lattice

void add_point(const KernelSpec& spec, const Vec& y, double w, const Vec& d, double h, int n,
               std::vector<CellPoint>& out) {
    CellPoint p;
    p.wk = w * eval_kernel(spec, y);
    const double t0 = std::clamp((y[0] - d[0]) / h, 0.0, 1.0);
    if (n == 1) {
        p.phi = {1.0 - t0, t0, 0.0, 0.0};
    } else {
        const double t1 = std::clamp((y[1] - d[1]) / h, 0.0, 1.0);
        p.phi = {(1.0 - t0) * (1.0 - t1), t0 * (1.0 - t1), (1.0 - t0) * t1, t0 * t1};
    }
    out.push_back(p);
}

void tensor_rule(const KernelSpec& spec, const Vec& d, double h, int n, int m,
                 std::vector<CellPoint>& out) {
    const GaussRule& gr = gauss_legendre(m);
    const double half = 0.5 * h;
    if (n == 1) {
        for (int a = 0; a < m; ++a) {
            const Vec y{d[0] + half * (1.0 + gr.x[a]), 0.0, 0.0};
            add_point(spec, y, half * gr.w[a], d, h, n, out);
        }
        return;
    }
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            const Vec y{d[0] + half * (1.0 + gr.x[a]), d[1] + half * (1.0 + gr.x[b]), 0.0};
            add_point(spec, y, half * half * gr.w[a] * gr.w[b], d, h, n, out);
        }
}

void segment_rule(const KernelSpec& spec, double a, double b, const Vec& d, double h,
                  std::vector<CellPoint>& out) {
    if (!(b > a)) return;
    const GaussRule& gr = gauss_legendre(8);
    const double c = 0.5 * (a + b), hl = 0.5 * (b - a);
    for (int k = 0; k < 8; ++k) add_point(spec, Vec{c + hl * gr.x[k], 0.0, 0.0}, hl * gr.w[k], d, h, 1, out);
}

void polar_rule(const KernelSpec& spec, const Vec& d, double h, double eps,
                std::vector<CellPoint>& out) {
    const std::array<Vec, 4> P = {Vec{d[0], d[1], 0.0}, Vec{d[0] + h, d[1], 0.0},
                                  Vec{d[0], d[1] + h, 0.0}, Vec{d[0] + h, d[1] + h, 0.0}};
    const double phic = std::atan2(d[1] + 0.5 * h, d[0] + 0.5 * h);
    auto unwrap = [&](double px, double py) {
        return phic + std::remainder(std::atan2(py, px) - phic, 2.0 * kPi);
    };
    std::vector<double> br;
    for (const Vec& p : P) br.push_back(unwrap(p[0], p[1]));
    const double lo = *std::min_element(br.begin(), br.end());
    const double hi = *std::max_element(br.begin(), br.end());
    // Circle / edge intersections.
    const std::array<std::array<int, 2>, 4> edges = {{{0, 1}, {1, 3}, {3, 2}, {2, 0}}};
    for (const auto& e : edges) {
        const Vec& a = P[e[0]];
        const Vec& b = P[e[1]];
        const double ex = b[0] - a[0], ey = b[1] - a[1];
        const double qa = ex * ex + ey * ey;
        const double qb = 2.0 * (a[0] * ex + a[1] * ey);
        const double qc = a[0] * a[0] + a[1] * a[1] - eps * eps;
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc < 0.0) continue;
        const double sq = std::sqrt(disc);
        for (double t : {(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)})
            if (t > 0.0 && t < 1.0) br.push_back(unwrap(a[0] + t * ex, a[1] + t * ey));
    }
    // Coordinate axes (kinks of p-norm kernels).
    for (int k = -8; k <= 8; ++k) {
        const double ang = 0.5 * kPi * k;
        if (ang > lo && ang < hi) br.push_back(ang);
    }
    std::sort(br.begin(), br.end());

    const GaussRule& ga = gauss_legendre(8);
    const GaussRule& gr = gauss_legendre(8);
    for (std::size_t s = 0; s + 1 < br.size(); ++s) {
        const double pa = br[s], pb = br[s + 1];
        if (!(pb - pa > 1e-14)) continue;
        const double pc = 0.5 * (pa + pb), ph = 0.5 * (pb - pa);
        for (int ia = 0; ia < 8; ++ia) {
            const double phi = pc + ph * ga.x[ia];
            const Vec th{std::cos(phi), std::sin(phi), 0.0};
            double tin = 0.0, tout = kInf;
            bool hit = true;
            for (int i = 0; i < 2; ++i) {
                if (std::abs(th[i]) < 1e-300) {
                    if (!(d[i] <= 0.0 && 0.0 <= d[i] + h)) hit = false;
                    continue;
                }
                double t1 = d[i] / th[i], t2 = (d[i] + h) / th[i];
                if (t1 > t2) std::swap(t1, t2);
                tin = std::max(tin, t1);
                tout = std::min(tout, t2);
            }
            if (!hit) continue;
            tin = std::max(tin, eps);
            if (!(tout > tin)) continue;
            const double rc = 0.5 * (tin + tout), rh = 0.5 * (tout - tin);
            for (int ir = 0; ir < 8; ++ir) {
                const double r = rc + rh * gr.x[ir];
                add_point(spec, Vec{r * th[0], r * th[1], 0.0}, ph * ga.w[ia] * rh * gr.w[ir] * r, d, h, 2,
                          out);
            }
        }
    }
}

// Finite-difference gradient and Hessian of a grid field with step h.
void fd_derivatives(const Field& u, const Vec& x, double h, int n, Vec& grad, Mat& hess) {
    const double u0 = u.value(x);
    grad = Vec{};
    hess = Mat{};
    for (int i = 0; i < n; ++i) {
        Vec p = x, m = x;
        p[i] += h;
        m[i] -= h;
        const double up = u.value(p), um = u.value(m);
        grad[i] = (up - um) / (2.0 * h);
        hess[i][i] = (up - 2.0 * u0 + um) / (h * h);
        for (int j = 0; j < i; ++j) {
            Vec pp = p, pm = p, mp = m, mm = m;
            pp[j] += h;
            pm[j] -= h;
            mp[j] += h;
            mm[j] -= h;
            hess[i][j] = hess[j][i] =
                (u.value(pp) - u.value(pm) - u.value(mp) + u.value(mm)) / (4.0 * h * h);
        }
    }
}

double taylor_term(const Mat& M, const Mat& D, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += M[i][j] * D[i][j];
    return -0.5 * s;
}

template <class G>
EvalResult eval_grid(const Field& u, const KernelSpec& spec, const Vec& x,
                     const QuadratureConfig& cfg, G&& gfun, const InnerGRule* inner_rule) {
    const GridData& g = u.grid_data();
    const int n = g.dim;
    if (n > 2) throw ConfigError("grid evaluation supports dim 1 and 2");
    const double h = g.h, eps = cfg.eps_inner;
    if (h > 0.25 * eps * (1.0 + 1e-12)) throw ConfigError("grid spacing must satisfy h <= eps_inner/4");
    if (g.boundary_distance(x) < eps)
        throw DomainError("evaluation point is closer than eps_inner to the grid boundary");
    const double ux = u.value(x);

    Vec grad{}, grad2{};
    Mat D{}, D2{};
    fd_derivatives(u, x, h, n, grad, D);
    fd_derivatives(u, x, 2.0 * h, n, grad2, D2);
    double D2max = 0.0;
    for (int a = 0; a < n; ++a) D2max = std::max(D2max, std::abs(D[a][a]));
    // Multilinear interpolation error bound per sample.
    const double delta = h * h * D2max / 8.0;

    std::vector<CellPoint> pts;
    pts.reserve(1024);
    double S = 0.0, E = 0.0;
    const int cx = g.counts[0] - 1, cy = n == 2 ? g.counts[1] - 1 : 1;
    for (int j = 0; j < cy; ++j)
        for (int i = 0; i < cx; ++i) {
            const std::array<int, 3> k{i, j, 0};
            const Vec node = g.node(k);
            Vec d{};
            for (int a = 0; a < n; ++a) d[a] = node[a] - x[a];
            pts.clear();
            cell_points(spec, d, h, eps, pts);
            if (pts.empty()) continue;
            std::array<double, 4> uc{};
            for (int c = 0; c < (1 << n); ++c) {
                std::array<int, 3> kc = k;
                for (int a = 0; a < n; ++a)
                    if (c & (1 << a)) kc[a] += 1;
                uc[c] = g.samples[g.index(kc)];
            }
            for (const auto& p : pts) {
                double uy = 0.0;
                for (int c = 0; c < (1 << n); ++c) uy += p.phi[c] * uc[c];
                const double gv = gfun(ux - uy);
                S += p.wk * gv;
                E += p.wk * std::abs(gfun(ux - uy + delta) - gv);
            }
        }
    const double mext = box_exterior_mass(spec, g, x);
    double inner = 0.0, inner2 = 0.0;
    if (inner_rule) {
        inner = inner_rule->apply(grad, D);
        inner2 = inner_rule->apply(grad2, D2);
    } else {
        const Mat M = inner_moment_matrix(spec, eps);
        inner = taylor_term(M, D, n);
        inner2 = taylor_term(M, D2, n);
    }

    EvalResult r;
    r.value = S + gfun(ux - g.exterior_value) * mext + inner;
    r.inner_contribution = inner;
    r.tail_bound = 0.0;
    r.err_estimate = E + std::abs(inner - inner2) + 1e-13 * (std::abs(S) + std::abs(inner));
    return r;
}

}  // namespace

void validate(const QuadratureConfig& c) {
    if (!(c.eps_inner > 0.0)) throw ConfigError("quadrature.eps_inner must be positive");
    if (!(c.eps_inner < c.r_outer)) throw ConfigError("quadrature.eps_inner must be below r_outer");
    if (!(c.rel_tol > 0.0 && c.rel_tol <= 0.1)) throw ConfigError("quadrature.rel_tol must lie in (0, 0.1]");
    if (c.max_depth < 1 || c.max_depth > 30) throw ConfigError("quadrature.max_depth must lie in [1, 30]");
}

QuadratureConfig default_quadrature(const Field& u) {
    QuadratureConfig c;
    if (u.form() == Field::Form::Grid) c.eps_inner = std::max(4.0 * u.grid_data().h, 1e-3);
    return c;
}

nlohmann::json to_json(const QuadratureConfig& c) {
    return {{"eps_inner", c.eps_inner}, {"r_outer", c.r_outer}, {"rel_tol", c.rel_tol},
            {"max_depth", c.max_depth}};
}

QuadratureConfig quadrature_from_json(const nlohmann::json& j) {
    QuadratureConfig c;
    if (j.is_null()) return c;
    if (!j.is_object()) throw ConfigError("quadrature must be an object");
    try {
        c.eps_inner = j.value("eps_inner", c.eps_inner);
        c.r_outer = j.value("r_outer", c.r_outer);
        c.rel_tol = j.value("rel_tol", c.rel_tol);
        c.max_depth = j.value("max_depth", c.max_depth);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("quadrature: malformed value: ") + e.what());
    }
    validate(c);
    return c;
}

double tail_bound(double sup_bound, const KernelSpec& spec, double R) {
    return 2.0 * sup_bound * exterior_mass(spec, R);
}

void cell_points(const KernelSpec& spec, const Vec& d, double h, double eps,
                 std::vector<CellPoint>& out) {
    const int n = spec.dim;
    if (n > 2) throw ConfigError("lattice quadrature supports dim 1 and 2");
    double dmin2 = 0.0, dmax2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = d[i], b = d[i] + h;
        const double near = (a <= 0.0 && 0.0 <= b) ? 0.0 : std::min(std::abs(a), std::abs(b));
        const double far = std::max(std::abs(a), std::abs(b));
        dmin2 += near * near;
        dmax2 += far * far;
    }
    const double dmin = std::sqrt(dmin2), dmax = std::sqrt(dmax2);
    if (dmax <= eps) return;
    if (dmin >= eps) {
        const int m = dmin < 8.0 * h ? 6 : (dmin < 32.0 * h ? 4 : 3);
        tensor_rule(spec, d, h, n, m, out);
        return;
    }
    if (n == 1) {
        segment_rule(spec, std::max(d[0], eps), d[0] + h, d, h, out);
        segment_rule(spec, d[0], std::min(d[0] + h, -eps), d, h, out);
        return;
    }
    polar_rule(spec, d, h, eps, out);
}

double box_exterior_mass(const KernelSpec& spec, const GridData& g, const Vec& x) {
    const int n = spec.dim;
    const Vec up = g.hi();
    if (n == 1) {
        return angular_factor(spec, Vec{-1.0, 0.0, 0.0}) * radial_tail(spec, x[0] - g.lo[0]) +
               angular_factor(spec, Vec{1.0, 0.0, 0.0}) * radial_tail(spec, up[0] - x[0]);
    }
    if (n != 2) throw ConfigError("box exterior mass supports dim 1 and 2");
    auto rho = [&](const Vec& th) {
        double r = kInf;
        for (int i = 0; i < 2; ++i) {
            if (th[i] > 0.0) r = std::min(r, (up[i] - x[i]) / th[i]);
            if (th[i] < 0.0) r = std::min(r, (g.lo[i] - x[i]) / th[i]);
        }
        return r;
    };
    std::vector<double> br = {0.0, 0.5 * kPi, kPi, 1.5 * kPi, 2.0 * kPi};
    for (double cx : {g.lo[0], up[0]})
        for (double cy : {g.lo[1], up[1]}) {
            double a = std::atan2(cy - x[1], cx - x[0]);
            if (a < 0.0) a += 2.0 * kPi;
            br.push_back(a);
        }
    std::sort(br.begin(), br.end());
    auto f = [&](double phi) {
        const Vec th{std::cos(phi), std::sin(phi), 0.0};
        return std::array<double, 1>{angular_factor(spec, th) * radial_tail(spec, rho(th))};
    };
    AdaptiveOptions opt;
    opt.rel_tol = 1e-11;
    opt.abs_tol = 0.0;
    return integrate_adaptive<1>(f, br, opt).value[0];
}

Mat inner_moment_matrix(const KernelSpec& spec, double eps) {
    const double R2 = radial_moment(spec, 0.0, eps, spec.dim + 1);
    Mat M = angular_moments(spec).second;
    for (auto& row : M)
        for (double& v : row) v *= R2;
    return M;
}

InnerGRule::InnerGRule(const KernelSpec& spec, const NonlinearitySpec& g, double eps)
    : g_(g), n_(spec.dim) {
    if (n_ > 2) throw ConfigError("lattice quadrature supports dim 1 and 2");
    if (n_ == 1) {
        theta_.push_back(Vec{1.0, 0.0, 0.0});
        wa_.push_back(angular_factor(spec, theta_.back()));
    } else {
        const GaussRule& ga = gauss_legendre(16);
        for (int q = 0; q < 2; ++q)
            for (int k = 0; k < 16; ++k) {
                const double phi = 0.25 * kPi * (2 * q + 1 + ga.x[k]);
                theta_.push_back(Vec{std::cos(phi), std::sin(phi), 0.0});
                wa_.push_back(0.25 * kPi * ga.w[k] * angular_factor(spec, theta_.back()));
            }
    }
    // r = eps * t^m flattens the algebraic behaviour at the origin.
    const double gamma = g_is_linear(g) ? 0.0 : g.gamma;
    const double m = std::clamp(5.0 / (gamma + 2.0 - spec.alpha), 2.0, 12.0);
    const GaussRule& gr = gauss_legendre(24);
    for (int k = 0; k < 24; ++k) {
        const double t = 0.5 * (1.0 + gr.x[k]);
        const double r = eps * std::pow(t, m);
        r_.push_back(r);
        wr_.push_back(0.5 * gr.w[k] * eps * m * std::pow(t, m - 1.0) * radial_factor(spec, r) *
                      std::pow(r, n_ - 1));
    }
}

double InnerGRule::apply(const Vec& grad, const Mat& hess) const {
    double s = 0.0;
    for (std::size_t a = 0; a < theta_.size(); ++a) {
        const double gt = dot(grad, theta_[a], n_);
        const double q = quad_form(hess, theta_[a], n_);
        double row = 0.0;
        for (std::size_t k = 0; k < r_.size(); ++k) {
            const double r = r_[k];
            row += wr_[k] * (eval_G(g_, -gt * r - 0.5 * q * r * r) + eval_G(g_, gt * r - 0.5 * q * r * r));
        }
        s += wa_[a] * row;
    }
    return s;
}

double InnerGRule::secant_weight(const Vec& grad, const Mat& hess) const {
    double num = 0.0, den = 0.0;
    for (std::size_t a = 0; a < theta_.size(); ++a) {
        const double gt = dot(grad, theta_[a], n_);
        const double q = quad_form(hess, theta_[a], n_);
        for (std::size_t k = 0; k < r_.size(); ++k) {
            const double r = r_[k];
            const double lm = -gt * r - 0.5 * q * r * r, lp = gt * r - 0.5 * q * r * r;
            const double w = wa_[a] * wr_[k];
            num += w * (eval_G(g_, lm) * lm + eval_G(g_, lp) * lp);
            den += w * (lm * lm + lp * lp);
        }
    }
    return den > 0.0 ? num / den : 0.0;
}

EvalResult eval_LK(const Field& u, const KernelSpec& spec, const Vec& x,
                   const QuadratureConfig& cfg) {
    check_common(u, spec, cfg);
    if (u.form() == Field::Form::Analytic) return eval_LK_analytic(u, spec, x, cfg);
    return eval_grid(u, spec, x, cfg, [](double t) { return t; }, nullptr);
}

EvalResult eval_FGK(const Field& u, const NonlinearitySpec& g, const KernelSpec& spec,
                    const Vec& x, const QuadratureConfig& cfg) {
    check_common(u, spec, cfg);
    validate(g);
    if (g_is_linear(g)) return eval_LK(u, spec, x, cfg);
    // Integrability of the paired inner integrand ~ r^{gamma+2} K.
    if (!(g.gamma + 2.0 > spec.alpha + 0.05))
        throw ConfigError("nonlinearity.gamma too small for the inner-ball integrand");
    if (u.form() == Field::Form::Analytic) return eval_FGK_analytic(u, g, spec, x, cfg);
    const InnerGRule rule(spec, g, cfg.eps_inner);
    return eval_grid(u, spec, x, cfg, [&](double t) { return eval_G(g, t); }, &rule);
}

}  // namespace nlop
