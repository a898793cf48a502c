#include "nlop/moving_planes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

namespace nlop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int axis_index(int axis, int dim) {
    if (axis < 1 || axis > dim) throw ConfigError("axis must lie in [1, dim]");
    return axis - 1;
}

// Half-grid index m with lambda = lo + m h / 2; throws unless exact.
int half_grid_index(const GridData& g, int a, double lambda) {
    const double s = 2.0 * (lambda - g.lo[a]) / g.h;
    const double m = std::round(s);
    if (std::abs(s - m) > 1e-9 * std::max(1.0, std::abs(s)))
        throw ConfigError("plane.lambda must lie on a half-grid point of the lattice");
    return static_cast<int>(m);
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2) return 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

nlohmann::json vec_json(const Vec& v, int n) {
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < n; ++i) a.push_back(v[i]);
    return a;
}

CertificateStatus classify(double w_min, double value, double err, double w_tol) {
    if (!(w_min < -w_tol)) return CertificateStatus::NoClaim;
    if (value < -err) return CertificateStatus::Confirmed;
    if (value > err) return CertificateStatus::Violated;
    return CertificateStatus::Inconclusive;
}

struct LatticeMin {
    Vec x{};
    double w = kInf;
};

// Minimum of w over the lattice nodes with x_axis < lambda.
LatticeMin scan_minimum(const Field& w, const GridData& lat, int a, double lambda) {
    LatticeMin m;
    for (std::size_t idx = 0; idx < lat.size(); ++idx) {
        const Vec x = lat.node(idx);
        if (!(x[a] < lambda)) continue;
        const double v = lat.samples.empty() ? w.value(x) : lat.samples[idx];
        if (v < m.w) {
            m.w = v;
            m.x = x;
        }
    }
    return m;
}

// Newton steps on an analytic w, kept inside Sigma_lambda.
void polish_minimum(const Field& w, int a, double lambda, LatticeMin& m) {
    const int n = w.dim();
    for (int it = 0; it < 20; ++it) {
        const Vec g = w.gradient(m.x);
        const Mat H = w.hessian(m.x);
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic> Hm(n, n);
        Eigen::VectorXd gv(n);
        for (int i = 0; i < n; ++i) {
            gv[i] = g[i];
            for (int j = 0; j < n; ++j) Hm(i, j) = H[i][j];
        }
        const Eigen::VectorXd step = Hm.ldlt().solve(-gv);
        if (!step.allFinite()) return;
        Vec x = m.x;
        for (int i = 0; i < n; ++i) x[i] += step[i];
        if (!(x[a] < lambda)) return;
        const double v = w.value(x);
        if (!(v <= m.w)) return;
        const double moved = step.norm();
        m.x = x;
        m.w = v;
        if (moved < 1e-14) return;
    }
}

}  // namespace

Vec reflect(const Vec& x, const PlaneReflection& plane) {
    if (plane.axis < 1 || plane.axis > kMaxDim) throw ConfigError("axis must lie in [1, dim]");
    Vec y = x;
    y[plane.axis - 1] = 2.0 * plane.lambda - x[plane.axis - 1];
    return y;
}

Field w_lambda(const Field& u, const PlaneReflection& plane, int pad) {
    const int n = u.dim();
    const int a = axis_index(plane.axis, n);
    if (u.form() == Field::Form::Analytic) {
        auto val = [u, plane](const Vec& x) { return u.value(reflect(x, plane)) - u.value(x); };
        auto grad = [u, plane, a](const Vec& x) {
            Vec gr = u.gradient(reflect(x, plane));
            gr[a] = -gr[a];
            const Vec g0 = u.gradient(x);
            for (int i = 0; i < 3; ++i) gr[i] -= g0[i];
            return gr;
        };
        std::function<Mat(const Vec&)> hess;
        if (u.has_hessian())
            hess = [u, plane, a](const Vec& x) {
                Mat H = u.hessian(reflect(x, plane));
                for (int i = 0; i < 3; ++i)
                    if (i != a) H[i][a] = H[a][i] = -H[a][i];
                const Mat H0 = u.hessian(x);
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) H[i][j] -= H0[i][j];
                return H;
            };
        const double shift = 2.0 * std::abs(plane.lambda);
        auto tail = [u, shift](double rho) {
            return u.tail_sup(rho) + u.tail_sup(std::max(0.0, rho - shift));
        };
        return Field::analytic(n, val, grad, hess, 2.0 * u.sup_bound(), tail);
    }
    const GridData& g = u.grid_data();
    const int m = half_grid_index(g, a, plane.lambda);
    const int cnt = g.counts[a];
    const int kmin = std::min(0, m - (cnt - 1)) - pad;
    const int kmax = std::max(cnt - 1, m) + pad;
    GridData w;
    w.dim = n;
    w.h = g.h;
    w.lo = g.lo;
    w.counts = g.counts;
    for (int i = 0; i < n; ++i)
        if (i != a) {
            w.lo[i] = g.lo[i] - pad * g.h;
            w.counts[i] = g.counts[i] + 2 * pad;
        }
    w.lo[a] = g.lo[a] + kmin * g.h;
    w.counts[a] = kmax - kmin + 1;
    w.exterior_value = 0.0;
    w.samples.assign(w.size(), 0.0);
    for (std::size_t idx = 0; idx < w.size(); ++idx) {
        auto k = w.multi_index(idx);
        std::array<int, 3> ku = k;
        for (int i = 0; i < n; ++i) ku[i] += i == a ? kmin : -pad;
        std::array<int, 3> kr = ku;
        kr[a] = m - ku[a];
        w.samples[idx] = g.at(kr) - g.at(ku);
    }
    return Field::grid(std::move(w));
}

std::string to_string(CertificateStatus s) {
    switch (s) {
    case CertificateStatus::NoClaim: return "no_claim";
    case CertificateStatus::Confirmed: return "confirmed";
    case CertificateStatus::Inconclusive: return "inconclusive";
    case CertificateStatus::Violated: return "violated";
    }
    return "unknown";
}

nlohmann::json to_json(const MinimumCertificate& c) {
    return {{"x_min", vec_json(c.x_min, c.kernel.dim)},
            {"w_min", c.w_min},
            {"LK_w_at_min", c.LK_w_at_min},
            {"err_estimate", c.err_estimate},
            {"grid_h", c.grid_h},
            {"status", to_string(c.status)},
            {"kernel", to_json(c.kernel)}};
}

MinimumCertificate check_antisym_max_principle(const Field& u, const KernelSpec& spec,
                                               const PlaneReflection& plane,
                                               const QuadratureConfig& cfg,
                                               const std::optional<ScanLattice>& scan) {
    validate(spec);
    validate(cfg);
    if (u.dim() != spec.dim) throw ConfigError("field and kernel dimensions differ");
    const int n = u.dim();
    const int a = axis_index(plane.axis, n);
    MinimumCertificate cert;
    cert.kernel = spec;
    QuadratureConfig q = cfg;
    LatticeMin m;
    Field w;
    if (u.form() == Field::Form::Grid) {
        const int pad = static_cast<int>(std::ceil(std::max(q.eps_inner, 4.0 * u.grid_data().h) /
                                                   u.grid_data().h)) + 2;
        w = w_lambda(u, plane, pad);
        const GridData& wg = w.grid_data();
        q.eps_inner = std::max(q.eps_inner, 4.0 * wg.h);
        m = scan_minimum(w, wg, a, plane.lambda);
        cert.grid_h = wg.h;
    } else {
        w = w_lambda(u, plane);
        const ScanLattice s = scan.value_or(ScanLattice{});
        GridData lat;
        lat.dim = n;
        lat.lo = s.lo;
        lat.h = s.h;
        lat.counts = s.counts;
        for (int i = n; i < 3; ++i) lat.counts[i] = 1;
        m = scan_minimum(w, lat, a, plane.lambda);
        if (std::isfinite(m.w) && w.has_hessian()) polish_minimum(w, a, plane.lambda, m);
        cert.grid_h = s.h;
    }
    if (!std::isfinite(m.w)) return cert;
    cert.x_min = m.x;
    cert.w_min = m.w;
    const double w_tol = 1e-13 * std::max(1.0, w.sup_bound());
    if (m.w < -w_tol) {
        const EvalResult r = eval_LK(w, spec, m.x, q);
        cert.LK_w_at_min = r.value;
        cert.err_estimate = r.err_estimate;
    }
    cert.status = classify(m.w, cert.LK_w_at_min, cert.err_estimate, w_tol);
    return cert;
}

MinimumCertificate check_simple_max_principle(const Field& u, const NonlinearitySpec& g,
                                              const KernelSpec& spec, const Vec& x_min,
                                              const QuadratureConfig& cfg) {
    MinimumCertificate cert;
    cert.kernel = spec;
    cert.x_min = x_min;
    cert.w_min = u.value(x_min);
    const double w_tol = 1e-13 * std::max(1.0, u.sup_bound());
    if (cert.w_min < -w_tol) {
        const EvalResult r = eval_FGK(u, g, spec, x_min, cfg);
        cert.LK_w_at_min = r.value;
        cert.err_estimate = r.err_estimate;
    }
    cert.status = classify(cert.w_min, cert.LK_w_at_min, cert.err_estimate, w_tol);
    return cert;
}

nlohmann::json to_json(const ScalingReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"param", row.param}, {"integral", row.integral}, {"reference", row.reference}});
    return {{"rows", rows}, {"slope", r.slope}, {"holds", r.holds}, {"note", r.note}};
}

ScalingReport narrow_region_bound(const KernelSpec& spec, const PlaneReflection& plane,
                                  const std::vector<double>& deltas) {
    validate(spec);
    axis_index(plane.axis, spec.dim);
    if (deltas.size() < 2) throw ConfigError("narrow_region_bound needs at least two deltas");
    ScalingReport rep;
    std::vector<double> xs, ys;
    for (double d : deltas) {
        if (!(d > 0.0)) throw ConfigError("delta must be positive");
        // z = x0 - y^lambda ranges over {z_axis < -delta/2}.
        const double I = half_space_mass(spec, plane.axis, 0.5 * d);
        xs.push_back(d);
        ys.push_back(I);
        rep.rows.push_back({d, I, xs.size() >= 2 ? fit_slope(xs, ys) : 0.0});
    }
    rep.slope = fit_slope(xs, ys);
    rep.holds = rep.slope <= -0.9 * spec.alpha;
    rep.note = "slope of log integral against log delta";
    return rep;
}

ScalingReport decay_at_infinity_bound(const KernelSpec& spec, const PlaneReflection& plane,
                                      const std::vector<double>& radii) {
    validate(spec);
    axis_index(plane.axis, spec.dim);
    if (radii.size() < 2) throw ConfigError("decay_at_infinity_bound needs at least two radii");
    ScalingReport rep;
    std::vector<double> xs, ys;
    for (double r : radii) {
        if (!(r > 0.0)) throw ConfigError("radius must be positive");
        // lambda = 0, x0 = -r e_axis: z = x0 - y^0 ranges over {z_axis < -r}.
        xs.push_back(r);
        ys.push_back(half_space_mass(spec, plane.axis, r));
    }
    rep.slope = fit_slope(xs, ys);
    const double alpha = spec.alpha;
    if (spec.kind == KernelKind::Exponential) {
        const double r0 = xs.front();
        const double logC = std::log(ys.front()) + alpha * std::log(r0) + 16.0 * r0 * r0;
        rep.holds = true;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double logb = logC - 16.0 * xs[i] * xs[i] - alpha * std::log(xs[i]);
            rep.rows.push_back({xs[i], ys[i], std::exp(logb)});
            if (!(std::log(ys[i]) >= logb - 1e-12 * std::abs(logb))) rep.holds = false;
        }
        rep.note = "reference = C exp(-16 r^2) / r^alpha, C fitted at the first radius";
    } else {
        for (std::size_t i = 0; i < xs.size(); ++i)
            rep.rows.push_back({xs[i], ys[i], ys.front() * std::pow(xs[i] / xs.front(), -alpha)});
        rep.holds = std::abs(rep.slope + alpha) <= 0.1 * alpha;
        rep.note = "reference = first integral scaled by (r / r0)^-alpha";
    }
    return rep;
}

nlohmann::json to_json(const MovingPlaneReport& r) {
    return {{"axis", r.axis},
            {"h", r.h},
            {"lambda_o", r.lambda_o},
            {"any_admissible", r.any_admissible},
            {"reversed_lambda_o", r.reversed_lambda_o},
            {"symmetric_verdict", r.symmetric_verdict},
            {"tolerance", r.tolerance}};
}

namespace {

struct SweepCore {
    std::vector<double> lambdas, mins;
    std::vector<Vec> args;
    std::vector<int> counts;
    double lambda_o = 0.0;
    std::size_t o_index = 0;
    bool any = false;
};

SweepCore sweep_core(const GridData& g, int a, double tolerance) {
    SweepCore s;
    const int cnt = g.counts[a];
    const int last = 2 * (cnt - 1) - 1;
    s.lambdas.resize(last);
    s.mins.resize(last);
    s.args.resize(last);
    s.counts.resize(last);
#pragma omp parallel for schedule(static)
    for (int m = 1; m <= last; ++m) {
        double best = kInf;
        Vec arg{};
        int count = 0;
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            const auto k = g.multi_index(idx);
            if (!(2 * k[a] < m)) continue;
            auto kr = k;
            kr[a] = m - k[a];
            const double w = g.at(kr) - g.samples[idx];
            ++count;
            if (w < best) {
                best = w;
                arg = g.node(k);
            }
        }
        s.lambdas[m - 1] = g.lo[a] + 0.5 * m * g.h;
        s.mins[m - 1] = best;
        s.args[m - 1] = arg;
        s.counts[m - 1] = count;
    }
    s.lambda_o = g.lo[a];
    for (std::size_t i = 0; i < s.lambdas.size(); ++i) {
        if (s.mins[i] < -tolerance) break;
        s.lambda_o = s.lambdas[i];
        s.o_index = i;
        s.any = true;
    }
    return s;
}

}  // namespace

MovingPlaneReport sweep_lambda(const Field& u, int axis, double tolerance) {
    const GridData& g = u.grid_data();
    const int a = axis_index(axis, g.dim);
    if (!(tolerance >= 0.0)) throw ConfigError("tolerance must be nonnegative");
    MovingPlaneReport rep;
    rep.axis = axis;
    rep.h = g.h;
    rep.tolerance = tolerance;
    const SweepCore fwd = sweep_core(g, a, tolerance);
    rep.lambda_grid = fwd.lambdas;
    rep.min_w = fwd.mins;
    rep.argmin = fwd.args;
    rep.sigma_count = fwd.counts;
    rep.lambda_o = fwd.lambda_o;
    rep.any_admissible = fwd.any;

    // Same lattice with the axis reversed about the box centre.
    GridData rev = g;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        auto k = g.multi_index(idx);
        k[a] = g.counts[a] - 1 - k[a];
        rev.samples[g.index(k)] = g.samples[idx];
    }
    const SweepCore bwd = sweep_core(rev, a, tolerance);
    const double centre = g.lo[a] + 0.5 * (g.counts[a] - 1) * g.h;
    rep.reversed_lambda_o = bwd.lambda_o;
    const bool mirrored = std::abs(bwd.lambda_o - (2.0 * centre - fwd.lambda_o)) <= g.h * (1.0 + 1e-9);
    rep.symmetric_verdict = fwd.any && bwd.any && std::abs(fwd.mins[fwd.o_index]) <= tolerance && mirrored;
    return rep;
}

nlohmann::json to_json(const RadialSymmetryReport& r) {
    return {{"max_deviation", r.max_deviation},
            {"exact_ring_deviation", r.exact_ring_deviation},
            {"interpolation_allowance", r.interpolation_allowance},
            {"monotone_violations", r.monotone_violations},
            {"rays", r.rays},
            {"pairs", r.pairs}};
}

RadialSymmetryReport verify_radial_symmetry(const Field& u, const Vec& center, double tolerance) {
    const GridData& g = u.grid_data();
    const int n = g.dim;
    RadialSymmetryReport rep;
    struct Node {
        double r2;
        double v;
    };
    std::vector<Node> nodes(g.size());
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const Vec x = g.node(idx);
        double r2 = 0.0;
        for (int i = 0; i < n; ++i) r2 += (x[i] - center[i]) * (x[i] - center[i]);
        nodes[idx] = {r2, g.samples[idx]};
    }
    std::sort(nodes.begin(), nodes.end(), [](const Node& l, const Node& r) {
        return l.r2 < r.r2 || (l.r2 == r.r2 && l.v < r.v);
    });
    const double band = 0.5 * g.h;
    const double ring_tol = 1e-9 * g.h * g.h;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double ri = std::sqrt(nodes[i].r2);
        for (std::size_t j = i + 1; j < nodes.size(); ++j) {
            if (std::sqrt(nodes[j].r2) - ri > band) break;
            const double d = std::abs(nodes[j].v - nodes[i].v);
            ++rep.pairs;
            rep.max_deviation = std::max(rep.max_deviation, d);
            if (nodes[j].r2 - nodes[i].r2 <= ring_tol)
                rep.exact_ring_deviation = std::max(rep.exact_ring_deviation, d);
        }
    }
    double slope = 0.0;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const auto k = g.multi_index(idx);
        for (int i = 0; i < n; ++i) {
            if (k[i] + 1 >= g.counts[i]) continue;
            auto kn = k;
            kn[i] += 1;
            slope = std::max(slope, std::abs(g.samples[g.index(kn)] - g.samples[idx]) / g.h);
        }
    }
    // A monotone radial profile varies by at most one lattice jump across a
    // radius gap below h; near the boundary the profile is only C^{0,1/2}.
    rep.interpolation_allowance = slope * g.h;

    // Rays from the node nearest the centre along axes and diagonals.
    std::array<int, 3> c{};
    for (int i = 0; i < n; ++i)
        c[i] = std::clamp(static_cast<int>(std::lround((center[i] - g.lo[i]) / g.h)), 0, g.counts[i] - 1);
    std::vector<std::array<int, 3>> dirs;
    for (int i = 0; i < n; ++i)
        for (int s : {-1, 1}) {
            std::array<int, 3> d{};
            d[i] = s;
            dirs.push_back(d);
        }
    if (n == 2)
        for (int sx : {-1, 1})
            for (int sy : {-1, 1}) dirs.push_back({sx, sy, 0});
    for (const auto& d : dirs) {
        ++rep.rays;
        auto k = c;
        double prev = g.samples[g.index(k)];
        while (true) {
            auto kn = k;
            bool inside = true;
            for (int i = 0; i < n; ++i) {
                kn[i] += d[i];
                if (kn[i] < 0 || kn[i] >= g.counts[i]) inside = false;
            }
            if (!inside) break;
            const double v = g.samples[g.index(kn)];
            if (v > prev + tolerance) ++rep.monotone_violations;
            prev = v;
            k = kn;
        }
    }
    return rep;
}

}  // namespace nlop
