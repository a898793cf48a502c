// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 when any
// criterion fails.

#include "nlop/alpha_limit.hpp"
#include "nlop/moving_planes.hpp"
#include "nlop/pv_quadrature.hpp"
#include "nlop/solver.hpp"

#include "oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace nlop;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [fail: " << what << "]";
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

QuadratureConfig sweep_cfg() {
    QuadratureConfig c;
    c.eps_inner = 0.1;
    return c;
}

// 1. Exponential family with calibrated prefactor: limit -Laplacian = 2n.
void criterion1(Verdict& v) {
    for (int n : {1, 2}) {
        const auto t0 = Clock::now();
        const auto r = sweep_alpha(gaussian_field(n), FamilySpec{}, Vec{}, kDefaultAlphas, sweep_cfg());
        const double dt = seconds_since(t0);
        v.detail << " n=" << n << " limit=" << fmt("%.6f", r.extrapolated_limit) << " ref=" << r.reference
                 << " rel=" << fmt("%.1e", r.rel_error) << " t=" << fmt("%.2fs", dt);
        v.require(r.rel_error <= 0.02, "n=" + std::to_string(n) + " relative error > 2%");
        v.require(dt <= 60.0, "n=" + std::to_string(n) + " runtime > 60 s");
    }
}

// 2. Anisotropic constant and the anisotropic alpha -> 2 limit.
void criterion2(Verdict& v) {
    const double c22 = anisotropic_constant(2, 2.0);
    v.detail << " C22=" << fmt("%.8f", c22);
    v.require(std::abs(c22 / std::numbers::pi - 1.0) <= 0.01, "C22 != pi within 1%");
    const double c24 = anisotropic_constant(2, 4.0);
    const auto b = anisotropic_bracket(2, 4.0);
    v.detail << " C24=" << fmt("%.8f", c24) << " bracket=[" << fmt("%.6f", b.lo) << "," << fmt("%.6f", b.hi) << "]";
    v.require(b.lo <= c24 && c24 <= b.hi, "C24 outside the bracket");
    FamilySpec fam;
    fam.kind = AlphaFamily::Anisotropic;
    fam.p_norm = 4.0;
    const auto r = sweep_alpha(gaussian_field(2), fam, Vec{}, kDefaultAlphas, sweep_cfg());
    const double target = -c24 * laplacian(gaussian_field(2), Vec{});
    const double rel = std::abs(r.extrapolated_limit - target) / std::abs(target);
    v.detail << " limit=" << fmt("%.6f", r.extrapolated_limit) << " target=" << fmt("%.6f", target)
             << " ratio=" << fmt("%.6f", r.extrapolated_limit / target);
    v.require(rel <= 0.03, "sweep limit off -C24*Laplacian by " + fmt("%.1f%%", 100.0 * rel));
}

// 3. Inner-ball share of the exponential operator at alpha = 1.99.
void criterion3(Verdict& v) {
    for (int n : {1, 2}) {
        const auto k = family_kernel(FamilySpec{}, n, 1.99);
        const Field u = gaussian_field(n);
        const double lap = -laplacian(u, Vec{});
        for (double eps : {0.25, 0.5}) {
            QuadratureConfig q;
            q.eps_inner = eps;
            const auto r = eval_LK(u, k, Vec{}, q);
            const double ratio = r.inner_contribution / lap, tol = r.err_estimate / lap;
            const double lo = std::exp(-eps * eps);
            v.detail << " n=" << n << " eps=" << eps << " ratio=" << fmt("%.6f", ratio) << " in [" << fmt("%.6f", lo)
                     << ",1]";
            v.require(ratio >= lo - tol && ratio <= 1.0 + tol, "ratio outside [e^{-eps^2}, 1]");
        }
    }
}

// 4. Anti-symmetric maximum principle: 20 fixtures over 5 kernels.
void criterion4(Verdict& v) {
    const auto t0 = Clock::now();
    struct Fixture {
        int n;
        Vec c;
        double rho;
        PlaneReflection plane;
    };
    const std::vector<Fixture> fx = {
        {1, Vec{-0.6}, 0.4, {1, -0.1}},
        {1, Vec{-1.2}, 0.8, {1, 0.3}},
        {2, Vec{-0.6, 0.2, 0.0}, 0.4, {1, -0.1}},
        {2, Vec{0.1, -0.9, 0.0}, 0.5, {2, -0.2}},
    };
    int count = 0, confirmed = 0;
    double worst = -1e300;
    for (const auto& f : fx) {
        // Bump in Sigma_lambda (so w < 0 there) plus a part symmetric about the plane.
        Vec mid = f.c;
        mid[f.plane.axis - 1] = f.plane.lambda;
        const Field sym = gaussian_field(f.n, mid, 0.5, 1.5);
        const Field base = linear_combination(1.0, bump_field(f.n, f.c, f.rho), 1.0, sym);
        for (const auto& k : {make_power_law(f.n, 0.5), make_power_law(f.n, 1.0), make_power_law(f.n, 1.5),
                              make_exponential(f.n, 1.0), make_anisotropic(f.n, 1.0, 4.0)}) {
            const auto cert = check_antisym_max_principle(base, k, f.plane, QuadratureConfig{});
            ++count;
            const bool ok = cert.w_min < 0.0 && cert.LK_w_at_min < -cert.err_estimate;
            if (ok) ++confirmed;
            worst = std::max(worst, cert.LK_w_at_min + cert.err_estimate);
            if (!ok) v.require(false, to_string(k.kind) + " n=" + std::to_string(f.n));
        }
    }
    const double dt = seconds_since(t0);
    v.detail << " fixtures=" << count << " confirmed=" << confirmed << " max(LKw+err)=" << fmt("%.3e", worst)
             << " t=" << fmt("%.2fs", dt);
    v.require(count == 20, "fixture count");
    v.require(dt <= 300.0, "runtime > 5 min");
}

// 5. Narrow region slopes.
void criterion5(Verdict& v) {
    const PlaneReflection p{1, 0.0};
    for (int n : {1, 2})
        for (double a : {0.5, 1.0, 1.5}) {
            const auto pl = narrow_region_bound(make_power_law(n, a), p);
            const auto ex = narrow_region_bound(make_exponential(n, a), p);
            v.detail << " n=" << n << " a=" << a << " PL=" << fmt("%.4f", pl.slope) << " EXP=" << fmt("%.4f", ex.slope);
            v.require(std::abs(pl.slope + a) <= 0.1 * a, "PowerLaw n=" + std::to_string(n) + " a=" + fmt("%.1f", a));
            v.require(std::abs(ex.slope + a) <= 0.1 * a,
                      "Exponential n=" + std::to_string(n) + " a=" + fmt("%.1f", a) + " off by " +
                          fmt("%.1f%%", 100.0 * std::abs(ex.slope / a + 1.0)));
        }
}

// 6. Decay at infinity.
void criterion6(Verdict& v) {
    const PlaneReflection p{1, 0.0};
    for (int n : {1, 2})
        for (double a : {0.5, 1.0, 1.5}) {
            const auto pl = decay_at_infinity_bound(make_power_law(n, a), p, {2.0, 4.0, 8.0, 16.0});
            const auto ex = decay_at_infinity_bound(make_exponential(n, a), p, {2.0, 2.5, 3.0});
            v.detail << " n=" << n << " a=" << a << " PL=" << fmt("%.4f", pl.slope) << " EXP=" << (ex.holds ? "above" : "below");
            v.require(std::abs(pl.slope + a) <= 0.1 * a, "PowerLaw slope n=" + std::to_string(n));
            v.require(ex.holds, "Exponential bound n=" + std::to_string(n));
        }
}

void symmetry_checks(Verdict& v, const SolveResult& r, int n, double tol, const std::string& tag) {
    const auto rs = verify_radial_symmetry(r.u, Vec{}, 5.0 * tol);
    v.detail << " " << tag << ": res=" << fmt("%.1e", r.report.final_residual_sup) << " dev=" << fmt("%.1e", rs.max_deviation)
             << " allow=" << fmt("%.1e", 5.0 * tol + rs.interpolation_allowance) << " viol=" << rs.monotone_violations;
    v.require(r.report.converged && r.report.final_residual_sup <= 1e-6, tag + " residual");
    v.require(rs.max_deviation <= 5.0 * tol + rs.interpolation_allowance, tag + " radial deviation");
    v.require(rs.monotone_violations == 0, tag + " monotonicity");
    for (int axis = 1; axis <= n; ++axis) {
        const auto s = sweep_lambda(r.u, axis, 5.0 * tol);
        v.detail << " lo" << axis << "=" << fmt("%.4f", s.lambda_o);
        v.require(std::abs(s.lambda_o) <= s.h, tag + " lambda_o axis " + std::to_string(axis));
    }
}

// 7. Linear problem in the ball.
void criterion7(Verdict& v) {
    const double tol = 1e-8;
    const auto f1 = with_constant_f(make_identity_g(), 1.0);
    for (int n : {1, 2}) {
        DomainSpec d;
        d.dim = n;
        d.grid_n = n == 1 ? 129 : 65;
        const auto r = solve_dirichlet(make_power_law(n, 1.0), f1, d, QuadratureConfig{}, tol);
        symmetry_checks(v, r, n, tol, "n=" + std::to_string(n));
    }
}

// 8. Nonlinear problem with G(t) = |t| t, f = 0.5 + t^2 on [0, 2].
void criterion8(Verdict& v) {
    const double tol = 1e-8;
    const auto s = with_affine_power_f(make_power_g(1.0), 0.5, 0.0, 1.0, 1.0, 0.0, 2.0);
    const auto g2 = check_G2(s, 1e-6);
    v.detail << " G2=" << (g2.holds ? "holds" : "fails");
    v.require(g2.holds, "f fails (G2)");
    for (int n : {1, 2}) {
        DomainSpec d;
        d.dim = n;
        d.grid_n = n == 1 ? 129 : 33;
        try {
            const auto r = solve_dirichlet_nonlinear(s, make_power_law(n, 1.0), d, QuadratureConfig{}, tol);
            symmetry_checks(v, r, n, tol, "n=" + std::to_string(n));
        } catch (const SolveError& e) {
            v.require(false, std::string("n=") + std::to_string(n) + " did not converge: " + e.what());
        }
    }
}

// 9. Simple maximum principle for F_{G,K} on random fields.
void criterion9(Verdict& v) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const std::vector<NonlinearitySpec> gs = {make_identity_g(), make_power_g(0.5), make_power_g(1.0), make_power_g(2.0)};
    int checks = 0, negative = 0;
    double worst = -1e300;
    for (int t = 0; t < 20; ++t) {
        const int n = 1 + t % 2;
        Vec c0{};
        for (int i = 0; i < n; ++i) c0[i] = U(rng) - 0.5;
        const double rho0 = 0.3 + 0.4 * U(rng), depth = 0.5 + U(rng);
        Field u = bump_field(n, c0, rho0, -depth);
        // Positive bumps whose supports stay clear of the negative one.
        const int extra = 1 + t % 3;
        for (int j = 0; j < extra; ++j) {
            Vec c{};
            const double ang = 2.0 * std::numbers::pi * U(rng), dist = rho0 + 1.0 + U(rng);
            c[0] = c0[0] + dist * std::cos(ang);
            if (n == 2) c[1] = c0[1] + dist * std::sin(ang);
            else c[0] = c0[0] + (U(rng) < 0.5 ? -dist : dist);
            u = linear_combination(1.0, u, 1.0, bump_field(n, c, 0.9, 0.5 + 2.0 * U(rng)));
        }
        const KernelSpec k = t % 3 == 0 ? make_power_law(n, 0.3 + 1.5 * U(rng))
                             : t % 3 == 1 ? make_exponential(n, 0.3 + 1.5 * U(rng))
                                          : make_anisotropic(n, 0.3 + 1.5 * U(rng), 1.0 + 3.0 * U(rng));
        for (const auto& g : gs) {
            const auto r = eval_FGK(u, g, k, c0, QuadratureConfig{});
            ++checks;
            if (r.value < 0.0) ++negative;
            worst = std::max(worst, r.value);
        }
    }
    v.detail << " evaluations=" << checks << " negative=" << negative << " max=" << fmt("%.3e", worst);
    v.require(negative == checks, "F_GK u at the minimum is not negative");
}

// 10. Mean value ratio.
void criterion10(Verdict& v) {
    for (double gamma : {0.5, 1.0, 2.0}) {
        const double m = sample_mvt_min_ratio(gamma, 10000, 5.0);
        v.detail << " gamma=" << gamma << " min=" << fmt("%.4f", m);
        v.require(m > 0.2, "min ratio <= 0.2");
    }
}

// 11. eval_LK against the brute-force oracle.
void criterion11(Verdict& v) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const int n = 1 + t % 2;
        const double a = 0.3 + 1.5 * U(rng);
        KernelSpec k;
        switch (t % 4) {
            case 0: k = make_power_law(n, a); break;
            case 1: k = make_exponential(n, a); break;
            case 2: k = make_anisotropic(n, a, 1.0 + 3.0 * U(rng)); break;
            default: k = make_variable_order(n, a, a + (2.0 - a) * 0.5 * U(rng)); break;
        }
        Vec x{}, c{};
        for (int i = 0; i < n; ++i) x[i] = U(rng) - 0.5;
        for (int i = 0; i < n; ++i) c[i] = 0.4 * (U(rng) - 0.5);
        const Field u = t % 3 == 0 ? gaussian_field(n, c, 1.0, 0.5 + U(rng))
                        : t % 3 == 1 ? bump_field(n, c, 1.0 + U(rng))
                                     : odd_decay_field(n);
        const auto r = eval_LK(u, k, x, QuadratureConfig{});
        const double o = oracle::LK(u, k, x);
        const double ratio = std::abs(r.value - o) / r.err_estimate;
        worst = std::max(worst, ratio);
        if (ratio > 3.0) v.require(false, "triple " + std::to_string(t));
    }
    v.detail << " triples=20 max|diff|/err=" << fmt("%.3f", worst);
}

// 12. Sweep recovers the center of a decaying field.
void criterion12(Verdict& v) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> U(-0.4, 0.4);
    const double h = 1.0 / 32.0;
    for (int t = 0; t < 5; ++t) {
        const Vec x0{U(rng), U(rng), 0.0};
        const Field g = sample_to_grid(cutoff_gaussian_field(2, x0, 1.5), Vec{-2.0, -2.0, 0.0}, h, {129, 129, 1}, 0.0);
        for (int axis : {1, 2}) {
            const auto s = sweep_lambda(g, axis, 1e-12);
            const double d = std::abs(s.lambda_o - x0[axis - 1]);
            if (d > h) v.require(false, "x0 #" + std::to_string(t) + " axis " + std::to_string(axis));
        }
        v.detail << " (" << fmt("%.3f", x0[0]) << "," << fmt("%.3f", x0[1]) << ")";
    }
}

// 13. Diagonal matrix kernel: limit -(1 u_11 + 4 u_22)(0).
void criterion13(Verdict& v) {
    FamilySpec fam;
    fam.kind = AlphaFamily::MatrixTransformed;
    fam.lambda_diag = {1.0, 2.0};
    const auto r = sweep_alpha(gaussian_field(2), fam, Vec{}, kDefaultAlphas, sweep_cfg());
    const Mat H = gaussian_field(2).hessian(Vec{});
    const double target = -(1.0 * H[0][0] + 4.0 * H[1][1]);
    const double rel = std::abs(r.extrapolated_limit - target) / std::abs(target);
    v.detail << " limit=" << fmt("%.6f", r.extrapolated_limit) << " target=" << fmt("%.6f", target)
             << " rel=" << fmt("%.1e", rel);
    v.require(rel <= 0.05, "relative error > 5%");
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria = {
        {"exponential alpha->2 limit", criterion1},
        {"anisotropic alpha->2 limit", criterion2},
        {"inner-ball bracket", criterion3},
        {"anti-symmetric maximum principle", criterion4},
        {"narrow region scaling", criterion5},
        {"decay at infinity scaling", criterion6},
        {"linear ball problem symmetry", criterion7},
        {"nonlinear ball problem symmetry", criterion8},
        {"simple maximum principle", criterion9},
        {"mean value ratio", criterion10},
        {"oracle agreement", criterion11},
        {"whole-space sweep", criterion12},
        {"matrix kernel limit", criterion13},
    };
    const auto t0 = Clock::now();
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        const auto t = Clock::now();
        try {
            criteria[i].second(v);
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        if (!v.pass) ++failed;
        std::printf("criterion %2zu %s: %s (%.1fs)%s\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first,
                    seconds_since(t), v.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%zu criteria, %d failed, %.1fs\n", criteria.size(), failed, seconds_since(t0));
    return failed == 0 ? 0 : 1;
}
