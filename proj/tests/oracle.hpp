#pragma once

// Brute-force reference for L_K u(x) on analytic fields, independent of the
// library's quadrature: Boost tanh-sinh / exp-sinh / Gauss-Kronrod applied to
// the symmetrized radial integrand
//   \int_{half sphere} \int_0^inf (2u(x) - u(x + r theta) - u(x - r theta)) K(r theta) r^{n-1} dr dtheta.

#include "nlop/field.hpp"
#include "nlop/kernels.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace oracle {

using nlop::Vec;

inline double radial_integral(const nlop::Field& u, const nlop::KernelSpec& k, const Vec& x, const Vec& th,
                              double tol) {
    const int n = k.dim;
    const double ux = u.value(x);
    const nlop::Mat H = u.hessian(x);
    const double q = nlop::quad_form(H, th, n);
    auto K = [&](double r) {
        Vec y{};
        for (int i = 0; i < n; ++i) y[i] = r * th[i];
        return nlop::eval_kernel(k, y);
    };
    // On (0, r0) the second difference is -r^2 q and K is locally homogeneous
    // of degree -(n + beta), with beta read off K(r0) / K(r0 / 2).
    constexpr double r0 = 1e-4;
    const double beta = std::log2(K(0.5 * r0) / K(r0)) - n;
    const double inner = -q * K(r0) * std::pow(r0, n + 2) / (2.0 - beta);
    auto integrand = [&](double r) {
        Vec p{}, m{};
        for (int i = 0; i < n; ++i) {
            p[i] = x[i] + r * th[i];
            m[i] = x[i] - r * th[i];
        }
        return (2.0 * ux - u.value(p) - u.value(m)) * K(r) * std::pow(r, n - 1);
    };
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::exp_sinh<double> es;
    double err = 0.0;
    const double a = ts.integrate(integrand, r0, 1.0, tol, &err);
    const double b = ts.integrate(integrand, 1.0, 8.0, tol, &err);
    const double c = es.integrate(integrand, 8.0, std::numeric_limits<double>::infinity(), tol, &err);
    return inner + a + b + c;
}

/// Reference value of L_K u(x), K = scale * density (n = 1 or 2).
inline double LK(const nlop::Field& u, const nlop::KernelSpec& k, const Vec& x, double tol = 1e-12) {
    const int n = k.dim;
    if (n == 1) return radial_integral(u, k, x, Vec{1.0, 0.0, 0.0}, tol);
    // Half circle phi in [0, pi), split at the axis where p-norm kernels kink.
    auto f = [&](double phi) { return radial_integral(u, k, x, Vec{std::cos(phi), std::sin(phi), 0.0}, tol); };
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double pi = std::numbers::pi;
    return GK::integrate(f, 0.0, 0.5 * pi, 8, 1e-11) + GK::integrate(f, 0.5 * pi, pi, 8, 1e-11);
}

/// \int_d^inf K(t) dt in n = 1. For lambda = 0 and x0 = -d this equals
/// \int_{y < 0} K(x0 - y^lambda) dy.
inline double half_line_mass(const nlop::KernelSpec& k, double d) {
    boost::math::quadrature::exp_sinh<double> es;
    auto f = [&](double t) { return nlop::eval_kernel(k, Vec{t, 0.0, 0.0}); };
    return es.integrate(f, d, std::numeric_limits<double>::infinity());
}

}  // namespace oracle
