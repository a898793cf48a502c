#include "nlop/alpha_limit.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

using namespace nlop;

namespace {

// Oracle: as alpha -> 2, (2 - alpha) \int_0^1 r^{1 - alpha} dr = 1, so
// C_{2,p} = (1/2) \int_0^{2 pi} ||(cos t, sin t)||_p^{-4} dt.
double c2p_oracle(double p) {
    auto f = [p](double t) {
        const double q = std::pow(std::pow(std::abs(std::cos(t)), p) + std::pow(std::abs(std::sin(t)), p), 1.0 / p);
        return std::pow(q, -4.0);
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    // Four quadrants, each split at its diagonal.
    double s = 0.0;
    const double q = 0.25 * std::numbers::pi;
    for (int i = 0; i < 8; ++i) s += GK::integrate(f, i * q, (i + 1) * q, 10, 1e-13);
    return 0.5 * s;
}

}  // namespace

TEST_CASE("gamma prefactor") {
    CHECK(gamma_prefactor(1.0) == doctest::Approx(1.0 / std::sqrt(std::numbers::pi)).epsilon(1e-14));
    CHECK(gamma_prefactor(0.0) == doctest::Approx(1.0).epsilon(1e-14));
    const double a = 1.999, z = 0.5 * (2.0 - a);
    CHECK(std::abs(z / gamma_prefactor(a) - 1.0) < 1e-3);
    CHECK_THROWS_AS(gamma_prefactor(2.0), ConfigError);
}

TEST_CASE("anisotropic constant") {
    CHECK(anisotropic_constant(1, 2.0) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(anisotropic_constant(2, 2.0) == doctest::Approx(std::numbers::pi).epsilon(1e-6));
    for (double p : {1.0, 1.5, 2.0, 4.0}) {
        const double c = anisotropic_constant(2, p);
        CHECK(c == doctest::Approx(c2p_oracle(p)).epsilon(1e-5));
        const auto b = anisotropic_bracket(2, p);
        // p = 2 collapses the bracket to a point.
        CHECK(b.lo * (1.0 - 1e-9) <= c);
        CHECK(c <= b.hi * (1.0 + 1e-9));
    }
    CHECK(anisotropic_constant(2, 4.0) == doctest::Approx(4.44288287).epsilon(1e-6));
}

TEST_CASE("polynomial extrapolation") {
    const std::vector<double> s = {0.1, 0.05, 0.01};
    std::vector<double> v;
    for (double x : s) v.push_back(3.0 - 2.0 * x + 5.0 * x * x);
    CHECK(extrapolate_to_zero(s, v) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("exponential family limit is -Laplacian") {
    QuadratureConfig cfg;
    cfg.rel_tol = 1e-8;
    FamilySpec fam;
    for (int n : {1, 2}) {
        const auto r = sweep_alpha(gaussian_field(n), fam, Vec{}, kDefaultAlphas, cfg);
        CHECK(r.reference == doctest::Approx(2.0 * n));
        CHECK(r.extrapolated_limit == doctest::Approx(2.0 * n).epsilon(0.02));
        for (double v : r.values) CHECK(std::isfinite(v));
        for (std::size_t i = 1; i < r.eps_used.size(); ++i) CHECK(r.eps_used[i] < r.eps_used[i - 1]);
    }
    const auto t = sweep_alpha(tanh_field(1), fam, Vec{}, kDefaultAlphas, cfg);
    CHECK(std::abs(t.extrapolated_limit) <= 1e-2);
}

TEST_CASE("omega calibration") {
    const auto c1 = calibrate_omega_n(1);
    CHECK(c1.convention == "coincide");
    CHECK(c1.omega == doctest::Approx(2.0));
    const auto c2 = calibrate_omega_n(2);
    CHECK(c2.convention == "sphere_surface");
    CHECK(c2.omega == doctest::Approx(2.0 * std::numbers::pi));
    CHECK(c2.limit_sphere == doctest::Approx(4.0).epsilon(0.02));
    CHECK(c2.limit_ball == doctest::Approx(8.0).epsilon(0.02));
}

TEST_CASE("sweep preconditions") {
    const FamilySpec fam;
    CHECK_THROWS_AS(sweep_alpha(gaussian_field(1), fam, Vec{}, {1.0, 1.5}, QuadratureConfig{}), ConfigError);
    FamilySpec bad;
    bad.kind = AlphaFamily::Anisotropic;
    bad.p_norm = 0.5;
    CHECK_THROWS_AS(family_kernel(bad, 2, 1.9), ConfigError);
}
