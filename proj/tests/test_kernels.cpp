#include "nlop/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

using namespace nlop;

namespace {

std::vector<KernelSpec> zoo(int n) {
    std::vector<KernelSpec> z = {make_power_law(n, 0.7, 1.3), make_exponential(n, 1.2), make_anisotropic(n, 1.1, 4.0),
                                 make_variable_order(n, 0.8, 1.4)};
    if (n >= 2) {
        std::vector<double> lam(n);
        for (int i = 0; i < n; ++i) lam[i] = 1.0 + i;
        z.push_back(make_matrix(n, 1.0, lam));
        z.push_back(make_diag_quadratic(n, 1.0, lam));
    }
    return z;
}

Vec random_point(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> nd(0.0, 1.0);
    // |y| in [1e-2, 10]: exp(-|y|^2) underflows to zero beyond |y| ~ 27.
    std::uniform_real_distribution<double> ur(-2.0, 1.0);
    Vec y{};
    double r = 0.0;
    for (int i = 0; i < n; ++i) {
        y[i] = nd(rng);
        r += y[i] * y[i];
    }
    const double s = std::pow(10.0, ur(rng)) / std::sqrt(r);
    for (int i = 0; i < n; ++i) y[i] *= s;
    return y;
}

}  // namespace

TEST_CASE("kernel values from the defining formulas") {
    CHECK(eval_kernel(make_power_law(1, 1.0, 1.0), Vec{2.0}) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(eval_kernel(make_exponential(1, 1.0), Vec{1.0}) ==
          doctest::Approx(std::exp(-1.0) / std::sqrt(std::numbers::pi)).epsilon(1e-14));
    CHECK(eval_kernel(make_exponential(1, 1.0), Vec{1.0}) == doctest::Approx(0.207554).epsilon(1e-5));
    CHECK_THROWS_AS(eval_kernel(make_power_law(2, 1.0), Vec{}), DomainError);
}

TEST_CASE("construction rejects alpha outside (0,2)") {
    CHECK_THROWS_AS(make_power_law(1, 2.0), ConfigError);
    CHECK_THROWS_AS(make_power_law(1, 0.0), ConfigError);
    CHECK_THROWS_AS(make_anisotropic(2, 1.0, 0.5), ConfigError);
    CHECK_THROWS_AS(make_matrix(2, 1.0, {2.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(make_variable_order(1, 1.0, 0.5), ConfigError);
}

TEST_CASE("evenness and positivity for every zoo kernel at 1e4 points") {
    std::mt19937_64 rng(3);
    for (int n = 1; n <= 3; ++n)
        for (const auto& k : zoo(n)) {
            int bad = 0;
            for (int s = 0; s < 10000; ++s) {
                const Vec y = random_point(rng, n);
                const Vec my{-y[0], -y[1], -y[2]};
                const double a = eval_kernel(k, y);
                if (!(a > 0.0) || a != eval_kernel(k, my)) ++bad;
            }
            CHECK_MESSAGE(bad == 0, to_string(k.kind) << " n=" << n);
        }
}

TEST_CASE("power law scales exactly") {
    std::mt19937_64 rng(5);
    for (int n = 1; n <= 3; ++n) {
        const auto k = make_power_law(n, 1.3);
        for (int s = 0; s < 100; ++s) {
            const Vec y = random_point(rng, n);
            const double t = 0.1 + 5.0 * std::uniform_real_distribution<double>(0, 1)(rng);
            const Vec ty{t * y[0], t * y[1], t * y[2]};
            CHECK(eval_kernel(k, ty) == doctest::Approx(std::pow(t, -n - 1.3) * eval_kernel(k, y)).epsilon(1e-12));
        }
    }
}

TEST_CASE("radial moments match an independent quadrature") {
    // Oracle: Boost tanh-sinh / exp-sinh on R(r) r^k.
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::exp_sinh<double> es;
    for (const auto& k : {make_power_law(2, 0.6), make_exponential(2, 1.4), make_variable_order(1, 0.9, 1.5)}) {
        const double kk = k.dim + 1;
        auto f = [&](double r) { return radial_factor(k, r) * std::pow(r, kk); };
        CHECK(radial_moment(k, 1e-30, 0.7, kk) == doctest::Approx(ts.integrate(f, 1e-30, 0.7)).epsilon(1e-10));
        CHECK(radial_moment(k, 0.5, 3.0, kk) ==
              doctest::Approx(ts.integrate(f, 0.5, 1.0) + ts.integrate(f, 1.0, 3.0)).epsilon(1e-10));
        auto g = [&](double r) { return radial_factor(k, r) * std::pow(r, k.dim - 1); };
        CHECK(radial_tail(k, 2.0) == doctest::Approx(es.integrate(g, 2.0, INFINITY)).epsilon(1e-9));
    }
}

TEST_CASE("half-space mass in one dimension") {
    // \int_d^inf (2 - a) t^{-1-a} dt = (2 - a) d^{-a} / a
    const auto k = make_power_law(1, 0.8);
    CHECK(half_space_mass(k, 1, 0.3) == doctest::Approx(1.2 * std::pow(0.3, -0.8) / 0.8).epsilon(1e-8));
}

TEST_CASE("Levy-Khintchine") {
    CHECK(check_levy_khintchine(make_power_law(1, 1.5)).holds);
    for (double a : {0.3, 1.0, 1.9}) CHECK(check_levy_khintchine(make_exponential(2, a)).holds);
}

TEST_CASE("condition K1") {
    const auto pl = check_K1(make_power_law(2, 1.0, 1.0), 500);
    CHECK(pl.holds);
    CHECK(pl.estimate == doctest::Approx(1.0).epsilon(0.01));
    const auto ex = check_K1(make_exponential(1, 1.0), 500);
    CHECK_FALSE(ex.holds);
    REQUIRE(ex.witness.has_value());
    CHECK(norm(ex.witness->point, 1) > 1.0);
    CHECK(check_K1(make_anisotropic(2, 1.0, 4.0), 500).holds);
}

TEST_CASE("condition K2") {
    for (int axis : {1, 2}) {
        CHECK(check_monotone_K2(make_power_law(2, 1.0), axis, 500).holds);
        CHECK(check_monotone_K2(make_exponential(2, 1.0), axis, 500).holds);
    }
    // Constructed counterexample: (2 + sin y_1) / |y|^{n + a}.
    const auto base = make_power_law(2, 1.0);
    KernelFn bad = [base](const Vec& y) { return eval_kernel(base, y) * (2.0 + std::sin(y[0])); };
    const auto r = check_monotone_K2(bad, 2, 1, 500);
    CHECK_FALSE(r.holds);
    CHECK(r.witness.has_value());
}

TEST_CASE("reflected kernel difference") {
    const auto k = make_power_law(1, 1.0);
    CHECK(reflected_kernel_difference(k, Vec{-0.5}, Vec{-0.2}, 0.0, 1) ==
          doctest::Approx(1.0 / 0.09 - 1.0 / 0.49).epsilon(1e-13));
    CHECK(reflected_kernel_difference(k, Vec{-0.5}, Vec{0.0}, 0.0, 1) == 0.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ud(-3.0, 0.0), uy(-2.0, 2.0);
    for (int n = 1; n <= 2; ++n)
        for (const auto& spec : {make_power_law(n, 1.2), make_exponential(n, 0.6), make_anisotropic(n, 1.0, 3.0)}) {
            int neg = 0;
            for (int s = 0; s < 1000; ++s) {
                Vec x{ud(rng), uy(rng), 0.0}, y{ud(rng), uy(rng), 0.0};
                if (n == 1) x[1] = y[1] = 0.0;
                if (norm(Vec{x[0] - y[0], x[1] - y[1], 0.0}, n) < 1e-9) continue;
                if (reflected_kernel_difference(spec, x, y, 0.0, 1) < 0.0) ++neg;
            }
            CHECK(neg == 0);
        }
}

TEST_CASE("kernel spec JSON round trip") {
    const auto k = make_matrix(2, 1.3, {1.0, 2.5});
    const auto j = to_json(k);
    const auto back = kernel_from_json(j);
    CHECK(back.kind == k.kind);
    CHECK(back.alpha == k.alpha);
    CHECK(back.lambda_diag == k.lambda_diag);
    CHECK_THROWS_WITH_AS(kernel_from_json(nlohmann::json{{"kind", "PowerLaw"}, {"alpha", 2.5}}),
                         "alpha must lie in (0,2)", ConfigError);
}
