#include "nlop/nonlinearity.hpp"

#include <doctest.h>

#include <cmath>

using namespace nlop;

TEST_CASE("G and G' values") {
    const auto g = make_power_g(1.0);
    CHECK(eval_G(g, -2.0) == -4.0);
    CHECK(eval_G_prime(g, -2.0) == 4.0);
    CHECK(eval_G_prime(g, 0.0) == 0.0);
    const auto id = make_identity_g();
    for (double t : {-3.0, 0.0, 0.7}) {
        CHECK(eval_G(id, t) == t);
        CHECK(eval_G_prime(id, t) == 1.0);
    }
    CHECK_THROWS_AS(make_power_g(-0.5), ConfigError);
}

TEST_CASE("condition G1") {
    CHECK(check_G1(make_power_g(2.0), 1000).holds);
    CHECK(check_G1(make_identity_g(), 1000).holds);
    const auto r = check_G1(RealFn([](double t) { return t * t; }), 1000);
    CHECK_FALSE(r.holds);
    REQUIRE(r.witness.has_value());
    CHECK(r.witness->point[0] == 1.0);
}

TEST_CASE("condition G2") {
    CHECK(check_G2(with_power_f(make_power_g(1.0), 1.0), 1e-6).holds);
    CHECK(check_G2(with_power_f(make_identity_g(), 1.0), 1e-6).holds);
    const auto bad = check_G2(with_power_f(make_power_g(2.0), 1.0), 1e-6);
    CHECK_FALSE(bad.holds);
    CHECK(bad.witness.has_value());
}

TEST_CASE("condition G2 prime") {
    auto spec = with_power_f(make_power_g(0.5), 1.5);
    spec.g2prime_claim = true;
    validate(spec);
    CHECK(check_G2prime(spec, 2000).holds);
    auto bad = with_power_f(make_power_g(2.0), 1.0);
    bad.g2prime_claim = true;
    CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("mean value point of G") {
    const auto m = check_mvt_property(make_power_g(1.0), 1.0, 2.0);
    CHECK(m.applicable);
    CHECK(m.xi == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(m.c0_ratio == doctest::Approx(0.75).epsilon(1e-12));
    for (double gamma : {0.5, 1.0, 2.0, 3.0}) {
        const auto s = check_mvt_property(make_power_g(gamma), -1.7, 1.7);
        CHECK(s.c0_ratio == doctest::Approx(std::pow(gamma + 1.0, -1.0 / gamma)).epsilon(1e-10));
        CHECK(std::abs(s.xi) == doctest::Approx(std::pow(std::pow(1.7, gamma) / (gamma + 1.0), 1.0 / gamma)).epsilon(1e-10));
    }
    CHECK_FALSE(check_mvt_property(make_identity_g(), 1.0, 2.0).applicable);
    CHECK_FALSE(check_mvt_property(make_power_g(0.0), 1.0, 2.0).applicable);
}

TEST_CASE("sampled mean value ratio stays bounded below") {
    for (double gamma : {0.5, 1.0, 2.0}) CHECK(sample_mvt_min_ratio(gamma, 10000, 5.0) > 0.2);
}

TEST_CASE("clipped affine-plus-power f") {
    const auto s = with_affine_power_f(make_power_g(1.0), 0.5, 0.0, 1.0, 1.0, 0.0, 2.0);
    CHECK(eval_f(s, 1.0) == 1.5);
    CHECK(eval_f(s, 5.0) == 4.5);
    CHECK(eval_f(s, -1.0) == 0.5);
    CHECK(f_lipschitz(s) == doctest::Approx(4.0));
}

TEST_CASE("nonlinearity JSON round trip") {
    const auto s = with_affine_power_f(make_power_g(1.5), 0.5, 0.1, 1.0, 2.0, 0.0, 2.0);
    const auto b = nonlinearity_from_json(to_json(s));
    CHECK(b.g_kind == s.g_kind);
    CHECK(b.gamma == s.gamma);
    CHECK(b.clip_hi == s.clip_hi);
    CHECK(eval_f(b, 1.3) == eval_f(s, 1.3));
}
