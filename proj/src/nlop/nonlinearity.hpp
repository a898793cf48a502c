#pragma once

// Nonlinearities G (inside the integral) and f (right-hand side), their
// derivatives, and sampled checks of the structural conditions.

#include "nlop/common.hpp"
#include "nlop/kernels.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

namespace nlop {

enum class GKind { Identity, Power };
enum class FKind { Constant, Power, AffinePlusPower, LipschitzTable };

struct NonlinearitySpec {
    GKind g_kind = GKind::Identity;
    double gamma = 0.0;  // G(t) = |t|^gamma t for Power

    FKind f_kind = FKind::Constant;
    // Constant: f = a. Power: f = scale*|t|^s t.
    // AffinePlusPower: f = a + b*T + c*|T|^s T with T = clamp(t, clip_lo, clip_hi).
    double a = 0.0, b = 0.0, c = 0.0;
    double s = 1.0;
    double scale = 1.0;
    double clip_lo = -std::numeric_limits<double>::infinity();
    double clip_hi = std::numeric_limits<double>::infinity();
    // LipschitzTable: piecewise linear through (table_t, table_f), constant beyond.
    std::vector<double> table_t, table_f;
    double lipschitz = 0.0;  // declared Lipschitz constant of f (0 = derive)

    // Constants of (G'2); `g2prime_claim` requests the gamma < s invariant.
    double C1 = 0.5, C2 = 10.0, eps_g2 = 1.0;
    bool g2prime_claim = false;
};

void validate(const NonlinearitySpec& spec);

NonlinearitySpec make_identity_g();
NonlinearitySpec make_power_g(double gamma);
NonlinearitySpec with_constant_f(NonlinearitySpec spec, double a);
NonlinearitySpec with_power_f(NonlinearitySpec spec, double s, double scale = 1.0);
NonlinearitySpec with_affine_power_f(NonlinearitySpec spec, double a, double b, double c, double s,
                                     double clip_lo, double clip_hi);
NonlinearitySpec with_table_f(NonlinearitySpec spec, std::vector<double> t, std::vector<double> f);

nlohmann::json to_json(const NonlinearitySpec& spec);
NonlinearitySpec nonlinearity_from_json(const nlohmann::json& j);

double eval_G(const NonlinearitySpec& spec, double t);
double eval_G_prime(const NonlinearitySpec& spec, double t);
double eval_f(const NonlinearitySpec& spec, double t);
/// One-sided (right) derivative at kinks of clipped or tabulated f.
double eval_f_prime(const NonlinearitySpec& spec, double t);
/// Global Lipschitz constant of f (infinite for unclipped super-linear f).
double f_lipschitz(const NonlinearitySpec& spec);
bool g_is_linear(const NonlinearitySpec& spec);

using RealFn = std::function<double(double)>;

ConditionReport check_G1(const NonlinearitySpec& spec, int sample_count, std::uint64_t seed = 1);
ConditionReport check_G1(const RealFn& G, int sample_count, std::uint64_t seed = 1);

/// Bounds f'/G' on t = t_min * 2^k <= 1; fails if the log-log slope over the
/// smallest decade is below kG2SlopeFloor.
inline constexpr double kG2SlopeFloor = -0.1;
ConditionReport check_G2(const NonlinearitySpec& spec, double t_min);

ConditionReport check_G2prime(const NonlinearitySpec& spec, int sample_count,
                              std::uint64_t seed = 1);

struct MvtResult {
    bool applicable = false;
    double xi = 0.0;
    double c0_ratio = 0.0;
};

/// Solves G(t2) - G(t1) = G'(xi)(t2 - t1) for |xi| (Power G only).
MvtResult check_mvt_property(const NonlinearitySpec& spec, double t1, double t2);

/// Minimum c0 ratio over random pairs in [-box, box]^2.
double sample_mvt_min_ratio(double gamma, int pairs, double box, std::uint64_t seed = 1);

}  // namespace nlop
