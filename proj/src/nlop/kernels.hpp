#pragma once

// Jump kernel zoo, pointwise evaluation, polar decomposition
// K(r*theta) = scale * A(theta) * R(r), and numeric structural checks.

#include "nlop/common.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace nlop {

enum class KernelKind {
    PowerLaw,
    Exponential,
    AnisotropicPNorm,
    MatrixTransformed,
    DiagQuadratic,
    VariableOrder,
};

struct KernelSpec {
    KernelKind kind = KernelKind::PowerLaw;
    int dim = 1;
    double alpha = 1.0;
    double c_lower = 1.0;
    double p_norm = 2.0;
    std::vector<double> lambda_diag;
    double beta_order = 1.0;
    double scale = 1.0;  // global prefactor C_n multiplying the density
};

/// Throws ConfigError naming the offending key.
void validate(const KernelSpec& spec);

KernelSpec make_power_law(int dim, double alpha, double c = 1.0);
KernelSpec make_exponential(int dim, double alpha);
KernelSpec make_anisotropic(int dim, double alpha, double p);
KernelSpec make_matrix(int dim, double alpha, std::vector<double> lambda);
KernelSpec make_diag_quadratic(int dim, double alpha, std::vector<double> lambda);
KernelSpec make_variable_order(int dim, double alpha, double beta);

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& s);

nlohmann::json to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& j);

/// Kernel density at y != 0 (DomainError at y = 0).
double eval_kernel(const KernelSpec& spec, const Vec& y);

/// Angular factor A(theta) for a unit vector theta (includes `scale`).
double angular_factor(const KernelSpec& spec, const Vec& theta);

/// Radial factor R(r), r > 0.
double radial_factor(const KernelSpec& spec, double r);

/// Closed-form \int_a^b R(r) r^k dr for 0 <= a < b <= inf. a = 0 requires
/// integrability at the origin. b may be +infinity.
double radial_moment(const KernelSpec& spec, double a, double b, double k);

/// \int_{|z| > rho} K(z) dz / (\int_S A): the radial tail mass.
double radial_tail(const KernelSpec& spec, double rho);

/// Angular integrals of A. Radial and angular parts factor, so
/// \int_{|z|>rho} K = mass * radial_tail(rho).
struct AngularMoments {
    double mass = 0.0;  // \int_S A
    Mat second{};       // \int_S A theta theta^T
};
AngularMoments angular_moments(const KernelSpec& spec, double rel_tol = 1e-10);

/// \int_{|z| > R} K(z) dz.
double exterior_mass(const KernelSpec& spec, double R);

/// Half-space mass \int_{z_axis > d} K(z) dz, d > 0 (axis is 1-based).
double half_space_mass(const KernelSpec& spec, int axis, double d, double rel_tol = 1e-9);

enum class Condition { LevyKhintchine, K1, K2, K2prime, G1, G2, G2prime };
std::string to_string(Condition c);

struct Witness {
    Vec point{};
    double value = 0.0;
};

struct ConditionReport {
    Condition condition = Condition::K1;
    bool holds = false;
    std::optional<Witness> witness;
    double estimate = 0.0;
    int samples = 0;
    std::map<std::string, double> fitted;  // named constants fitted by the check
    std::string note;
};

nlohmann::json to_json(const ConditionReport& r);

using KernelFn = std::function<double(const Vec&)>;

ConditionReport check_levy_khintchine(const KernelSpec& spec, double rel_tol = 1e-6);

/// (K1) floor: the min ratio must stay above kK1Floor * c_ref, where c_ref is
/// the min ratio over r <= 1.
inline constexpr double kK1Floor = 1e-8;

ConditionReport check_K1(const KernelSpec& spec, int sample_count, std::uint64_t seed = 1);
ConditionReport check_K1(const KernelFn& K, int dim, double alpha, int sample_count,
                         std::uint64_t seed = 1);

ConditionReport check_monotone_K2(const KernelSpec& spec, int axis, int sample_count,
                                  std::uint64_t seed = 1);
ConditionReport check_monotone_K2(const KernelFn& K, int dim, int axis, int sample_count,
                                  std::uint64_t seed = 1);

/// K(x - y) - K(x - y^lambda), y^lambda the reflection of y across
/// {y_axis = lambda} (axis is 1-based).
double reflected_kernel_difference(const KernelSpec& spec, const Vec& x, const Vec& y,
                                   double lambda, int axis);

}  // namespace nlop
