#pragma once

// Reflections across T_lambda = {x_axis = lambda}, deficit fields
// w_lambda = u(x^lambda) - u(x), the lambda sweep, and numeric witnesses of
// the maximum-principle inequalities.

#include "nlop/field.hpp"
#include "nlop/kernels.hpp"
#include "nlop/nonlinearity.hpp"
#include "nlop/pv_quadrature.hpp"

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace nlop {

struct PlaneReflection {
    int axis = 1;  // 1-based
    double lambda = 0.0;
};

Vec reflect(const Vec& x, const PlaneReflection& plane);

/// Analytic u gives an analytic w. Grid u (lambda on a half-grid point) gives
/// a grid w on the union of the lattice and its mirror image, extended by
/// `pad` nodes per side, with exterior value 0.
Field w_lambda(const Field& u, const PlaneReflection& plane, int pad = 8);

/// Lattice used to scan analytic fields for minima.
struct ScanLattice {
    Vec lo{-3.0, -3.0, -3.0};
    double h = 1.0 / 16.0;
    std::array<int, 3> counts{97, 97, 97};
};

enum class CertificateStatus { NoClaim, Confirmed, Inconclusive, Violated };
std::string to_string(CertificateStatus s);

struct MinimumCertificate {
    Vec x_min{};
    double w_min = 0.0;
    double LK_w_at_min = 0.0;  // L_K w or F_{G,K} w at x_min (0 without a claim)
    double err_estimate = 0.0;
    double grid_h = 0.0;       // scan resolution
    CertificateStatus status = CertificateStatus::NoClaim;
    KernelSpec kernel;
};

nlohmann::json to_json(const MinimumCertificate& c);

/// Minimum of w_lambda over Sigma_lambda = {x_axis < lambda}; when negative,
/// L_K w at the minimizer (predicted negative).
MinimumCertificate check_antisym_max_principle(const Field& u, const KernelSpec& spec,
                                               const PlaneReflection& plane,
                                               const QuadratureConfig& cfg,
                                               const std::optional<ScanLattice>& scan = {});

/// F_{G,K} u at a negative minimum x_min of u (predicted negative when the
/// exterior is nonnegative).
MinimumCertificate check_simple_max_principle(const Field& u, const NonlinearitySpec& g,
                                              const KernelSpec& spec, const Vec& x_min,
                                              const QuadratureConfig& cfg);

struct BoundRow {
    double param = 0.0;     // delta or |x0|
    double integral = 0.0;  // \int_{Sigma_lambda} K(x0 - y^lambda) dy
    double reference = 0.0; // running slope or reference bound
};

struct ScalingReport {
    std::vector<BoundRow> rows;
    double slope = 0.0;     // least-squares log-log slope
    bool holds = false;
    std::string note;
};

nlohmann::json to_json(const ScalingReport& r);

inline const std::vector<double> kNarrowDeltas = {0.125, 0.0625, 0.03125, 0.015625, 0.0078125,
                                                  0.00390625};

/// x0 at distance delta/2 from T_lambda inside Sigma_lambda; holds when the
/// slope is at most -0.9 alpha.
ScalingReport narrow_region_bound(const KernelSpec& spec, const PlaneReflection& plane,
                                  const std::vector<double>& deltas = kNarrowDeltas);

/// lambda = 0, x0 = -|x0| e_axis. PowerLaw: slope within 10% of -alpha.
/// Exponential: integral >= C e^{-16|x0|^2}/|x0|^alpha with C fitted at the
/// first radius. Other kernels: slope only.
ScalingReport decay_at_infinity_bound(const KernelSpec& spec, const PlaneReflection& plane,
                                      const std::vector<double>& radii);

struct MovingPlaneReport {
    int axis = 1;
    double h = 0.0;
    std::vector<double> lambda_grid;
    std::vector<double> min_w;
    std::vector<Vec> argmin;
    std::vector<int> sigma_count;  // lattice nodes in Sigma_lambda
    double lambda_o = 0.0;
    bool any_admissible = false;
    double reversed_lambda_o = 0.0;
    bool symmetric_verdict = false;
    double tolerance = 0.0;
};

nlohmann::json to_json(const MovingPlaneReport& r);

/// Scan over the half-grid points of u's lattice along `axis` (1-based).
MovingPlaneReport sweep_lambda(const Field& u, int axis, double tolerance);

struct RadialSymmetryReport {
    double max_deviation = 0.0;        // pairs with radii within h/2
    double exact_ring_deviation = 0.0; // pairs with equal lattice radius
    double interpolation_allowance = 0.0;  // max nodal slope * h
    int monotone_violations = 0;
    int rays = 0;
    int pairs = 0;
};

nlohmann::json to_json(const RadialSymmetryReport& r);

RadialSymmetryReport verify_radial_symmetry(const Field& u, const Vec& center, double tolerance);

}  // namespace nlop
