#pragma once

// alpha -> 2^- limits: sweeps of the operator at fixed x, extrapolation in
// s = 2 - alpha, the anisotropic constant C_{n,p} and the omega_n calibration.

#include "nlop/field.hpp"
#include "nlop/kernels.hpp"
#include "nlop/pv_quadrature.hpp"

#include <string>
#include <vector>

#include <json.hpp>

namespace nlop {

/// 1 / Gamma((2 - alpha)/2), alpha in [0, 2).
double gamma_prefactor(double alpha);

enum class AlphaFamily { ExponentialScaled, Anisotropic, MatrixTransformed };
std::string to_string(AlphaFamily f);
AlphaFamily alpha_family_from_string(const std::string& s);

struct FamilySpec {
    AlphaFamily kind = AlphaFamily::ExponentialScaled;
    double p_norm = 2.0;              // Anisotropic
    std::vector<double> lambda_diag;  // MatrixTransformed
    double omega = 0.0;               // ExponentialScaled: 0 = calibrated omega_n
};

/// Kernel of the family at order alpha with its prefactor:
/// ExponentialScaled 4n/omega, Anisotropic 1, MatrixTransformed 2n/sigma_{n-1}.
KernelSpec family_kernel(const FamilySpec& fam, int dim, double alpha);

inline const std::vector<double> kDefaultAlphas = {1.9, 1.95, 1.99};

struct AlphaSweepReport {
    std::vector<double> alpha_list;
    std::vector<double> values;
    std::vector<double> errors;
    std::vector<double> eps_used;
    std::vector<double> running;  // linear extrapolation through the last two nodes so far
    double extrapolated_limit = 0.0;  // quadratic through all nodes
    double linear_limit = 0.0;        // linear through the last two nodes
    bool flagged = false;             // fits disagree by more than 1%
    double reference = 0.0;
    double rel_error = 0.0;
    double omega = 0.0;
    std::string family;
};

nlohmann::json to_json(const AlphaSweepReport& r);

/// Polynomial extrapolation to s = 0 through (s_i, v_i).
double extrapolate_to_zero(const std::vector<double>& s, const std::vector<double>& v);

/// eps_inner shrinks as sqrt((2 - alpha)/(2 - alpha_0)) from cfg.eps_inner.
AlphaSweepReport sweep_alpha(const Field& u, const FamilySpec& fam, const Vec& x,
                             const std::vector<double>& alphas, const QuadratureConfig& cfg);

/// C_{n,p} = (1/n) lim (2 - alpha) \int_{B_1} |y|^2 / ||y||_p^{n+alpha} dy,
/// extrapolated from alpha in {1.9, 1.95, 1.99}.
double anisotropic_constant(int n, double p, double quad_tol = 1e-10);

/// Norm-equivalence bracket [lo, hi] for C_{n,p}.
struct Bracket {
    double lo = 0.0, hi = 0.0;
};
Bracket anisotropic_bracket(int n, double p);

struct OmegaCalibration {
    int n = 1;
    double omega = 0.0;
    std::string convention;  // "sphere_surface", "ball_volume" or "coincide"
    double limit_sphere = 0.0, limit_ball = 0.0;
};

/// Picks W in {sigma_{n-1}, |B_1|} for which the prefactor 4n/W makes the
/// sweep of u = e^{-|x|^2} at 0 reach 2n within 5%. Cached per n; with a
/// non-empty cache_path the result is also read from and written to that
/// JSON file.
OmegaCalibration calibrate_omega_n(int n, const std::string& cache_path = "");

}  // namespace nlop
