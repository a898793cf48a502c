#pragma once

// Principal-value evaluation of L_K u(x) = P.V. \int (u(x) - u(y)) K(x - y) dy
// and of F_{G,K} u(x) = P.V. \int G(u(x) - u(y)) K(x - y) dy.
//
// Analytic fields: polar coordinates about x with the directions theta and
// -theta paired. On the inner ball B_eps(x) the second-order Taylor term is
// integrated in closed form and the remainder by quadrature; the shell
// eps <= r <= R is adaptive Gauss-Kronrod; the u(x) part of the tail is exact
// and the rest is bounded.
//
// Grid fields (n <= 2): per-cell quadrature of the multilinear interpolant
// outside B_eps(x), a Taylor term with a finite-difference Hessian inside it,
// and the exact exterior-of-box kernel mass.

#include "nlop/field.hpp"
#include "nlop/kernels.hpp"
#include "nlop/nonlinearity.hpp"

#include <vector>

#include <json.hpp>

namespace nlop {

struct QuadratureConfig {
    double eps_inner = 1e-3;
    double r_outer = 50.0;
    double rel_tol = 1e-6;
    int max_depth = 24;
};

void validate(const QuadratureConfig& cfg);
/// Defaults; for grid fields eps_inner = max(4h, 1e-3).
QuadratureConfig default_quadrature(const Field& u);
nlohmann::json to_json(const QuadratureConfig& cfg);
/// Missing keys take the defaults.
QuadratureConfig quadrature_from_json(const nlohmann::json& j);

struct EvalResult {
    double value = 0.0;
    double err_estimate = 0.0;
    double tail_bound = 0.0;
    double inner_contribution = 0.0;
    bool converged = true;
};

/// Adaptive refinement hit max_depth; carries the last estimate.
class QuadratureError : public ConvergenceError {
public:
    QuadratureError(const std::string& what, EvalResult last)
        : ConvergenceError(what), last(last) {}
    EvalResult last;
};

EvalResult eval_LK(const Field& u, const KernelSpec& spec, const Vec& x,
                   const QuadratureConfig& cfg);

EvalResult eval_FGK(const Field& u, const NonlinearitySpec& g, const KernelSpec& spec,
                    const Vec& x, const QuadratureConfig& cfg);

/// 2 * sup_bound * \int_{|z| > R} K(z) dz.
double tail_bound(double sup_bound, const KernelSpec& spec, double R);

// Lattice quadrature shared with the collocation solver.

struct CellPoint {
    double wk;                  // quadrature weight times K(y)
    std::array<double, 4> phi;  // multilinear corner basis values at y
};

/// Quadrature points for \int_{cell \ B_eps(0)} K(y) (.) dy, where the cell is
/// [d, d + h]^n relative to the evaluation point. Corner c has offset bit i
/// along axis i. Appends nothing when the cell lies inside B_eps(0).
void cell_points(const KernelSpec& spec, const Vec& d, double h, double eps,
                 std::vector<CellPoint>& out);

/// \int_{y outside the grid box} K(x - y) dy for x inside the box.
double box_exterior_mass(const KernelSpec& spec, const GridData& g, const Vec& x);

/// M = (\int_0^eps R(r) r^{n+1} dr) * \int_S A theta theta^T, so that the
/// inner-ball Taylor term is -1/2 sum_ij M_ij d_ij u(x).
Mat inner_moment_matrix(const KernelSpec& spec, double eps);

/// Paired Taylor model of the inner ball for nonlinear G:
/// \int_{B_eps} G(-g.z - z^T H z / 2) K(z) dz with a fixed product rule.
class InnerGRule {
public:
    InnerGRule(const KernelSpec& spec, const NonlinearitySpec& g, double eps);
    double apply(const Vec& grad, const Mat& hess) const;
    /// Secant weight a with apply ~ a * (linear Taylor term), for preconditioning.
    double secant_weight(const Vec& grad, const Mat& hess) const;

private:
    NonlinearitySpec g_;
    int n_;
    std::vector<Vec> theta_;
    std::vector<double> wa_;
    std::vector<double> r_, wr_;
};

}  // namespace nlop
