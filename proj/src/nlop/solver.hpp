#pragma once

// Collocation solver for L_K u = f(u) and F_{G,K} u = f(u) in the ball
// B_radius(0) with u = 0 outside, n = 1 and 2. Unknowns are the lattice nodes
// inside the ball; the discrete operator is the lattice quadrature of
// pv_quadrature applied to the multilinear interpolant.

#include "nlop/field.hpp"
#include "nlop/kernels.hpp"
#include "nlop/nonlinearity.hpp"
#include "nlop/pv_quadrature.hpp"

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace nlop {

struct DomainSpec {
    int dim = 1;
    double radius = 1.0;
    int grid_n = 33;  // nodes per axis across [-radius, radius]; odd
};

void validate(const DomainSpec& d);
nlohmann::json to_json(const DomainSpec& d);
DomainSpec domain_from_json(const nlohmann::json& j);

/// Padded lattice with the unknown (in-ball) nodes marked.
struct BallLattice {
    GridData grid;                     // samples zero, exterior_value 0
    double eps = 0.0;                  // inner radius actually used
    std::vector<std::size_t> nodes;    // lattice index of each unknown
    std::vector<int> unknown_of;       // lattice index -> unknown or -1
    std::vector<int> mirror;           // unknown i -> unknown at -x_i
};

BallLattice make_ball_lattice(const DomainSpec& d, const QuadratureConfig& cfg);

/// L_K u(x_i) = (A u)_i + b_i u_i for u supported on the unknowns.
struct DiscreteOperator {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    BallLattice lattice;
    KernelSpec spec;
    DomainSpec domain;
    QuadratureConfig cfg;
};

DiscreteOperator assemble_LK_matrix(const KernelSpec& spec, const DomainSpec& domain,
                                    const QuadratureConfig& cfg);

/// Grid field carrying `values` on the unknowns and zero elsewhere.
Field lattice_field(const BallLattice& lat, const Eigen::VectorXd& values);

struct SolveReport {
    std::vector<double> residual_history;  // sup-norm residual per iteration
    int iterations = 0;
    bool converged = false;
    double final_residual_sup = 0.0;
    std::string method;
    double lambda_min = 0.0;        // smallest eigenvalue estimate of A + diag(b)
    double eps_inner = 0.0;
    double midpoint_residual_sup = 0.0;  // independent check off the nodes
    int midpoint_samples = 0;
};

nlohmann::json to_json(const SolveReport& r);

struct SolveResult {
    Field u;
    Eigen::VectorXd nodal;  // values at the unknowns
    SolveReport report;
};

class SolveError : public ConvergenceError {
public:
    SolveError(const std::string& what, SolveResult partial)
        : ConvergenceError(what), partial(std::move(partial)) {}
    SolveResult partial;
};

/// L_K u = f(u); f from `rhs` (its G part is ignored).
SolveResult solve_dirichlet(const KernelSpec& spec, const NonlinearitySpec& rhs,
                            const DomainSpec& domain, const QuadratureConfig& cfg,
                            double solve_tol, int max_iter = 200);

/// F_{G,K} u = f(u). Identity G takes the linear path.
SolveResult solve_dirichlet_nonlinear(const NonlinearitySpec& g, const KernelSpec& spec,
                                      const DomainSpec& domain, const QuadratureConfig& cfg,
                                      double solve_tol, int max_iter = 200);

/// Sup over up to `samples` cell midpoints inside the ball of
/// |eval(u, x) - f(u(x))|, using eval_FGK (or eval_LK for identity G).
double midpoint_residual(const Field& u, const NonlinearitySpec& g, const KernelSpec& spec,
                         const DomainSpec& domain, double eps, int samples, int* used = nullptr);

}  // namespace nlop
