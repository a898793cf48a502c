#include "nlop/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace nlop;

namespace {

DomainSpec ball1(int grid_n) {
    DomainSpec d;
    d.dim = 1;
    d.radius = 1.0;
    d.grid_n = grid_n;
    return d;
}

double nodal_x(const BallLattice& lat, int i) { return lat.grid.node(lat.nodes[i])[0]; }

}  // namespace

TEST_CASE("domain validation") {
    DomainSpec d = ball1(32);
    CHECK_THROWS_AS(validate(d), ConfigError);
    d.grid_n = 33;
    d.dim = 3;
    CHECK_THROWS_AS(validate(d), ConfigError);
    d.dim = 2;
    d.grid_n = 99;
    CHECK_THROWS_AS(validate(d), ConfigError);
    d.dim = 1;
    d.grid_n = 4099;
    CHECK_THROWS_AS(validate(d), ConfigError);
}

TEST_CASE("zero right-hand side gives the zero solution") {
    const auto f0 = with_constant_f(make_identity_g(), 0.0);
    const auto r = solve_dirichlet(make_power_law(1, 1.0), f0, ball1(33), QuadratureConfig{}, 1e-10);
    CHECK(r.report.converged);
    CHECK(r.nodal.cwiseAbs().maxCoeff() == 0.0);
    const auto g = with_constant_f(make_power_g(1.0), 0.0);
    const auto rn = solve_dirichlet_nonlinear(g, make_power_law(1, 1.0), ball1(33), QuadratureConfig{}, 1e-10);
    CHECK(rn.nodal.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("discrete operator structure") {
    const auto op = assemble_LK_matrix(make_power_law(1, 1.0), ball1(33), QuadratureConfig{});
    const Eigen::MatrixXd M = op.A + Eigen::MatrixXd(op.b.asDiagonal());
    // Translation-invariant even kernel on a uniform lattice.
    CHECK((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * M.cwiseAbs().maxCoeff());
    // Off-diagonal entries are negative, rows are diagonally dominant: the
    // constant 1 inside the ball has L_K = exterior mass > 0.
    for (int i = 0; i < M.rows(); ++i) {
        for (int j = 0; j < M.cols(); ++j)
            if (i != j) CHECK(M(i, j) <= 0.0);
        CHECK(M.row(i).sum() > 0.0);
    }
}

TEST_CASE("unit right-hand side: even, positive, decreasing profile") {
    const auto f1 = with_constant_f(make_identity_g(), 1.0);
    const auto coarse = solve_dirichlet(make_power_law(1, 1.0), f1, ball1(33), QuadratureConfig{}, 1e-10);
    REQUIRE(coarse.report.converged);
    const auto L = make_ball_lattice(ball1(33), QuadratureConfig{});
    const int m = static_cast<int>(coarse.nodal.size());
    for (int i = 0; i < m; ++i) {
        CHECK(coarse.nodal[i] > 0.0);
        CHECK(coarse.nodal[i] == doctest::Approx(coarse.nodal[L.mirror[i]]).epsilon(1e-10));
        if (i + 1 < m && nodal_x(L, i + 1) > 0.0 && nodal_x(L, i) >= 0.0) CHECK(coarse.nodal[i + 1] < coarse.nodal[i]);
    }

    // Refinement oracle: the 4x finer run, sampled at the coarse nodes. The
    // boundary layer u ~ dist^{1/2} limits the sup-norm rate to h^{1/2}, so
    // 2% needs a 1025-node base grid.
    {
        const auto base = solve_dirichlet(make_power_law(1, 1.0), f1, ball1(1025), QuadratureConfig{}, 1e-10);
        const auto fine = solve_dirichlet(make_power_law(1, 1.0), f1, ball1(4097), QuadratureConfig{}, 1e-10);
        REQUIRE(base.report.converged);
        REQUIRE(fine.report.converged);
        const auto Lb = make_ball_lattice(ball1(1025), QuadratureConfig{});
        double diff = 0.0;
        for (int i = 0; i < static_cast<int>(base.nodal.size()); ++i)
            diff = std::max(diff, std::abs(base.nodal[i] - fine.u.value(Lb.grid.node(Lb.nodes[i]))));
        CHECK(diff <= 0.02 * fine.nodal.maxCoeff());
    }

    // For alpha = 1, c = 1 the exact solution is sqrt(1 - x^2) / pi.
    const auto fine = solve_dirichlet(make_power_law(1, 1.0), f1, ball1(129), QuadratureConfig{}, 1e-10);
    double worst = 0.0;
    const auto Lf = make_ball_lattice(ball1(129), QuadratureConfig{});
    for (int i = 0; i < static_cast<int>(fine.nodal.size()); ++i) {
        const double x = nodal_x(Lf, i);
        worst = std::max(worst, std::abs(fine.nodal[i] - std::sqrt(1.0 - x * x) / std::numbers::pi));
    }
    CHECK(worst <= 0.1 / std::numbers::pi);

    // Best scalar fit of the profile (1 - x^2)^{1/2}.
    Eigen::VectorXd phi(fine.nodal.size());
    for (int i = 0; i < phi.size(); ++i) phi[i] = std::sqrt(1.0 - nodal_x(Lf, i) * nodal_x(Lf, i));
    const double c = fine.nodal.dot(phi) / phi.dot(phi);
    CHECK((fine.nodal - c * phi).cwiseAbs().maxCoeff() < 0.1 * fine.nodal.cwiseAbs().maxCoeff());
}

TEST_CASE("identity G takes the linear path") {
    const auto f = with_affine_power_f(make_identity_g(), 0.5, 0.2, 0.0, 1.0, 0.0, 2.0);
    const auto a = solve_dirichlet(make_power_law(1, 1.2), f, ball1(33), QuadratureConfig{}, 1e-11);
    const auto b = solve_dirichlet_nonlinear(f, make_power_law(1, 1.2), ball1(33), QuadratureConfig{}, 1e-11);
    CHECK((a.nodal - b.nodal).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("nonlinear solve with G(t) = |t| t") {
    const auto s = with_affine_power_f(make_power_g(1.0), 0.5, 0.0, 1.0, 1.0, 0.0, 2.0);
    const auto r = solve_dirichlet_nonlinear(s, make_power_law(1, 1.0), ball1(65), QuadratureConfig{}, 1e-8);
    CHECK(r.report.converged);
    CHECK(r.report.final_residual_sup < 1e-6);
    CHECK(r.nodal.minCoeff() > 0.0);
}
