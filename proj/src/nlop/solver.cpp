#include "nlop/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nlop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lattice quadrature data for every cell offset m = cell - node.
struct CellTable {
    int n = 1;
    int base = 0;   // m + base >= 0
    int span = 0;   // offsets per axis
    std::vector<std::vector<CellPoint>> points;
    std::vector<double> mass;                 // sum of wk
    std::vector<std::array<double, 4>> corner;  // sum of wk * phi_c

    std::size_t slot(const std::array<int, 3>& m) const {
        std::size_t s = static_cast<std::size_t>(m[0] + base);
        if (n == 2) s += static_cast<std::size_t>(m[1] + base) * span;
        return s;
    }
};

CellTable build_cells(const KernelSpec& spec, const BallLattice& lat, bool keep_points) {
    const GridData& g = lat.grid;
    CellTable t;
    t.n = g.dim;
    t.base = g.counts[0] - 1;
    t.span = 2 * g.counts[0] - 2;
    const std::size_t total = t.n == 1 ? t.span : static_cast<std::size_t>(t.span) * t.span;
    t.points.resize(keep_points ? total : 0);
    t.mass.assign(total, 0.0);
    t.corner.assign(total, {0.0, 0.0, 0.0, 0.0});
    const int sy = t.n == 2 ? t.span : 1;
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < sy; ++j) {
        std::vector<CellPoint> pts;
        for (int i = 0; i < t.span; ++i) {
            const std::array<int, 3> m{i - t.base, t.n == 2 ? j - t.base : 0, 0};
            const Vec d{m[0] * g.h, m[1] * g.h, 0.0};
            pts.clear();
            cell_points(spec, d, g.h, lat.eps, pts);
            const std::size_t s = t.slot(m);
            for (const auto& p : pts) {
                t.mass[s] += p.wk;
                for (int c = 0; c < (1 << t.n); ++c) t.corner[s][c] += p.wk * p.phi[c];
            }
            if (keep_points) t.points[s] = pts;
        }
    }
    return t;
}

std::array<int, 3> corner_offset(int c) { return {c & 1, (c >> 1) & 1, 0}; }

// Lattice indices of the cells (lower corners) inside the box.
std::vector<std::array<int, 3>> box_cells(const GridData& g) {
    std::vector<std::array<int, 3>> out;
    const int cy = g.dim == 2 ? g.counts[1] - 1 : 1;
    for (int j = 0; j < cy; ++j)
        for (int i = 0; i < g.counts[0] - 1; ++i) out.push_back({i, j, 0});
    return out;
}

// Row of the inner-ball Taylor stencil -1/2 sum M_ab D_ab at node k.
// Appends (lattice index, coefficient) pairs.
void hessian_stencil(const Mat& M, const GridData& g, const std::array<int, 3>& k,
                     std::vector<std::pair<std::size_t, double>>& out) {
    const int n = g.dim;
    const double h2 = g.h * g.h;
    auto at = [&](int da, int a, int db, int b) {
        std::array<int, 3> q = k;
        q[a] += da;
        q[b] += db;
        return g.index(q);
    };
    for (int a = 0; a < n; ++a) {
        const double c = -0.5 * M[a][a] / h2;
        out.push_back({at(1, a, 0, a), c});
        out.push_back({at(-1, a, 0, a), c});
        out.push_back({g.index(k), -2.0 * c});
        for (int b = 0; b < n; ++b) {
            if (b == a || M[a][b] == 0.0) continue;
            const double cm = -0.5 * M[a][b] / (4.0 * h2);
            out.push_back({at(1, a, 1, b), cm});
            out.push_back({at(1, a, -1, b), -cm});
            out.push_back({at(-1, a, 1, b), -cm});
            out.push_back({at(-1, a, -1, b), cm});
        }
    }
}

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Eigen::VectorXd apply_f(const NonlinearitySpec& f, const Eigen::VectorXd& u) {
    Eigen::VectorXd r(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) r[i] = eval_f(f, u[i]);
    return r;
}

double lambda_min_estimate(const Eigen::LLT<Eigen::MatrixXd>& llt, Eigen::Index size) {
    if (size == 0) return 0.0;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(size).normalized();
    double mu = 0.0;
    for (int it = 0; it < 60; ++it) {
        Eigen::VectorXd w = llt.solve(v);
        const double nw = w.norm();
        if (!(nw > 0.0)) break;
        const double next = 1.0 / nw;
        v = w / nw;
        if (it > 0 && std::abs(next - mu) <= 1e-10 * std::abs(next)) {
            mu = next;
            break;
        }
        mu = next;
    }
    return mu;
}

// Discrete F_{G,K} on the ball lattice.
class NonlinearOperator {
public:
    NonlinearOperator(const NonlinearitySpec& g, const KernelSpec& spec, const BallLattice& lat)
        : g_(g), lat_(lat), rule_(spec, g, lat.eps), M_(inner_moment_matrix(spec, lat.eps)) {
        const GridData& grid = lat.grid;
        cells_ = build_cells(spec, lat, true);
        for (const auto& c : box_cells(grid)) {
            bool active = false;
            for (int q = 0; q < (1 << grid.dim); ++q) {
                std::array<int, 3> k = c;
                const auto o = corner_offset(q);
                for (int a = 0; a < grid.dim; ++a) k[a] += o[a];
                if (lat.unknown_of[grid.index(k)] >= 0) active = true;
            }
            (active ? active_ : inactive_).push_back(c);
        }
        const std::size_t N = lat.nodes.size();
        far_.assign(N, 0.0);
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < N; ++i) {
            const auto p = grid.multi_index(lat.nodes[i]);
            double z = 0.0;
            for (const auto& c : inactive_) z += cells_.mass[cells_.slot(diff(c, p))];
            far_[i] = z + box_exterior_mass(spec, grid, grid.node(lat.nodes[i]));
        }
    }

    std::size_t size() const { return lat_.nodes.size(); }

    Eigen::VectorXd apply(const Eigen::VectorXd& u) const {
        const std::vector<double> full = expand(u);
        const std::size_t N = size();
        Eigen::VectorXd out(N);
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < N; ++i) out[i] = row_value(full, i);
        return out;
    }

    /// Secant (Kacanov) matrix: entries weighted by G(t)/t, floored.
    Eigen::MatrixXd secant_matrix(const Eigen::VectorXd& u, bool unit) const {
        const std::vector<double> full = expand(u);
        const GridData& grid = lat_.grid;
        const int n = grid.dim;
        const std::size_t N = size();
        const double umax = std::max(sup_norm(u), 1e-300);
        const double floor = unit ? 1.0 : 1e-3 * secant(umax);
        auto sec = [&](double t) { return unit ? 1.0 : std::max(secant(t), floor); };
        Eigen::MatrixXd P = Eigen::MatrixXd::Zero(N, N);
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < N; ++i) {
            const auto p = grid.multi_index(lat_.nodes[i]);
            const double ui = full[lat_.nodes[i]];
            for (const auto& c : active_) {
                const auto& pts = cells_.points[cells_.slot(diff(c, p))];
                if (pts.empty()) continue;
                std::array<double, 4> uc{};
                std::array<int, 4> jc{-1, -1, -1, -1};
                for (int q = 0; q < (1 << n); ++q) {
                    std::array<int, 3> k = c;
                    const auto o = corner_offset(q);
                    for (int a = 0; a < n; ++a) k[a] += o[a];
                    const std::size_t idx = grid.index(k);
                    uc[q] = full[idx];
                    jc[q] = lat_.unknown_of[idx];
                }
                for (const auto& pt : pts) {
                    double uy = 0.0;
                    for (int q = 0; q < (1 << n); ++q) uy += pt.phi[q] * uc[q];
                    const double w = pt.wk * sec(ui - uy);
                    P(i, i) += w;
                    for (int q = 0; q < (1 << n); ++q)
                        if (jc[q] >= 0) P(i, jc[q]) -= w * pt.phi[q];
                }
            }
            P(i, i) += far_[i] * sec(ui);
            Vec gr{};
            Mat D{};
            derivatives(full, p, gr, D);
            const double ain = unit ? 1.0 : std::max(rule_.secant_weight(gr, D), floor);
            std::vector<std::pair<std::size_t, double>> st;
            hessian_stencil(M_, grid, p, st);
            for (const auto& [idx, cval] : st) {
                const int j = lat_.unknown_of[idx];
                if (j >= 0) P(i, j) += ain * cval;
            }
        }
        return P;
    }

private:
    static std::array<int, 3> diff(const std::array<int, 3>& c, const std::array<int, 3>& p) {
        return {c[0] - p[0], c[1] - p[1], 0};
    }

    double secant(double t) const {
        const double at = std::abs(t);
        if (at < 1e-300) return eval_G_prime(g_, 0.0);
        return eval_G(g_, at) / at;
    }

    std::vector<double> expand(const Eigen::VectorXd& u) const {
        std::vector<double> full(lat_.grid.size(), 0.0);
        for (std::size_t i = 0; i < lat_.nodes.size(); ++i) full[lat_.nodes[i]] = u[i];
        return full;
    }

    void derivatives(const std::vector<double>& full, const std::array<int, 3>& p, Vec& gr,
                     Mat& D) const {
        const GridData& grid = lat_.grid;
        const double h = grid.h;
        auto v = [&](int dx, int dy) {
            std::array<int, 3> q = p;
            q[0] += dx;
            q[1] += dy;
            return full[grid.index(q)];
        };
        gr = Vec{};
        D = Mat{};
        const double u0 = v(0, 0);
        gr[0] = (v(1, 0) - v(-1, 0)) / (2.0 * h);
        D[0][0] = (v(1, 0) - 2.0 * u0 + v(-1, 0)) / (h * h);
        if (grid.dim == 2) {
            gr[1] = (v(0, 1) - v(0, -1)) / (2.0 * h);
            D[1][1] = (v(0, 1) - 2.0 * u0 + v(0, -1)) / (h * h);
            D[0][1] = D[1][0] = (v(1, 1) - v(1, -1) - v(-1, 1) + v(-1, -1)) / (4.0 * h * h);
        }
    }

    double row_value(const std::vector<double>& full, std::size_t i) const {
        const GridData& grid = lat_.grid;
        const int n = grid.dim;
        const auto p = grid.multi_index(lat_.nodes[i]);
        const double ui = full[lat_.nodes[i]];
        double s = 0.0;
        for (const auto& c : active_) {
            const auto& pts = cells_.points[cells_.slot(diff(c, p))];
            if (pts.empty()) continue;
            std::array<double, 4> uc{};
            for (int q = 0; q < (1 << n); ++q) {
                std::array<int, 3> k = c;
                const auto o = corner_offset(q);
                for (int a = 0; a < n; ++a) k[a] += o[a];
                uc[q] = full[grid.index(k)];
            }
            for (const auto& pt : pts) {
                double uy = 0.0;
                for (int q = 0; q < (1 << n); ++q) uy += pt.phi[q] * uc[q];
                s += pt.wk * eval_G(g_, ui - uy);
            }
        }
        s += eval_G(g_, ui) * far_[i];
        Vec gr{};
        Mat D{};
        derivatives(full, p, gr, D);
        return s + rule_.apply(gr, D);
    }

    NonlinearitySpec g_;
    const BallLattice& lat_;
    InnerGRule rule_;
    Mat M_;
    CellTable cells_;
    std::vector<std::array<int, 3>> active_, inactive_;
    std::vector<double> far_;  // exterior-of-box mass plus mass of all-zero cells
};

void finish_report(SolveReport& rep, double tol) {
    rep.final_residual_sup = rep.residual_history.empty() ? 0.0 : rep.residual_history.back();
    rep.converged = rep.final_residual_sup <= tol;
}

}  // namespace

void validate(const DomainSpec& d) {
    if (d.dim != 1 && d.dim != 2) throw ConfigError("domain.dim must be 1 or 2");
    if (!(d.radius > 0.0) || !std::isfinite(d.radius)) throw ConfigError("domain.radius must be positive");
    if (d.grid_n < 17 || d.grid_n % 2 == 0) throw ConfigError("domain.grid_n must be odd and >= 17");
    // Dense operator: about grid_n^(2 dim) doubles.
    if (d.dim == 1 && d.grid_n > 4097) throw ConfigError("domain.grid_n must be <= 4097 for dim 1");
    if (d.dim == 2 && d.grid_n > 97) throw ConfigError("domain.grid_n must be <= 97 for dim 2");
}

nlohmann::json to_json(const DomainSpec& d) {
    return {{"dim", d.dim}, {"radius", d.radius}, {"grid_n", d.grid_n}};
}

DomainSpec domain_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("domain must be an object");
    DomainSpec d;
    try {
        d.dim = j.value("dim", d.dim);
        d.radius = j.value("radius", d.radius);
        d.grid_n = j.value("grid_n", d.grid_n);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("domain: malformed value: ") + e.what());
    }
    validate(d);
    return d;
}

BallLattice make_ball_lattice(const DomainSpec& d, const QuadratureConfig& cfg) {
    validate(d);
    const int half = (d.grid_n - 1) / 2;
    const double h = d.radius / half;
    BallLattice lat;
    lat.eps = std::max(cfg.eps_inner, 4.0 * h);
    const int pad = static_cast<int>(std::ceil(lat.eps / h - 1e-9)) + 1;
    const int count = d.grid_n + 2 * pad;
    const int center = half + pad;
    GridData& g = lat.grid;
    g.dim = d.dim;
    g.h = h;
    g.lo = Vec{};
    for (int a = 0; a < d.dim; ++a) {
        g.lo[a] = -center * h;
        g.counts[a] = count;
    }
    g.samples.assign(g.size(), 0.0);
    g.exterior_value = 0.0;
    lat.unknown_of.assign(g.size(), -1);
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const auto k = g.multi_index(idx);
        long r2 = 0;
        for (int a = 0; a < d.dim; ++a) r2 += static_cast<long>(k[a] - center) * (k[a] - center);
        if (r2 < static_cast<long>(half) * half) {
            lat.unknown_of[idx] = static_cast<int>(lat.nodes.size());
            lat.nodes.push_back(idx);
        }
    }
    lat.mirror.resize(lat.nodes.size());
    for (std::size_t i = 0; i < lat.nodes.size(); ++i) {
        auto k = g.multi_index(lat.nodes[i]);
        for (int a = 0; a < d.dim; ++a) k[a] = 2 * center - k[a];
        lat.mirror[i] = lat.unknown_of[g.index(k)];
    }
    return lat;
}

Field lattice_field(const BallLattice& lat, const Eigen::VectorXd& values) {
    GridData g = lat.grid;
    for (std::size_t i = 0; i < lat.nodes.size(); ++i) g.samples[lat.nodes[i]] = values[i];
    return Field::grid(std::move(g));
}

DiscreteOperator assemble_LK_matrix(const KernelSpec& spec, const DomainSpec& domain,
                                    const QuadratureConfig& cfg) {
    validate(spec);
    validate(cfg);
    if (spec.dim != domain.dim) throw ConfigError("kernel.dim and domain.dim differ");
    DiscreteOperator op;
    op.spec = spec;
    op.domain = domain;
    op.cfg = cfg;
    op.lattice = make_ball_lattice(domain, cfg);
    op.cfg.eps_inner = op.lattice.eps;
    const BallLattice& lat = op.lattice;
    const GridData& g = lat.grid;
    const int n = g.dim;
    const CellTable cells = build_cells(spec, lat, false);
    const Mat M = inner_moment_matrix(spec, lat.eps);
    const auto all_cells = box_cells(g);

    auto T = [&](const std::array<int, 3>& o) {
        double s = 0.0;
        for (int q = 0; q < (1 << n); ++q) {
            const auto c = corner_offset(q);
            const std::array<int, 3> m{o[0] - c[0], o[1] - c[1], 0};
            if (std::abs(m[0]) > cells.base || (n == 2 && std::abs(m[1]) > cells.base)) continue;
            if (m[0] + cells.base >= cells.span || (n == 2 && m[1] + cells.base >= cells.span)) continue;
            s += cells.corner[cells.slot(m)][q];
        }
        return s;
    };

    const std::size_t N = lat.nodes.size();
    op.A = Eigen::MatrixXd::Zero(N, N);
    op.b = Eigen::VectorXd::Zero(N);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < N; ++i) {
        const auto p = g.multi_index(lat.nodes[i]);
        double W = 0.0;
        for (const auto& c : all_cells) W += cells.mass[cells.slot({c[0] - p[0], c[1] - p[1], 0})];
        op.b[i] = box_exterior_mass(spec, g, g.node(lat.nodes[i]));
        op.A(i, i) += W;
        for (std::size_t j = 0; j < N; ++j) {
            const auto q = g.multi_index(lat.nodes[j]);
            const std::array<int, 3> o{q[0] - p[0], q[1] - p[1], 0};
            const std::array<int, 3> mo{-o[0], -o[1], 0};
            op.A(i, j) -= 0.5 * (T(o) + T(mo));
        }
        std::vector<std::pair<std::size_t, double>> st;
        hessian_stencil(M, g, p, st);
        for (const auto& [idx, cval] : st) {
            const int j = lat.unknown_of[idx];
            if (j >= 0) op.A(i, j) += cval;
        }
    }
    return op;
}

nlohmann::json to_json(const SolveReport& r) {
    return {{"iterations", r.iterations},
            {"converged", r.converged},
            {"final_residual_sup", r.final_residual_sup},
            {"method", r.method},
            {"lambda_min", r.lambda_min},
            {"eps_inner", r.eps_inner},
            {"midpoint_residual_sup", r.midpoint_residual_sup},
            {"midpoint_samples", r.midpoint_samples},
            {"residual_history", r.residual_history}};
}

SolveResult solve_dirichlet(const KernelSpec& spec, const NonlinearitySpec& rhs,
                            const DomainSpec& domain, const QuadratureConfig& cfg,
                            double solve_tol, int max_iter) {
    validate(rhs);
    if (!(solve_tol > 0.0)) throw ConfigError("solve_tol must be positive");
    const DiscreteOperator op = assemble_LK_matrix(spec, domain, cfg);
    const std::size_t N = op.lattice.nodes.size();
    Eigen::MatrixXd K = op.A;
    K.diagonal() += op.b;
    K = 0.5 * (K + K.transpose()).eval();

    SolveResult res;
    SolveReport& rep = res.report;
    rep.eps_inner = op.lattice.eps;
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) throw ConvergenceError("discrete operator is not positive definite");
    rep.lambda_min = lambda_min_estimate(llt, static_cast<Eigen::Index>(N));

    Eigen::VectorXd u = Eigen::VectorXd::Zero(N);
    auto residual = [&](const Eigen::VectorXd& v) { return (K * v - apply_f(rhs, v)).eval(); };
    Eigen::VectorXd r = residual(u);
    rep.residual_history.push_back(sup_norm(r));
    const double lip = f_lipschitz(rhs);
    const bool picard = lip < rep.lambda_min;
    rep.method = picard ? "picard" : "newton";
    for (int it = 0; it < max_iter && rep.residual_history.back() > solve_tol; ++it) {
        Eigen::VectorXd next;
        if (picard) {
            next = llt.solve(apply_f(rhs, u));
        } else {
            Eigen::MatrixXd J = K;
            for (std::size_t i = 0; i < N; ++i) J(i, i) -= eval_f_prime(rhs, u[i]);
            const Eigen::VectorXd step = J.partialPivLu().solve(-r);
            const double r0 = r.norm();
            double t = 1.0;
            next = u + step;
            while (t > 1.0 / 1024 && residual(next).norm() > (1.0 - 1e-4 * t) * r0) {
                t *= 0.5;
                next = u + t * step;
            }
        }
        u = next;
        r = residual(u);
        rep.residual_history.push_back(sup_norm(r));
        rep.iterations = it + 1;
    }
    finish_report(rep, solve_tol);
    res.nodal = u;
    res.u = lattice_field(op.lattice, u);
    if (!rep.converged) throw SolveError("solve_dirichlet did not reach solve_tol", res);
    return res;
}

SolveResult solve_dirichlet_nonlinear(const NonlinearitySpec& g, const KernelSpec& spec,
                                      const DomainSpec& domain, const QuadratureConfig& cfg,
                                      double solve_tol, int max_iter) {
    validate(g);
    if (g_is_linear(g)) return solve_dirichlet(spec, g, domain, cfg, solve_tol, max_iter);
    validate(spec);
    validate(cfg);
    if (!(solve_tol > 0.0)) throw ConfigError("solve_tol must be positive");
    if (spec.dim != domain.dim) throw ConfigError("kernel.dim and domain.dim differ");
    if (!(g.gamma + 2.0 > spec.alpha + 0.05))
        throw ConfigError("nonlinearity.gamma too small for the inner-ball integrand");
    const BallLattice lat = make_ball_lattice(domain, cfg);
    const NonlinearOperator F(g, spec, lat);
    const std::size_t N = F.size();

    SolveResult res;
    SolveReport& rep = res.report;
    rep.eps_inner = lat.eps;
    rep.method = "secant-armijo";
    Eigen::VectorXd u = Eigen::VectorXd::Zero(N);
    auto residual = [&](const Eigen::VectorXd& v) { return (F.apply(v) - apply_f(g, v)).eval(); };
    Eigen::VectorXd r = residual(u);
    rep.residual_history.push_back(sup_norm(r));
    for (int it = 0; it < max_iter && rep.residual_history.back() > solve_tol; ++it) {
        Eigen::MatrixXd P = F.secant_matrix(u, it == 0);
        for (std::size_t i = 0; i < N; ++i) P(i, i) -= eval_f_prime(g, u[i]);
        const Eigen::VectorXd step = P.partialPivLu().solve(-r);
        const double r0 = r.norm();
        double t = 1.0;
        Eigen::VectorXd next = u + step;
        Eigen::VectorXd rn = residual(next);
        while (t > 1.0 / 1024 && rn.norm() > (1.0 - 1e-4 * t) * r0) {
            t *= 0.5;
            next = u + t * step;
            rn = residual(next);
        }
        u = next;
        r = rn;
        rep.residual_history.push_back(sup_norm(r));
        rep.iterations = it + 1;
    }
    finish_report(rep, solve_tol);
    res.nodal = u;
    res.u = lattice_field(lat, u);
    if (!rep.converged) throw SolveError("solve_dirichlet_nonlinear did not reach solve_tol", res);
    return res;
}

double midpoint_residual(const Field& u, const NonlinearitySpec& g, const KernelSpec& spec,
                         const DomainSpec& domain, double eps, int samples, int* used) {
    const GridData& grid = u.grid_data();
    const int n = grid.dim;
    std::vector<Vec> pts;
    const double limit = domain.radius - grid.h;
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        Vec x = grid.node(idx);
        for (int a = 0; a < n; ++a) x[a] += 0.5 * grid.h;
        if (norm(x, n) < limit) pts.push_back(x);
    }
    if (pts.empty()) {
        if (used) *used = 0;
        return 0.0;
    }
    const std::size_t stride = std::max<std::size_t>(1, pts.size() / std::max(1, samples));
    std::vector<Vec> chosen;
    for (std::size_t i = 0; i < pts.size() && static_cast<int>(chosen.size()) < samples; i += stride)
        chosen.push_back(pts[i]);
    QuadratureConfig cfg;
    cfg.eps_inner = eps;
    std::vector<double> out(chosen.size(), 0.0);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        const double lhs = eval_FGK(u, g, spec, chosen[i], cfg).value;
        out[i] = std::abs(lhs - eval_f(g, u.value(chosen[i])));
    }
    if (used) *used = static_cast<int>(chosen.size());
    return *std::max_element(out.begin(), out.end());
}

}  // namespace nlop
