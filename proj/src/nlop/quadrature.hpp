#pragma once

// Adaptive Gauss-Kronrod (7/15) integration, Gauss-Legendre rules and
// integration over the unit sphere in dimensions 1..3.

#include "nlop/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace nlop {

template <std::size_t N>
struct QuadResult {
    std::array<double, N> value{};
    double err = 0.0;
    bool converged = true;
    long evals = 0;
};

struct AdaptiveOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-8;
    int max_depth = 24;       // bisection depth cap per initial segment
    int max_segments = 20000;
    std::size_t err_components = 0;  // 0 = all components drive refinement
};

/// Gauss-Legendre nodes and weights on [-1, 1], 1 <= m <= 64.
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};
const GaussRule& gauss_legendre(int m);

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <std::size_t N>
struct Segment {
    double a, b;
    int depth;
    std::array<double, N> value;
    double err;
};

template <std::size_t N, class F>
Segment<N> gk15(F& f, double a, double b, int depth, std::size_t nerr) {
    const double c = 0.5 * (a + b);
    const double hl = 0.5 * (b - a);
    std::array<double, N> k{}, g{};
    const auto fc = f(c);
    for (std::size_t i = 0; i < N; ++i) {
        k[i] = kWgk[7] * fc[i];
        g[i] = kWg[3] * fc[i];
    }
    for (int j = 0; j < 7; ++j) {
        const double dx = hl * kXgk[j];
        const auto f1 = f(c - dx);
        const auto f2 = f(c + dx);
        for (std::size_t i = 0; i < N; ++i) {
            const double s = f1[i] + f2[i];
            k[i] += kWgk[j] * s;
            if (j % 2 == 1) g[i] += kWg[j / 2] * s;
        }
    }
    Segment<N> seg{a, b, depth, {}, 0.0};
    for (std::size_t i = 0; i < N; ++i) {
        seg.value[i] = k[i] * hl;
        if (i < nerr) seg.err += std::abs((k[i] - g[i]) * hl);
    }
    return seg;
}

}  // namespace detail

/// Globally adaptive GK15 over the union of [breaks[i], breaks[i+1]].
/// F maps double -> std::array<double, N>. The error estimate is the sum of
/// |K15 - G7| over the first `err_components` components.
template <std::size_t N, class F>
QuadResult<N> integrate_adaptive(F&& f, std::span<const double> breaks,
                                 const AdaptiveOptions& opt) {
    using Seg = detail::Segment<N>;
    const std::size_t nerr = opt.err_components == 0 ? N : std::min(N, opt.err_components);
    QuadResult<N> out;
    std::vector<Seg> heap;
    std::vector<Seg> frozen;
    auto cmp = [](const Seg& l, const Seg& r) {
        if (l.err != r.err) return l.err < r.err;
        return l.a > r.a;
    };
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (!(breaks[i + 1] > breaks[i])) continue;
        heap.push_back(detail::gk15<N>(f, breaks[i], breaks[i + 1], 0, nerr));
        out.evals += 15;
    }
    std::make_heap(heap.begin(), heap.end(), cmp);

    auto totals = [&](std::array<double, N>& v, double& e) {
        v.fill(0.0);
        e = 0.0;
        for (const auto* list : {&heap, &frozen})
            for (const auto& s : *list) {
                for (std::size_t i = 0; i < N; ++i) v[i] += s.value[i];
                e += s.err;
            }
    };
    auto scale_of = [&](const std::array<double, N>& v) {
        double m = 0.0;
        for (std::size_t i = 0; i < nerr; ++i) m = std::max(m, std::abs(v[i]));
        return m;
    };

    std::array<double, N> total{};
    double err = 0.0;
    totals(total, err);
    int iter = 0;
    while (!heap.empty()) {
        if (err <= std::max(opt.abs_tol, opt.rel_tol * scale_of(total))) break;
        if (static_cast<int>(heap.size() + frozen.size()) >= opt.max_segments) break;
        std::pop_heap(heap.begin(), heap.end(), cmp);
        Seg s = heap.back();
        heap.pop_back();
        if (s.depth >= opt.max_depth) {
            frozen.push_back(s);
            continue;
        }
        const double m = 0.5 * (s.a + s.b);
        Seg l = detail::gk15<N>(f, s.a, m, s.depth + 1, nerr);
        Seg r = detail::gk15<N>(f, m, s.b, s.depth + 1, nerr);
        out.evals += 30;
        for (std::size_t i = 0; i < N; ++i) total[i] += l.value[i] + r.value[i] - s.value[i];
        err += l.err + r.err - s.err;
        heap.push_back(l);
        std::push_heap(heap.begin(), heap.end(), cmp);
        heap.push_back(r);
        std::push_heap(heap.begin(), heap.end(), cmp);
        if (++iter % 64 == 0) totals(total, err);
    }
    totals(total, err);
    out.value = total;
    out.err = err;
    out.converged = err <= std::max(opt.abs_tol, opt.rel_tol * scale_of(total));
    return out;
}

/// Integrates f(theta) over S^{n-1}; with `half` only over a half sphere
/// (theta_1 >= 0 for n = 1, phi in [0, pi] for n = 2, theta_3 >= 0 for n = 3).
/// Angular breakpoints sit on the coordinate hyperplanes, where p-norm
/// kernels have kinks. For n = 3 the inner azimuthal errors are added to err.
template <std::size_t N, class F>
QuadResult<N> integrate_sphere(int n, bool half, F&& f, const AdaptiveOptions& opt) {
    constexpr double pi = std::numbers::pi;
    QuadResult<N> out;
    if (n == 1) {
        out.value = f(Vec{1.0, 0.0, 0.0});
        if (!half) {
            const auto v = f(Vec{-1.0, 0.0, 0.0});
            for (std::size_t i = 0; i < N; ++i) out.value[i] += v[i];
        }
        out.evals = half ? 1 : 2;
        return out;
    }
    if (n == 2) {
        std::vector<double> br = {0.0, 0.5 * pi, pi};
        if (!half) {
            br.push_back(1.5 * pi);
            br.push_back(2.0 * pi);
        }
        auto g = [&](double phi) { return f(Vec{std::cos(phi), std::sin(phi), 0.0}); };
        return integrate_adaptive<N>(g, br, opt);
    }
    // n == 3: theta = (sin psi cos phi, sin psi sin phi, cos psi)
    const std::array<double, 5> phi_br = {0.0, 0.5 * pi, pi, 1.5 * pi, 2.0 * pi};
    AdaptiveOptions inner_opt = opt;
    inner_opt.rel_tol = opt.rel_tol * 0.1;
    inner_opt.abs_tol = opt.abs_tol * 0.1;
    bool inner_ok = true;
    long inner_evals = 0;
    auto outer = [&](double psi) {
        const double sp = std::sin(psi), cp = std::cos(psi);
        auto g = [&](double phi) {
            return f(Vec{sp * std::cos(phi), sp * std::sin(phi), cp});
        };
        auto r = integrate_adaptive<N>(g, phi_br, inner_opt);
        inner_ok = inner_ok && r.converged;
        inner_evals += r.evals;
        std::array<double, N + 1> v{};
        for (std::size_t i = 0; i < N; ++i) v[i] = sp * r.value[i];
        v[N] = sp * r.err;
        return v;
    };
    std::vector<double> br = {0.0, 0.5 * pi};
    if (!half) br.push_back(pi);
    AdaptiveOptions o = opt;
    o.err_components = opt.err_components == 0 ? N : opt.err_components;
    auto r = integrate_adaptive<N + 1>(outer, br, o);
    for (std::size_t i = 0; i < N; ++i) out.value[i] = r.value[i];
    out.err = r.err + std::abs(r.value[N]);
    out.converged = r.converged && inner_ok;
    out.evals = r.evals + inner_evals;
    return out;
}

/// Geometric breakpoints a, a*q, a*q^2, ..., b (a > 0, q > 1), preceded by 0
/// when `from_zero` is set.
std::vector<double> geometric_breaks(double a, double b, double q, bool from_zero);

}  // namespace nlop
