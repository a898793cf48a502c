#include "nlop/quadrature.hpp"

#include <mutex>

namespace nlop {

namespace {

GaussRule build_gauss(int m) {
    GaussRule r;
    r.x.resize(m);
    r.w.resize(m);
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (m == 1) p0 = 1.0;
            dp = m * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= m; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = (m == 1) ? 1.0 : m * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.x[i] = -x;
        r.x[m - 1 - i] = x;
        r.w[i] = w;
        r.w[m - 1 - i] = w;
    }
    if (m == 1) {
        r.x[0] = 0.0;
        r.w[0] = 2.0;
    }
    return r;
}

}  // namespace

const GaussRule& gauss_legendre(int m) {
    static std::array<GaussRule, 65> cache;
    static std::array<std::once_flag, 65> flags;
    if (m < 1 || m > 64) throw ConfigError("Gauss-Legendre order must lie in [1, 64]");
    std::call_once(flags[m], [m] { cache[m] = build_gauss(m); });
    return cache[m];
}

std::vector<double> geometric_breaks(double a, double b, double q, bool from_zero) {
    std::vector<double> br;
    if (from_zero) br.push_back(0.0);
    double t = a;
    while (t < b) {
        br.push_back(t);
        t *= q;
    }
    br.push_back(b);
    return br;
}

}  // namespace nlop
