#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nlop {

/// Points and directions in R^n, n <= 3. Unused trailing components are zero.
using Vec = std::array<double, 3>;
using Mat = std::array<std::array<double, 3>, 3>;

inline constexpr int kMaxDim = 3;

inline double dot(const Vec& a, const Vec& b, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Vec& a, int dim) { return std::sqrt(dot(a, a, dim)); }

inline Vec axpy(double t, const Vec& d, const Vec& x) {
    return {x[0] + t * d[0], x[1] + t * d[1], x[2] + t * d[2]};
}

inline double quad_form(const Mat& m, const Vec& v, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) s += v[i] * m[i][j] * v[j];
    return s;
}

/// Surface measure of the unit sphere S^{n-1} (2, 2*pi, 4*pi for n = 1, 2, 3).
inline double sphere_measure(int n) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// Lebesgue measure of the unit ball in R^n.
inline double ball_volume(int n) { return sphere_measure(n) / n; }

// Error hierarchy. The C API maps each type to a status code.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or spec (construction-time validation).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Operation called outside its mathematical domain (e.g. kernel at y = 0).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Numerical refinement or iteration failed to reach its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace nlop
