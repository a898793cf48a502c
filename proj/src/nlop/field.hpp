#pragma once

// Functions on R^n: closed-form (with gradient and Hessian) or lattice
// samples with multilinear interpolation and a constant exterior value.

#include "nlop/common.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace nlop {

using ScalarFn = std::function<double(const Vec&)>;
using GradFn = std::function<Vec(const Vec&)>;
using HessFn = std::function<Mat(const Vec&)>;
/// sup_{|y| >= rho} |u(y)|
using TailFn = std::function<double(double)>;

/// Axis-aligned lattice lo + k*h, k = 0..counts[i]-1 along each axis.
struct GridData {
    int dim = 1;
    Vec lo{};
    double h = 1.0;
    std::array<int, 3> counts{1, 1, 1};
    std::vector<double> samples;  // axis 0 fastest
    double exterior_value = 0.0;

    std::size_t size() const;
    Vec hi() const;
    std::size_t index(const std::array<int, 3>& k) const;
    std::array<int, 3> multi_index(std::size_t idx) const;
    Vec node(const std::array<int, 3>& k) const;
    Vec node(std::size_t idx) const;
    bool inside_box(const Vec& x) const;
    /// Distance from x to the box boundary (negative outside).
    double boundary_distance(const Vec& x) const;
    /// Value at lattice index k; indices outside the lattice give exterior_value.
    double at(const std::array<int, 3>& k) const;
    double interpolate(const Vec& x) const;
};

class Field {
public:
    enum class Form { Analytic, Grid };

    static Field analytic(int dim, ScalarFn value, GradFn gradient, HessFn hessian,
                          double sup_bound, TailFn tail_sup = nullptr);
    /// Validates the lattice and computes sup_bound from the samples.
    static Field grid(GridData data);

    Form form() const { return form_; }
    int dim() const { return dim_; }
    double value(const Vec& x) const;
    Vec gradient(const Vec& x) const;
    Mat hessian(const Vec& x) const;
    bool has_hessian() const;
    double sup_bound() const { return sup_bound_; }
    double tail_sup(double rho) const;
    const GridData& grid_data() const;

private:
    Form form_ = Form::Analytic;
    int dim_ = 1;
    double sup_bound_ = 0.0;
    ScalarFn value_;
    GradFn gradient_;
    HessFn hessian_;
    TailFn tail_;
    std::shared_ptr<const GridData> grid_;
};

/// Trace of the Hessian (analytic) or second central differences with the
/// lattice spacing (grid; DomainError if a stencil point leaves the box).
double laplacian(const Field& u, const Vec& x);

// Analytic builders.
Field gaussian_field(int dim, const Vec& center = {}, double amplitude = 1.0, double width = 1.0);
/// amplitude * (1 - |x - c|^2 / rho^2)_+^4
Field bump_field(int dim, const Vec& center, double rho, double amplitude = 1.0);
Field constant_field(int dim, double c);
Field tanh_field(int dim);
Field sin_field(int dim);
/// y_1 / (1 + |y|^4)
Field odd_decay_field(int dim);
/// a . x + b (unbounded; for Laplacian checks only)
Field affine_field(int dim, const Vec& a, double b);
/// a*u + b*v
Field linear_combination(double a, const Field& u, double b, const Field& v);
/// u(x - t)
Field translated(const Field& u, const Vec& t);
/// u(x / s)
Field dilated(const Field& u, double s);
/// e^{-|x-c|^2} * (1 - |x-c|^2/rho^2)_+^4
Field cutoff_gaussian_field(int dim, const Vec& center, double rho);

/// Samples an analytic field on a lattice.
Field sample_to_grid(const Field& u, const Vec& lo, double h, const std::array<int, 3>& counts,
                     double exterior_value);

// Serialization: one JSON header line followed by raw little-endian float64
// samples; CSV dump with 17 significant digits.
void write_grid(const std::string& path, const GridData& g);
GridData read_grid(const std::string& path);
void write_grid_csv(const std::string& path, const GridData& g);

}  // namespace nlop
