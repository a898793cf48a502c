#include "nlop/field.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>

#include <json.hpp>

namespace nlop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Mat zero_mat() { return Mat{}; }

// Product of two analytic fields, with derivatives by the product rule.
Field product(const Field& u, const Field& w) {
    const int n = u.dim();
    auto val = [u, w](const Vec& x) { return u.value(x) * w.value(x); };
    auto grad = [u, w, n](const Vec& x) {
        const double a = u.value(x), b = w.value(x);
        const Vec ga = u.gradient(x), gb = w.gradient(x);
        Vec g{};
        for (int i = 0; i < n; ++i) g[i] = a * gb[i] + b * ga[i];
        return g;
    };
    auto hess = [u, w, n](const Vec& x) {
        const double a = u.value(x), b = w.value(x);
        const Vec ga = u.gradient(x), gb = w.gradient(x);
        const Mat Ha = u.hessian(x), Hb = w.hessian(x);
        Mat H{};
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                H[i][j] = a * Hb[i][j] + b * Ha[i][j] + ga[i] * gb[j] + ga[j] * gb[i];
        return H;
    };
    auto tail = [u, w](double rho) {
        return std::min(u.tail_sup(rho) * w.sup_bound(), u.sup_bound() * w.tail_sup(rho));
    };
    return Field::analytic(n, val, grad, hess, u.sup_bound() * w.sup_bound(), tail);
}

void check_dim(int dim) {
    if (dim < 1 || dim > kMaxDim) throw ConfigError("dim must be 1, 2 or 3");
}

}  // namespace

std::size_t GridData::size() const {
    std::size_t s = 1;
    for (int i = 0; i < dim; ++i) s *= static_cast<std::size_t>(counts[i]);
    return s;
}

Vec GridData::hi() const {
    Vec v = lo;
    for (int i = 0; i < dim; ++i) v[i] = lo[i] + (counts[i] - 1) * h;
    return v;
}

std::size_t GridData::index(const std::array<int, 3>& k) const {
    std::size_t idx = 0, stride = 1;
    for (int i = 0; i < dim; ++i) {
        idx += static_cast<std::size_t>(k[i]) * stride;
        stride *= static_cast<std::size_t>(counts[i]);
    }
    return idx;
}

std::array<int, 3> GridData::multi_index(std::size_t idx) const {
    std::array<int, 3> k{0, 0, 0};
    for (int i = 0; i < dim; ++i) {
        k[i] = static_cast<int>(idx % counts[i]);
        idx /= counts[i];
    }
    return k;
}

Vec GridData::node(const std::array<int, 3>& k) const {
    Vec x{};
    for (int i = 0; i < dim; ++i) x[i] = lo[i] + k[i] * h;
    return x;
}

Vec GridData::node(std::size_t idx) const { return node(multi_index(idx)); }

bool GridData::inside_box(const Vec& x) const {
    const Vec up = hi();
    for (int i = 0; i < dim; ++i)
        if (!(x[i] >= lo[i] && x[i] <= up[i])) return false;
    return true;
}

double GridData::boundary_distance(const Vec& x) const {
    const Vec up = hi();
    double d = kInf;
    for (int i = 0; i < dim; ++i) d = std::min({d, x[i] - lo[i], up[i] - x[i]});
    return d;
}

double GridData::at(const std::array<int, 3>& k) const {
    for (int i = 0; i < dim; ++i)
        if (k[i] < 0 || k[i] >= counts[i]) return exterior_value;
    return samples[index(k)];
}

double GridData::interpolate(const Vec& x) const {
    if (!inside_box(x)) return exterior_value;
    std::array<int, 3> base{0, 0, 0};
    std::array<double, 3> t{0.0, 0.0, 0.0};
    for (int i = 0; i < dim; ++i) {
        const double s = (x[i] - lo[i]) / h;
        int k = static_cast<int>(std::floor(s));
        k = std::clamp(k, 0, counts[i] - 2);
        base[i] = k;
        t[i] = std::clamp(s - k, 0.0, 1.0);
    }
    double v = 0.0;
    for (int c = 0; c < (1 << dim); ++c) {
        double w = 1.0;
        std::array<int, 3> k = base;
        for (int i = 0; i < dim; ++i) {
            if (c & (1 << i)) {
                w *= t[i];
                k[i] += 1;
            } else {
                w *= 1.0 - t[i];
            }
        }
        if (w != 0.0) v += w * samples[index(k)];
    }
    return v;
}

Field Field::analytic(int dim, ScalarFn value, GradFn gradient, HessFn hessian,
                      double sup_bound, TailFn tail_sup) {
    check_dim(dim);
    if (!value) throw ConfigError("analytic field requires a value function");
    Field f;
    f.form_ = Form::Analytic;
    f.dim_ = dim;
    f.value_ = std::move(value);
    f.gradient_ = std::move(gradient);
    f.hessian_ = std::move(hessian);
    f.sup_bound_ = sup_bound;
    f.tail_ = std::move(tail_sup);
    return f;
}

Field Field::grid(GridData data) {
    check_dim(data.dim);
    if (!(data.h > 0.0) || !std::isfinite(data.h)) throw ConfigError("grid spacing h must be positive");
    for (int i = 0; i < data.dim; ++i)
        if (data.counts[i] < 2) throw ConfigError("grid needs at least 2 samples per axis");
    for (int i = data.dim; i < 3; ++i) {
        data.counts[i] = 1;
        data.lo[i] = 0.0;
    }
    if (data.samples.size() != data.size())
        throw ConfigError("grid sample array size does not match counts");
    double sup = std::abs(data.exterior_value);
    for (double v : data.samples) {
        if (!std::isfinite(v)) throw ConfigError("grid samples must be finite");
        sup = std::max(sup, std::abs(v));
    }
    Field f;
    f.form_ = Form::Grid;
    f.dim_ = data.dim;
    f.sup_bound_ = sup;
    f.grid_ = std::make_shared<const GridData>(std::move(data));
    return f;
}

double Field::value(const Vec& x) const {
    if (form_ == Form::Grid) return grid_->interpolate(x);
    return value_(x);
}

Vec Field::gradient(const Vec& x) const {
    if (form_ != Form::Analytic || !gradient_)
        throw DomainError("gradient requires an analytic field with gradient");
    return gradient_(x);
}

Mat Field::hessian(const Vec& x) const {
    if (!has_hessian()) throw DomainError("hessian requires an analytic field with Hessian");
    return hessian_(x);
}

bool Field::has_hessian() const { return form_ == Form::Analytic && static_cast<bool>(hessian_); }

double Field::tail_sup(double rho) const {
    if (form_ == Form::Grid) {
        const GridData& g = *grid_;
        // Beyond the farthest box corner only the exterior value remains.
        double far = 0.0;
        const Vec up = g.hi();
        for (int i = 0; i < dim_; ++i) {
            const double m = std::max(std::abs(g.lo[i]), std::abs(up[i]));
            far += m * m;
        }
        return rho > std::sqrt(far) ? std::abs(g.exterior_value) : sup_bound_;
    }
    if (tail_) return std::min(sup_bound_, tail_(rho));
    return sup_bound_;
}

const GridData& Field::grid_data() const {
    if (form_ != Form::Grid) throw DomainError("field is not a grid field");
    return *grid_;
}

double laplacian(const Field& u, const Vec& x) {
    const int n = u.dim();
    if (u.form() == Field::Form::Analytic) {
        const Mat H = u.hessian(x);
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += H[i][i];
        return s;
    }
    const GridData& g = u.grid_data();
    if (g.boundary_distance(x) < g.h) throw DomainError("laplacian stencil leaves the grid box");
    const double u0 = u.value(x);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        Vec p = x, m = x;
        p[i] += g.h;
        m[i] -= g.h;
        s += (u.value(p) - 2.0 * u0 + u.value(m)) / (g.h * g.h);
    }
    return s;
}

Field gaussian_field(int dim, const Vec& c, double A, double w) {
    if (!(w > 0.0)) throw ConfigError("gaussian width must be positive");
    const double w2 = w * w;
    auto val = [=](const Vec& x) {
        double s = 0.0;
        for (int i = 0; i < dim; ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
        return A * std::exp(-s / w2);
    };
    auto grad = [=](const Vec& x) {
        const double v = val(x);
        Vec g{};
        for (int i = 0; i < dim; ++i) g[i] = -2.0 * (x[i] - c[i]) / w2 * v;
        return g;
    };
    auto hess = [=](const Vec& x) {
        const double v = val(x);
        Mat H{};
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                H[i][j] = v * (4.0 * (x[i] - c[i]) * (x[j] - c[j]) / (w2 * w2) -
                               (i == j ? 2.0 / w2 : 0.0));
        return H;
    };
    const double cn = norm(c, dim);
    auto tail = [=](double rho) {
        const double d = std::max(0.0, rho - cn);
        return std::abs(A) * std::exp(-d * d / w2);
    };
    return Field::analytic(dim, val, grad, hess, std::abs(A), tail);
}

Field bump_field(int dim, const Vec& c, double rho, double A) {
    if (!(rho > 0.0)) throw ConfigError("bump radius must be positive");
    const double r2 = rho * rho;
    auto sval = [=](const Vec& x) {
        double s = 0.0;
        for (int i = 0; i < dim; ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
        return s / r2;
    };
    auto val = [=](const Vec& x) {
        const double s = sval(x);
        if (s >= 1.0) return 0.0;
        const double q = 1.0 - s;
        return A * q * q * q * q;
    };
    auto grad = [=](const Vec& x) {
        Vec g{};
        const double s = sval(x);
        if (s >= 1.0) return g;
        const double q = 1.0 - s;
        for (int i = 0; i < dim; ++i) g[i] = -8.0 * A * q * q * q * (x[i] - c[i]) / r2;
        return g;
    };
    auto hess = [=](const Vec& x) {
        Mat H{};
        const double s = sval(x);
        if (s >= 1.0) return H;
        const double q = 1.0 - s;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                H[i][j] = 48.0 * A * q * q * (x[i] - c[i]) * (x[j] - c[j]) / (r2 * r2) -
                          (i == j ? 8.0 * A * q * q * q / r2 : 0.0);
        return H;
    };
    const double cn = norm(c, dim);
    auto tail = [=](double r) { return r >= cn + rho ? 0.0 : std::abs(A); };
    return Field::analytic(dim, val, grad, hess, std::abs(A), tail);
}

Field constant_field(int dim, double cval) {
    return Field::analytic(
        dim, [cval](const Vec&) { return cval; }, [](const Vec&) { return Vec{}; },
        [](const Vec&) { return zero_mat(); }, std::abs(cval));
}

Field tanh_field(int dim) {
    return Field::analytic(
        dim, [](const Vec& x) { return std::tanh(x[0]); },
        [](const Vec& x) {
            const double c = 1.0 / std::cosh(x[0]);
            return Vec{c * c, 0.0, 0.0};
        },
        [](const Vec& x) {
            Mat H{};
            const double c = 1.0 / std::cosh(x[0]);
            H[0][0] = -2.0 * std::tanh(x[0]) * c * c;
            return H;
        },
        1.0);
}

Field sin_field(int dim) {
    return Field::analytic(
        dim, [](const Vec& x) { return std::sin(x[0]); },
        [](const Vec& x) { return Vec{std::cos(x[0]), 0.0, 0.0}; },
        [](const Vec& x) {
            Mat H{};
            H[0][0] = -std::sin(x[0]);
            return H;
        },
        1.0);
}

Field odd_decay_field(int dim) {
    auto val = [dim](const Vec& y) {
        const double S = dot(y, y, dim);
        return y[0] / (1.0 + S * S);
    };
    auto grad = [dim](const Vec& y) {
        const double S = dot(y, y, dim);
        const double D = 1.0 + S * S;
        Vec g{};
        for (int i = 0; i < dim; ++i) g[i] = (i == 0 ? 1.0 / D : 0.0) - 4.0 * y[0] * S * y[i] / (D * D);
        return g;
    };
    auto hess = [dim](const Vec& y) {
        const double S = dot(y, y, dim);
        const double D = 1.0 + S * S;
        const double D2 = D * D, D3 = D2 * D;
        Mat H{};
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                double v = -(i == 0 ? 4.0 * S * y[j] : 0.0) / D2;
                v -= 4.0 * ((j == 0 ? S * y[i] : 0.0) + 2.0 * y[0] * y[i] * y[j] +
                            (i == j ? y[0] * S : 0.0)) / D2;
                v += 32.0 * y[0] * S * S * y[i] * y[j] / D3;
                H[i][j] = v;
            }
        return H;
    };
    const double rstar = std::pow(3.0, -0.25);
    const double sup = rstar / (1.0 + rstar * rstar * rstar * rstar);
    auto tail = [=](double rho) {
        return rho <= rstar ? sup : rho / (1.0 + rho * rho * rho * rho);
    };
    return Field::analytic(dim, val, grad, hess, sup, tail);
}

Field affine_field(int dim, const Vec& a, double b) {
    return Field::analytic(
        dim, [=](const Vec& x) { return dot(a, x, dim) + b; }, [=](const Vec&) { return a; },
        [](const Vec&) { return zero_mat(); }, kInf);
}

Field linear_combination(double a, const Field& u, double b, const Field& v) {
    if (u.dim() != v.dim()) throw ConfigError("fields must share a dimension");
    const int n = u.dim();
    if (u.form() == Field::Form::Grid && v.form() == Field::Form::Grid) {
        const GridData& gu = u.grid_data();
        const GridData& gv = v.grid_data();
        if (gu.counts != gv.counts || gu.lo != gv.lo || gu.h != gv.h)
            throw ConfigError("grid fields must share a lattice");
        GridData g = gu;
        for (std::size_t i = 0; i < g.samples.size(); ++i)
            g.samples[i] = a * gu.samples[i] + b * gv.samples[i];
        g.exterior_value = a * gu.exterior_value + b * gv.exterior_value;
        return Field::grid(std::move(g));
    }
    if (u.form() != Field::Form::Analytic || v.form() != Field::Form::Analytic)
        throw ConfigError("cannot combine an analytic and a grid field");
    auto val = [=](const Vec& x) { return a * u.value(x) + b * v.value(x); };
    auto grad = [=](const Vec& x) {
        const Vec gu = u.gradient(x), gv = v.gradient(x);
        Vec g{};
        for (int i = 0; i < n; ++i) g[i] = a * gu[i] + b * gv[i];
        return g;
    };
    auto hess = [=](const Vec& x) {
        const Mat Hu = u.hessian(x), Hv = v.hessian(x);
        Mat H{};
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) H[i][j] = a * Hu[i][j] + b * Hv[i][j];
        return H;
    };
    auto tail = [=](double rho) {
        return std::abs(a) * u.tail_sup(rho) + std::abs(b) * v.tail_sup(rho);
    };
    return Field::analytic(n, val, grad, hess,
                           std::abs(a) * u.sup_bound() + std::abs(b) * v.sup_bound(), tail);
}

Field translated(const Field& u, const Vec& t) {
    const int n = u.dim();
    if (u.form() == Field::Form::Grid) {
        GridData g = u.grid_data();
        for (int i = 0; i < n; ++i) g.lo[i] += t[i];
        return Field::grid(std::move(g));
    }
    auto shift = [=](const Vec& x) {
        Vec y = x;
        for (int i = 0; i < n; ++i) y[i] -= t[i];
        return y;
    };
    const double tn = norm(t, n);
    return Field::analytic(
        n, [=](const Vec& x) { return u.value(shift(x)); },
        [=](const Vec& x) { return u.gradient(shift(x)); },
        [=](const Vec& x) { return u.hessian(shift(x)); }, u.sup_bound(),
        [=](double rho) { return u.tail_sup(std::max(0.0, rho - tn)); });
}

Field dilated(const Field& u, double s) {
    if (!(s > 0.0)) throw ConfigError("dilation factor must be positive");
    const int n = u.dim();
    if (u.form() == Field::Form::Grid) {
        GridData g = u.grid_data();
        for (int i = 0; i < n; ++i) g.lo[i] *= s;
        g.h *= s;
        return Field::grid(std::move(g));
    }
    auto sc = [=](const Vec& x) { return Vec{x[0] / s, x[1] / s, x[2] / s}; };
    return Field::analytic(
        n, [=](const Vec& x) { return u.value(sc(x)); },
        [=](const Vec& x) {
            Vec g = u.gradient(sc(x));
            for (int i = 0; i < n; ++i) g[i] /= s;
            return g;
        },
        [=](const Vec& x) {
            Mat H = u.hessian(sc(x));
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) H[i][j] /= s * s;
            return H;
        },
        u.sup_bound(), [=](double rho) { return u.tail_sup(rho / s); });
}

Field cutoff_gaussian_field(int dim, const Vec& center, double rho) {
    return product(gaussian_field(dim, center), bump_field(dim, center, rho));
}

Field sample_to_grid(const Field& u, const Vec& lo, double h, const std::array<int, 3>& counts,
                     double exterior_value) {
    GridData g;
    g.dim = u.dim();
    g.lo = lo;
    g.h = h;
    g.counts = counts;
    for (int i = g.dim; i < 3; ++i) g.counts[i] = 1;
    g.exterior_value = exterior_value;
    g.samples.resize(g.size());
    for (std::size_t i = 0; i < g.samples.size(); ++i) g.samples[i] = u.value(g.node(i));
    return Field::grid(std::move(g));
}

void write_grid(const std::string& path, const GridData& g) {
    nlohmann::json hdr;
    hdr["format"] = "nlop-grid";
    hdr["version"] = 1;
    hdr["dim"] = g.dim;
    hdr["lo"] = std::vector<double>(g.lo.begin(), g.lo.begin() + g.dim);
    hdr["h"] = g.h;
    hdr["counts"] = std::vector<int>(g.counts.begin(), g.counts.begin() + g.dim);
    hdr["exterior_value"] = g.exterior_value;
    hdr["encoding"] = "float64-le";
    hdr["count"] = g.samples.size();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << hdr.dump() << '\n';
    for (double v : g.samples) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    if (!out) throw Error("write failed for " + path);
}

GridData read_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    std::getline(in, line);
    nlohmann::json hdr;
    try {
        hdr = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("grid file header is not valid JSON");
    }
    if (hdr.value("format", "") != "nlop-grid") throw ConfigError("not a grid file: " + path);
    GridData g;
    g.dim = hdr.at("dim").get<int>();
    check_dim(g.dim);
    const auto lo = hdr.at("lo").get<std::vector<double>>();
    const auto counts = hdr.at("counts").get<std::vector<int>>();
    if (static_cast<int>(lo.size()) != g.dim || static_cast<int>(counts.size()) != g.dim)
        throw ConfigError("grid header lo/counts length must equal dim");
    for (int i = 0; i < g.dim; ++i) {
        g.lo[i] = lo[i];
        g.counts[i] = counts[i];
    }
    g.h = hdr.at("h").get<double>();
    g.exterior_value = hdr.at("exterior_value").get<double>();
    const std::size_t n = hdr.at("count").get<std::size_t>();
    if (n != g.size()) throw ConfigError("grid header count does not match counts");
    g.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits;
        in.read(reinterpret_cast<char*>(&bits), sizeof bits);
        if (!in) throw Error("truncated grid file " + path);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        std::memcpy(&g.samples[i], &bits, sizeof bits);
    }
    return g;
}

void write_grid_csv(const std::string& path, const GridData& g) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << std::setprecision(17);
    static const char* names[] = {"x1", "x2", "x3"};
    for (int i = 0; i < g.dim; ++i) out << names[i] << " [length],";
    out << "u [field units]\n";
    for (std::size_t k = 0; k < g.samples.size(); ++k) {
        const Vec x = g.node(k);
        for (int i = 0; i < g.dim; ++i) out << x[i] << ',';
        out << g.samples[k] << '\n';
    }
}

}  // namespace nlop
