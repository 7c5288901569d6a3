#include "sepda/field_ops.hpp"

#include <algorithm>
#include <cmath>

namespace sepda {

namespace detail {

// d/dx along stride ny. Interior: (f[i+1]-f[i-1])/(2h). Boundaries use the
// one-sided second-order stencils (-3f0+4f1-f2)/(2h) and its mirror.
void diff_x(const Grid &g, const double *f, double *out) {
    const int nx = g.nx, ny = g.ny;
    const double inv2h = 1.0 / (2.0 * g.hx());
    for (int j = 0; j < ny; ++j) {
        out[j] = (-3.0 * f[j] + 4.0 * f[ny + j] - f[2 * ny + j]) * inv2h;
    }
    for (int i = 1; i + 1 < nx; ++i) {
        const double *fm = f + (i - 1) * static_cast<std::size_t>(ny);
        const double *fp = f + (i + 1) * static_cast<std::size_t>(ny);
        double *o = out + i * static_cast<std::size_t>(ny);
        for (int j = 0; j < ny; ++j) {
            o[j] = (fp[j] - fm[j]) * inv2h;
        }
    }
    const std::size_t last = static_cast<std::size_t>(nx - 1) * ny;
    for (int j = 0; j < ny; ++j) {
        out[last + j] =
            (3.0 * f[last + j] - 4.0 * f[last - ny + j] + f[last - 2 * ny + j]) * inv2h;
    }
}

void diff_y(const Grid &g, const double *f, double *out) {
    const int nx = g.nx, ny = g.ny;
    const double inv2h = 1.0 / (2.0 * g.hy());
    for (int i = 0; i < nx; ++i) {
        const double *row = f + i * static_cast<std::size_t>(ny);
        double *o = out + i * static_cast<std::size_t>(ny);
        o[0] = (-3.0 * row[0] + 4.0 * row[1] - row[2]) * inv2h;
        for (int j = 1; j + 1 < ny; ++j) {
            o[j] = (row[j + 1] - row[j - 1]) * inv2h;
        }
        o[ny - 1] = (3.0 * row[ny - 1] - 4.0 * row[ny - 2] + row[ny - 3]) * inv2h;
    }
}

} // namespace detail

static void require_stencil_grid(const Grid &g) {
    if (g.nx < 3 || g.ny < 3) {
        throw grid_error("difference stencils require at least 3 nodes per axis");
    }
}

VectorField gradient(const ScalarField &f) {
    require_stencil_grid(f.grid);
    VectorField out(f.grid);
    detail::diff_x(f.grid, f.v.data(), out.x.data());
    detail::diff_y(f.grid, f.v.data(), out.y.data());
    return out;
}

MatrixField jacobian(const VectorField &v) {
    require_stencil_grid(v.grid);
    MatrixField out(v.grid);
    detail::diff_x(v.grid, v.x.data(), out.xx.data());
    detail::diff_y(v.grid, v.x.data(), out.xy.data());
    detail::diff_x(v.grid, v.y.data(), out.yx.data());
    detail::diff_y(v.grid, v.y.data(), out.yy.data());
    return out;
}

ScalarField divergence(const VectorField &v) {
    require_stencil_grid(v.grid);
    ScalarField out(v.grid);
    std::vector<double> tmp(v.grid.size());
    detail::diff_x(v.grid, v.x.data(), out.v.data());
    detail::diff_y(v.grid, v.y.data(), tmp.data());
    for (std::size_t k = 0; k < out.v.size(); ++k) {
        out.v[k] += tmp[k];
    }
    return out;
}

double sample_bilinear(const ScalarField &f, double px, double py) {
    const Grid &g = f.grid;
    const double x = std::clamp(px, 0.0, 1.0);
    const double y = std::clamp(py, 0.0, 1.0);
    int i0 = std::min(static_cast<int>(x / g.hx()), g.nx - 2);
    int j0 = std::min(static_cast<int>(y / g.hy()), g.ny - 2);
    const double tx = x / g.hx() - i0;
    const double ty = y / g.hy() - j0;
    const double f00 = f(i0, j0), f01 = f(i0, j0 + 1);
    const double f10 = f(i0 + 1, j0), f11 = f(i0 + 1, j0 + 1);
    return (1.0 - tx) * ((1.0 - ty) * f00 + ty * f01) + tx * ((1.0 - ty) * f10 + ty * f11);
}

std::vector<double> sample_bilinear(const ScalarField &f,
                                    std::span<const std::pair<double, double>> points) {
    std::vector<double> out;
    out.reserve(points.size());
    for (const auto &[px, py] : points) {
        out.push_back(sample_bilinear(f, px, py));
    }
    return out;
}

static double trapezoid_sum(const Grid &g, const double *a, const double *b) {
    double acc = 0.0;
    for (int i = 0; i < g.nx; ++i) {
        const double wi = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
        const double *ra = a + i * static_cast<std::size_t>(g.ny);
        const double *rb = b + i * static_cast<std::size_t>(g.ny);
        double row = 0.5 * ra[0] * rb[0];
        for (int j = 1; j + 1 < g.ny; ++j) {
            row += ra[j] * rb[j];
        }
        row += 0.5 * ra[g.ny - 1] * rb[g.ny - 1];
        acc += wi * row;
    }
    return acc * g.hx() * g.hy();
}

double inner_l2(const ScalarField &a, const ScalarField &b) {
    if (a.grid != b.grid) {
        throw shape_error("inner_l2: grids differ");
    }
    return trapezoid_sum(a.grid, a.v.data(), b.v.data());
}

double inner_l2(const VectorField &a, const VectorField &b) {
    if (a.grid != b.grid) {
        throw shape_error("inner_l2: grids differ");
    }
    return trapezoid_sum(a.grid, a.x.data(), b.x.data()) +
           trapezoid_sum(a.grid, a.y.data(), b.y.data());
}

static bool span_finite(const std::vector<double> &v) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

bool all_finite(const ScalarField &f) { return span_finite(f.v); }
bool all_finite(const VectorField &v) { return span_finite(v.x) && span_finite(v.y); }

static double span_max_abs(const std::vector<double> &v) {
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

double max_abs(const ScalarField &f) { return span_max_abs(f.v); }
double max_abs(const VectorField &v) { return std::max(span_max_abs(v.x), span_max_abs(v.y)); }

} // namespace sepda
