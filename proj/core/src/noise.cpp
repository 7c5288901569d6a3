#include "sepda/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sepda/field_ops.hpp"

namespace sepda {

namespace {
constexpr double kPi = std::numbers::pi;
}

NoiseModel NoiseModel::gaussian(std::vector<std::pair<double, double>> centers, double tau,
                                std::vector<double> theta) {
    NoiseModel m;
    m.family = NoiseFamily::gaussian_lattice;
    m.centers = std::move(centers);
    m.tau = tau;
    m.theta = std::move(theta);
    m.validate();
    return m;
}

NoiseModel NoiseModel::bspline(std::vector<std::pair<double, double>> centers, double tau,
                               std::vector<double> theta) {
    NoiseModel m;
    m.family = NoiseFamily::bspline_lattice;
    m.centers = std::move(centers);
    m.tau = tau;
    m.theta = std::move(theta);
    m.validate();
    return m;
}

NoiseModel NoiseModel::sinusoidal(int max_frequency, std::vector<double> theta) {
    NoiseModel m;
    m.family = NoiseFamily::sinusoidal;
    m.max_frequency = max_frequency;
    m.theta = std::move(theta);
    m.validate();
    return m;
}

int NoiseModel::parameter_count() const {
    if (family == NoiseFamily::sinusoidal) {
        return max_frequency * max_frequency;
    }
    return static_cast<int>(centers.size());
}

NoiseModel NoiseModel::with_theta(std::vector<double> new_theta) const {
    NoiseModel m = *this;
    m.theta = std::move(new_theta);
    m.validate();
    return m;
}

void NoiseModel::validate() const {
    if (family == NoiseFamily::sinusoidal) {
        if (max_frequency < 1) {
            throw std::invalid_argument("sinusoidal noise model needs max_frequency >= 1");
        }
    } else {
        if (centers.empty()) {
            throw std::invalid_argument("lattice noise model needs at least one center");
        }
        if (!(tau > 0.0)) {
            throw std::invalid_argument("lattice noise model needs tau > 0");
        }
        for (const auto &[cx, cy] : centers) {
            if (!(cx > 0.0 && cx < 1.0 && cy > 0.0 && cy < 1.0)) {
                throw std::invalid_argument("lattice centers must lie inside (0,1)^2");
            }
        }
    }
    if (static_cast<int>(theta.size()) != parameter_count()) {
        throw std::invalid_argument("noise model theta has " + std::to_string(theta.size()) +
                                    " entries, expected " + std::to_string(parameter_count()));
    }
}

std::vector<std::pair<double, double>> square_lattice(int rows, int cols) {
    if (rows < 1 || cols < 1) {
        throw std::invalid_argument("square_lattice: rows and cols must be >= 1");
    }
    std::vector<std::pair<double, double>> centers;
    centers.reserve(static_cast<std::size_t>(rows) * cols);
    for (int i = 1; i <= cols; ++i) {
        for (int j = 1; j <= rows; ++j) {
            centers.emplace_back(static_cast<double>(i) / (cols + 1),
                                 static_cast<double>(j) / (rows + 1));
        }
    }
    return centers;
}

std::vector<std::pair<double, double>> hexagonal_lattice_14() {
    constexpr double dy = 0.2;
    constexpr double dx = 0.23;
    std::vector<std::pair<double, double>> centers;
    centers.reserve(14);
    const int counts[4] = {3, 4, 4, 3};
    for (int r = 0; r < 4; ++r) {
        const double y = 0.5 + (1.5 - r) * dy; // rows at y = 0.8, 0.6, 0.4, 0.2
        const int c = counts[r];
        const double x0 = 0.5 - 0.5 * (c - 1) * dx;
        for (int i = 0; i < c; ++i) {
            centers.emplace_back(x0 + i * dx, y);
        }
    }
    return centers;
}

double bspline3(double x) {
    // Outside [-2,2] the positive-part terms cancel analytically but leave
    // rounding residue; the support must be exactly compact.
    if (x <= -2.0 || x >= 2.0) {
        return 0.0;
    }
    auto pos3 = [](double t) {
        t = std::max(t, 0.0);
        return t * t * t;
    };
    return (pos3(x + 2.0) - 4.0 * pos3(x + 1.0) + 6.0 * pos3(x) - 4.0 * pos3(x - 1.0) +
            pos3(x - 2.0)) /
           6.0;
}

namespace {

struct ShapeRef {
    int shape;
    int axis;
};

ShapeRef decode_alpha(const NoiseModel &model, int alpha) {
    if (alpha < 0 || alpha >= model.field_count()) {
        throw std::out_of_range("noise field index " + std::to_string(alpha) + " out of range");
    }
    return {alpha / 2, alpha % 2};
}

// Scalar profile of shape `s` (amplitude included) at (x, y).
double profile_value(const NoiseModel &model, int s, double x, double y) {
    if (model.family == NoiseFamily::sinusoidal) {
        const int q = model.max_frequency;
        const int n = s / q + 1;
        const int m = s % q + 1;
        return model.theta[s] * std::sin(n * kPi * x) * std::sin(m * kPi * y);
    }
    const auto [cx, cy] = model.centers[s];
    const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
    if (model.family == NoiseFamily::gaussian_lattice) {
        return model.theta[s] * std::exp(-r2 / (2.0 * model.tau * model.tau));
    }
    return model.theta[s] * bspline3(std::sqrt(r2) / model.tau);
}

} // namespace

VectorField eval_noise_field(const NoiseModel &model, int alpha, const Grid &grid) {
    const auto [s, axis] = decode_alpha(model, alpha);
    VectorField out(grid);
    std::vector<double> &comp = (axis == 0) ? out.x : out.y;
    for (int i = 0; i < grid.nx; ++i) {
        for (int j = 0; j < grid.ny; ++j) {
            comp[grid.idx(i, j)] = profile_value(model, s, grid.x(i), grid.y(j));
        }
    }
    return out;
}

ScalarField norm_field(const NoiseModel &model, const Grid &grid) {
    ScalarField out(grid);
    // Both directions at one shape share the profile, so the vector sum at a
    // node is (P, P) with P the sum of all shape profiles.
    for (int i = 0; i < grid.nx; ++i) {
        for (int j = 0; j < grid.ny; ++j) {
            double sx = 0.0, sy = 0.0;
            for (int s = 0; s < model.parameter_count(); ++s) {
                const double p = profile_value(model, s, grid.x(i), grid.y(j));
                sx += p;
                sy += p;
            }
            out(i, j) = std::sqrt(sx * sx + sy * sy);
        }
    }
    return out;
}

ScalarField norm_field(const NoiseFieldSet &set) {
    ScalarField out(set.grid);
    std::vector<double> sx(set.grid.size(), 0.0), sy(set.grid.size(), 0.0);
    for (const NoiseProfile &p : set.profiles) {
        for (std::size_t k = 0; k < p.psi.size(); ++k) {
            sx[k] += p.dir_x * p.psi[k];
            sy[k] += p.dir_y * p.psi[k];
        }
    }
    for (std::size_t k = 0; k < out.v.size(); ++k) {
        out.v[k] = std::sqrt(sx[k] * sx[k] + sy[k] * sy[k]);
    }
    return out;
}

std::vector<double> sine_coefficients(const ScalarField &f, int q) {
    if (q < 1) {
        throw std::invalid_argument("sine_coefficients: q must be >= 1");
    }
    const Grid &g = f.grid;
    std::vector<double> coeffs;
    coeffs.reserve(static_cast<std::size_t>(q) * q);
    ScalarField integrand(g);
    ScalarField one(g);
    std::fill(one.v.begin(), one.v.end(), 1.0);
    for (int n = 1; n <= q; ++n) {
        for (int m = 1; m <= q; ++m) {
            for (int i = 0; i < g.nx; ++i) {
                const double sx = std::sin(n * kPi * g.x(i));
                for (int j = 0; j < g.ny; ++j) {
                    integrand(i, j) = 4.0 * f(i, j) * sx * std::sin(m * kPi * g.y(j));
                }
            }
            coeffs.push_back(inner_l2(integrand, one));
        }
    }
    return coeffs;
}

std::vector<double> sine_coefficients(const std::function<double(double, double)> &f, int q,
                                      const Grid &quad_grid) {
    ScalarField sampled(quad_grid);
    for (int i = 0; i < quad_grid.nx; ++i) {
        for (int j = 0; j < quad_grid.ny; ++j) {
            sampled(i, j) = f(quad_grid.x(i), quad_grid.y(j));
        }
    }
    return sine_coefficients(sampled, q);
}

std::vector<double> ground_truth_amplitudes(NoiseFamily family, int p) {
    if (p < 1) {
        throw std::invalid_argument("ground_truth_amplitudes: p must be >= 1");
    }
    std::vector<double> lambda(p);
    for (int i = 1; i <= p; ++i) {
        lambda[i - 1] = 0.005 + 0.000625 * (i + 2.0 * std::sin(static_cast<double>(i)));
    }
    if (family == NoiseFamily::bspline_lattice) {
        for (double &l : lambda) {
            l /= 5.0;
        }
    }
    return lambda;
}

NoiseFieldSet NoiseFieldSet::from_model(const NoiseModel &model, const Grid &grid) {
    model.validate();
    NoiseFieldSet set;
    set.grid = grid;
    set.profiles.reserve(model.field_count());
    for (int alpha = 0; alpha < model.field_count(); ++alpha) {
        const auto [s, axis] = decode_alpha(model, alpha);
        NoiseProfile p;
        p.dir_x = (axis == 0) ? 1.0 : 0.0;
        p.dir_y = (axis == 0) ? 0.0 : 1.0;
        p.param_index = s;
        p.i0 = 0;
        p.i1 = grid.nx;
        p.j0 = 0;
        p.j1 = grid.ny;
        if (model.family == NoiseFamily::bspline_lattice) {
            // beta_3(r/tau) and its derivative vanish identically beyond
            // r = 2 tau; two extra nodes cover the stencil footprint.
            const auto [cx, cy] = model.centers[s];
            const double r = 2.0 * model.tau;
            p.i0 = std::clamp(static_cast<int>(std::floor((cx - r) / grid.hx())) - 2, 0, grid.nx);
            p.i1 = std::clamp(static_cast<int>(std::ceil((cx + r) / grid.hx())) + 3, 0, grid.nx);
            p.j0 = std::clamp(static_cast<int>(std::floor((cy - r) / grid.hy())) - 2, 0, grid.ny);
            p.j1 = std::clamp(static_cast<int>(std::ceil((cy + r) / grid.hy())) + 3, 0, grid.ny);
        }
        p.psi.resize(grid.size());
        for (int i = 0; i < grid.nx; ++i) {
            for (int j = 0; j < grid.ny; ++j) {
                p.psi[grid.idx(i, j)] = profile_value(model, s, grid.x(i), grid.y(j));
            }
        }
        p.dpsi_x.resize(grid.size());
        p.dpsi_y.resize(grid.size());
        detail::diff_x(grid, p.psi.data(), p.dpsi_x.data());
        detail::diff_y(grid, p.psi.data(), p.dpsi_y.data());
        set.profiles.push_back(std::move(p));
    }
    return set;
}

NoiseFieldSet NoiseFieldSet::from_directed_profiles(
    const Grid &grid,
    const std::vector<std::pair<ScalarField, std::pair<double, double>>> &profiles) {
    NoiseFieldSet set;
    set.grid = grid;
    set.profiles.reserve(profiles.size());
    int idx = 0;
    for (const auto &[field, dir] : profiles) {
        if (field.grid != grid) {
            throw shape_error("NoiseFieldSet::from_directed_profiles: grid mismatch");
        }
        NoiseProfile p;
        p.dir_x = dir.first;
        p.dir_y = dir.second;
        p.param_index = idx++;
        p.i0 = 0;
        p.i1 = grid.nx;
        p.j0 = 0;
        p.j1 = grid.ny;
        p.psi = field.v;
        p.dpsi_x.resize(grid.size());
        p.dpsi_y.resize(grid.size());
        detail::diff_x(grid, p.psi.data(), p.dpsi_x.data());
        detail::diff_y(grid, p.psi.data(), p.dpsi_y.data());
        set.profiles.push_back(std::move(p));
    }
    return set;
}

NoiseFieldSet NoiseFieldSet::from_profiles(
    const Grid &grid, const std::vector<std::pair<ScalarField, int>> &profiles) {
    std::vector<std::pair<ScalarField, std::pair<double, double>>> directed;
    directed.reserve(profiles.size());
    for (const auto &[field, axis] : profiles) {
        if (axis != 0 && axis != 1) {
            throw std::invalid_argument("NoiseFieldSet::from_profiles: axis must be 0 or 1");
        }
        directed.emplace_back(field, axis == 0 ? std::pair<double, double>{1.0, 0.0}
                                               : std::pair<double, double>{0.0, 1.0});
    }
    return from_directed_profiles(grid, directed);
}

VectorField NoiseFieldSet::field(int alpha) const {
    if (alpha < 0 || alpha >= field_count()) {
        throw std::out_of_range("noise field index out of range");
    }
    VectorField out(grid);
    const NoiseProfile &p = profiles[alpha];
    for (std::size_t k = 0; k < p.psi.size(); ++k) {
        out.x[k] = p.dir_x * p.psi[k];
        out.y[k] = p.dir_y * p.psi[k];
    }
    return out;
}

} // namespace sepda
