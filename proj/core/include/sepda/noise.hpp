#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "sepda/types.hpp"

namespace sepda {

enum class NoiseFamily { gaussian_lattice, bspline_lattice, sinusoidal };

/// Parametric family of noise fields. Lattice families place one radial
/// profile at each center and pair it with the two coordinate directions,
/// sharing a single amplitude theta[l] per center:
///   sigma_{l,m}(x) = theta[l] * k(|x - mu_l| / tau) * e_m,  m = 1,2.
/// The sinusoidal family uses sigma_{nm,l} = c_nm sin(n pi x) sin(m pi y) e_l
/// with one coefficient theta[(n-1)q + m-1] per (n,m) pair.
struct NoiseModel {
    NoiseFamily family = NoiseFamily::gaussian_lattice;
    std::vector<std::pair<double, double>> centers; // lattice families only
    double tau = 0.0;                               // lattice families only
    int max_frequency = 0;                          // sinusoidal only
    std::vector<double> theta;

    static NoiseModel gaussian(std::vector<std::pair<double, double>> centers, double tau,
                               std::vector<double> theta);
    static NoiseModel bspline(std::vector<std::pair<double, double>> centers, double tau,
                              std::vector<double> theta);
    static NoiseModel sinusoidal(int max_frequency, std::vector<double> theta);

    /// Number of free scalar parameters (lattice points or (n,m) pairs).
    int parameter_count() const;
    /// Number of noise fields: 2 per spatial shape. Field alpha = 2*l + axis.
    int field_count() const { return 2 * parameter_count(); }

    NoiseModel with_theta(std::vector<double> new_theta) const;

    void validate() const;
};

/// rows x cols interior lattice: centers (i/(cols+1), j/(rows+1)) for
/// 1 <= i <= cols, 1 <= j <= rows, ordered lexicographically in (i,j).
std::vector<std::pair<double, double>> square_lattice(int rows, int cols);

/// Symmetrically centered hexagonal arrangement of 14 points in rows of
/// 3-4-4-3, row spacing 0.2, in-row spacing 0.23, alternate rows offset by
/// half the in-row spacing. Ordered top-left to bottom-right.
std::vector<std::pair<double, double>> hexagonal_lattice_14();

/// Cubic B-spline beta_3; compactly supported on [-2, 2].
double bspline3(double x);

/// The closed-form field sigma_alpha sampled on a grid.
VectorField eval_noise_field(const NoiseModel &model, int alpha, const Grid &grid);

/// Pointwise Euclidean norm of the vector sum of all fields.
ScalarField norm_field(const NoiseModel &model, const Grid &grid);
ScalarField norm_field(const struct NoiseFieldSet &set);

/// Sine basis coefficients c_nm = 4 int f(x,y) sin(n pi x) sin(m pi y) dxdy
/// for 1 <= n,m <= q, trapezoidal quadrature on the field's grid. Row-major
/// in (n,m). The closed-form overload samples f on a 257x257 grid.
std::vector<double> sine_coefficients(const ScalarField &f, int q);
std::vector<double> sine_coefficients(const std::function<double(double, double)> &f, int q,
                                      const Grid &quad_grid = Grid(257, 257));

/// Reference amplitude sequence: lambda_i = 0.005 + 0.000625 (i + 2 sin i)
/// for i = 1..p in lattice order; the B-spline variant divides by 5.
std::vector<double> ground_truth_amplitudes(NoiseFamily family, int p);

/// One noise field realized on a grid as a scalar profile times a constant
/// direction, sigma = psi * (dir_x, dir_y), with the profile's stencil
/// derivatives precomputed. Every family in the library is axis-aligned and
/// the SDE/moment kernels carry fast branches for e_1 and e_2; arbitrary
/// constant directions take a general path. [i0,i1) x [j0,j1) bounds the
/// support of psi and its derivatives; loops skip nodes outside it.
struct NoiseProfile {
    double dir_x = 1.0, dir_y = 0.0;
    int param_index = 0; // which theta entry scales this field
    int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
    std::vector<double> psi, dpsi_x, dpsi_y; // full-grid arrays

    bool is_e1() const { return dir_x == 1.0 && dir_y == 0.0; }
    bool is_e2() const { return dir_x == 0.0 && dir_y == 1.0; }
    bool full_support(const Grid &g) const {
        return i0 == 0 && j0 == 0 && i1 == g.nx && j1 == g.ny;
    }
};

/// All fields of a model realized on one grid. Immutable after construction;
/// shared freely across worker threads.
struct NoiseFieldSet {
    Grid grid;
    std::vector<NoiseProfile> profiles;

    static NoiseFieldSet from_model(const NoiseModel &model, const Grid &grid);
    /// Test-facing constructor from explicit profiles; axis is 0 for e_1 and
    /// 1 for e_2.
    static NoiseFieldSet from_profiles(const Grid &grid,
                                       const std::vector<std::pair<ScalarField, int>> &profiles);
    /// Fully general constant directions.
    static NoiseFieldSet from_directed_profiles(
        const Grid &grid,
        const std::vector<std::pair<ScalarField, std::pair<double, double>>> &profiles);

    int field_count() const { return static_cast<int>(profiles.size()); }
    VectorField field(int alpha) const;
};

} // namespace sepda
