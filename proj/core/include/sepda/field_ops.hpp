#pragma once

#include <span>
#include <utility>

#include "sepda/types.hpp"

namespace sepda {

/// Gradient of a scalar field: central differences at interior nodes,
/// second-order one-sided differences at boundary nodes.
/// Requires at least 3 nodes per axis.
VectorField gradient(const ScalarField &f);

/// Per-node Jacobian of a vector field; each matrix row is the gradient of
/// one component, same stencils as gradient().
MatrixField jacobian(const VectorField &v);

/// Divergence = trace of the Jacobian, same stencils.
ScalarField divergence(const VectorField &v);

/// Bilinear interpolation from the 4 surrounding nodes; points outside
/// [0,1]^2 are clamped onto the boundary. Exact at grid nodes.
std::vector<double> sample_bilinear(const ScalarField &f,
                                    std::span<const std::pair<double, double>> points);
double sample_bilinear(const ScalarField &f, double px, double py);

/// Trapezoidal L2 pairing: sum of w_ij a_ij b_ij hx hy with boundary
/// weights 1/2 and corner weights 1/4. Fixed summation order.
double inner_l2(const ScalarField &a, const ScalarField &b);
double inner_l2(const VectorField &a, const VectorField &b);

// In-place derivative kernels used by the composite operators above and by
// the hot loops in sde/moments. `out` must already have the field's size.
// Stencil layout is shared by every derivative in the library.
namespace detail {
void diff_x(const Grid &g, const double *f, double *out);
void diff_y(const Grid &g, const double *f, double *out);
} // namespace detail

bool all_finite(const ScalarField &f);
bool all_finite(const VectorField &v);
double max_abs(const ScalarField &f);
double max_abs(const VectorField &v);

} // namespace sepda
