#pragma once

#include <vector>

#include "sepda/field_ops.hpp"
#include "sepda/kernel.hpp"
#include "sepda/types.hpp"

namespace sepda {

/// Momentum/image pair at time t. The velocity is never stored: it is
/// recovered as smooth(spec, m) wherever needed.
struct State {
    VectorField m;
    ScalarField image;
    double t = 0.0;

    State() = default;
    State(VectorField m_, ScalarField image_, double t_ = 0.0);
};

/// Coadjoint action ad*_v m = Dm.v + (Dv)^T.m + Div(v) m.
VectorField coadjoint(const VectorField &m, const VectorField &v);

/// Momentum evolution: -ad*_u m with u = smooth(spec, m).
VectorField epdiff_rhs(const State &s, const KernelSpec &spec);

/// Image transport: -grad(I).u with u = smooth(spec, m).
ScalarField advection_rhs(const State &s, const KernelSpec &spec);

/// <u, m> with u = smooth(spec, m); the squared metric norm of the velocity.
double kinetic_energy(const VectorField &m, const KernelSpec &spec);

/// Classical RK4 with dt = 1/steps applied jointly to (m, I). Returns the
/// endpoint state; throws blowup_error naming the step if values go
/// non-finite.
State integrate_deterministic(const State &s0, const KernelSpec &spec, int steps);

/// Same stepping code, keeping all steps+1 states.
std::vector<State> integrate_deterministic_path(const State &s0, const KernelSpec &spec,
                                                int steps);

namespace detail {
// Shared drift kernels: dm = -ad*_u m and dI = -grad(I).u for a given u.
// sde and moments build on these so that the deterministic parts of all
// three integrators are the same code path.
void epdiff_drift_into(const VectorField &m, const MatrixField &jm, const VectorField &u,
                       VectorField &dm);
void advection_drift_into(const VectorField &grad_image, const VectorField &u, ScalarField &di);
} // namespace detail

} // namespace sepda
