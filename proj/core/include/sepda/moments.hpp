#pragma once

#include <utility>

#include "sepda/epdiff.hpp"
#include "sepda/noise.hpp"

namespace sepda {

/// First moments <m_t>, <I_t> of the stochastic system.
struct MomentState {
    VectorField mean_m;
    ScalarField mean_image;
    double t = 0.0;

    MomentState() = default;
    MomentState(VectorField m, ScalarField image, double t_ = 0.0);
};

/// Ito-Stratonovich correction of the momentum equation:
///   c_EPDiff(m) = sum_alpha ad*_{sigma_alpha}( ad*_{sigma_alpha} m ).
VectorField correction_epdiff(const VectorField &m, const NoiseFieldSet &noise);
VectorField correction_epdiff(const VectorField &m, const NoiseModel &model);

/// Ito-Stratonovich correction of the advection equation:
///   c_Advect(I) = sum_alpha grad( grad(I).sigma_alpha ).sigma_alpha,
/// composed from nested first-derivative stencils.
ScalarField correction_advect(const ScalarField &image, const NoiseFieldSet &noise);
ScalarField correction_advect(const ScalarField &image, const NoiseModel &model);

/// Closed first-order moment equations:
///   d<m> = -ad*_<u> <m> + 1/2 c_EPDiff(<m>),
///   d<I> = -grad<I>.<u> + 1/2 c_Advect(<I>),   <u> = smooth(spec, <m>).
std::pair<VectorField, ScalarField> moment_rhs(const MomentState &ms, const NoiseFieldSet &noise,
                                               const KernelSpec &spec);

/// RK4 with dt = 1/steps on moment_rhs; returns the endpoint moments. This
/// is the forward model of the moment-matching estimator.
MomentState integrate_moments(const MomentState &ms0, const NoiseFieldSet &noise,
                              const KernelSpec &spec, int steps);
MomentState integrate_moments(const MomentState &ms0, const NoiseModel &model,
                              const KernelSpec &spec, int steps);

} // namespace sepda
