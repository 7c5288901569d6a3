#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sepda/epdiff.hpp"
#include "sepda/noise.hpp"
#include "sepda/parallel.hpp"

namespace sepda {

struct SdeConfig {
    int steps = 128;
    std::uint64_t base_seed = 0;
    int n_samples = 1;
    bool store_momenta = false;
};

/// Endpoint images of a Monte Carlo run, ordered by sample index.
struct SampleSet {
    Grid grid;
    std::vector<ScalarField> images;
    std::vector<VectorField> momenta; // filled only when requested
    std::string config_digest;
    std::string model_digest;

    ScalarField mean_image() const;
};

/// Stratonovich drift of the coupled system; identical to the deterministic
/// right-hand sides (epdiff_rhs, advection_rhs) by construction.
std::pair<VectorField, ScalarField> stratonovich_drift(const State &s, const KernelSpec &spec);

/// Diffusion coefficient of noise field alpha:
///   b_m = -ad*_{sigma_alpha} m,  b_I = -grad(I).sigma_alpha.
std::pair<VectorField, ScalarField> diffusion_term(const State &s, const NoiseFieldSet &noise,
                                                   int alpha);

/// One Stratonovich Heun (predictor-corrector) step. dw holds one increment
/// per noise field, drawn N(0, dt). Momentum and image advance jointly with
/// shared increments.
State heun_step(const State &s, const NoiseFieldSet &noise, const KernelSpec &spec, double dt,
                std::span<const double> dw);

/// Deterministic Heun integration: heun_step with an empty noise set. The
/// zero-amplitude reduction of sample_endpoints reproduces this bitwise.
State integrate_heun(const State &s0, const KernelSpec &spec, int steps);

/// N i.i.d. endpoint images. Sample i consumes the counter-based stream
/// (cfg.base_seed, i), so the result is a pure function of the arguments,
/// independent of worker count and scheduling.
SampleSet sample_endpoints(const State &s0, const NoiseModel &model, const KernelSpec &spec,
                           const SdeConfig &cfg, const WorkerPool &pool = WorkerPool(1));

/// Scalar surrogates for the one-dimensional test equation dX = b X o dW,
/// wired through the same predictor-corrector algebra as heun_step. The
/// Euler-Maruyama variant is intentionally the Ito scheme; it must fail the
/// Stratonovich mean law E X_t = X_0 exp(b^2 t / 2).
double heun_scalar_step(double x, double b, double dw);
double euler_maruyama_scalar_step(double x, double b, double dw);

} // namespace sepda
