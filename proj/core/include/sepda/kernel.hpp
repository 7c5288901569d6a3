#pragma once

#include <memory>
#include <vector>

#include "sepda/types.hpp"

namespace sepda {

/// Multi-Gaussian smoothing kernel k(x) = sum_i w_i exp(-|x|^2 / sigma_i^2).
/// Applying it as a convolution realizes the inverse metric operator: the
/// velocity is recovered from the momentum as u = k * m, componentwise.
struct KernelSpec {
    struct Term {
        double weight;
        double width;
    };
    std::vector<Term> terms;

    KernelSpec() = default;
    explicit KernelSpec(std::vector<Term> t);
};

/// k evaluated at squared distance r2 >= 0.
double kernel_eval(const KernelSpec &spec, double r2);

/// Discrete linear convolution of each component with the kernel sampled at
/// node offsets, scaled by the cell area hx*hy; computed by FFT on a grid
/// zero-padded to at least (2nx-1, 2ny-1) and cropped back. Fields that are
/// exactly zero pass through unchanged.
VectorField smooth(const KernelSpec &spec, const VectorField &m);

/// Precomputed FFT plans and kernel spectrum for one (spec, grid) pair.
/// apply() is safe to call concurrently; construction and destruction of
/// distinct convolvers serialize on an internal mutex (FFTW plan calls are
/// not thread-safe).
class FftConvolver {
  public:
    FftConvolver(const KernelSpec &spec, const Grid &grid);
    ~FftConvolver();
    FftConvolver(const FftConvolver &) = delete;
    FftConvolver &operator=(const FftConvolver &) = delete;

    VectorField apply(const VectorField &m) const;
    void apply_component(const double *in, double *out) const;

    const Grid &grid() const { return grid_; }

  private:
    struct Impl;
    Grid grid_;
    std::unique_ptr<Impl> impl_;
};

/// Shared convolver for (spec, grid); cached so repeated smooth() calls do
/// not rebuild plans.
std::shared_ptr<const FftConvolver> get_convolver(const KernelSpec &spec, const Grid &grid);

} // namespace sepda
