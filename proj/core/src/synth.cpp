#include "sepda/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sepda {

ScalarField synth_image(const SyntheticImageSpec &spec, const Grid &grid) {
    ScalarField img(grid);
    switch (spec.kind) {
    case ImageKind::blob_sum: {
        for (const auto &b : spec.blobs) {
            if (!(b.width > 0.0) || b.height < 0.0) {
                throw std::invalid_argument("synth_image: blob needs width > 0, height >= 0");
            }
            for (int i = 0; i < grid.nx; ++i) {
                for (int j = 0; j < grid.ny; ++j) {
                    const double dx = grid.x(i) - b.cx;
                    const double dy = grid.y(j) - b.cy;
                    img(i, j) += b.height * std::exp(-(dx * dx + dy * dy) /
                                                     (2.0 * b.width * b.width));
                }
            }
        }
        break;
    }
    case ImageKind::ring: {
        if (!(spec.ring_width > 0.0)) {
            throw std::invalid_argument("synth_image: ring needs width > 0");
        }
        for (int i = 0; i < grid.nx; ++i) {
            for (int j = 0; j < grid.ny; ++j) {
                const double dx = grid.x(i) - spec.ring_cx;
                const double dy = grid.y(j) - spec.ring_cy;
                const double r = std::sqrt(dx * dx + dy * dy) - spec.ring_radius;
                img(i, j) = spec.ring_height *
                            std::exp(-r * r / (2.0 * spec.ring_width * spec.ring_width));
            }
        }
        break;
    }
    case ImageKind::checker_smooth: {
        const double f = 2.0 * std::numbers::pi * spec.checker_frequency;
        for (int i = 0; i < grid.nx; ++i) {
            for (int j = 0; j < grid.ny; ++j) {
                img(i, j) = 0.5 + 0.5 * std::sin(f * grid.x(i)) * std::sin(f * grid.y(j));
            }
        }
        break;
    }
    }
    // Rescale into [0,1] when blob stacking overshoots; the shapes stay smooth.
    const double peak = *std::max_element(img.v.begin(), img.v.end());
    if (peak > 1.0) {
        for (double &v : img.v) {
            v /= peak;
        }
    }
    return img;
}

} // namespace sepda
