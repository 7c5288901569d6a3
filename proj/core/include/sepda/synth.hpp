#pragma once

#include <vector>

#include "sepda/types.hpp"

namespace sepda {

enum class ImageKind { blob_sum, ring, checker_smooth };

/// Deterministic closed-form test images with values in [0,1]; all kinds are
/// smooth so the advection stencils behave. These stand in for scanned
/// imagery in the simulation studies.
struct SyntheticImageSpec {
    ImageKind kind = ImageKind::blob_sum;

    struct Blob {
        double cx = 0.5, cy = 0.5;
        double width = 0.12;
        double height = 1.0;
    };
    std::vector<Blob> blobs; // blob_sum

    double ring_cx = 0.5, ring_cy = 0.5;
    double ring_radius = 0.3;
    double ring_width = 0.06;
    double ring_height = 1.0;

    double checker_frequency = 2.0; // full periods across the domain
};

ScalarField synth_image(const SyntheticImageSpec &spec, const Grid &grid);

} // namespace sepda
