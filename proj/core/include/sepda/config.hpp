#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sepda/estimation.hpp"
#include "sepda/noise.hpp"
#include "sepda/sde.hpp"
#include "sepda/synth.hpp"

namespace sepda {

/// Declaration of a noise model in a run configuration. Theta may be given
/// explicitly or derived: "reference-amplitudes" evaluates the built-in
/// amplitude formula over the lattice, "sine-f" takes the sine coefficients
/// of the built-in separable test function.
struct NoiseDecl {
    NoiseFamily family = NoiseFamily::gaussian_lattice;
    std::string lattice; // "square" | "hex14" | "explicit" (lattice families)
    int rows = 0, cols = 0;
    std::vector<std::pair<double, double>> centers;
    double tau = 0.0;
    int max_frequency = 0;

    enum class ThetaKind { explicit_values, reference_amplitudes, sine_f, zeros };
    ThetaKind theta_kind = ThetaKind::zeros;
    std::vector<double> theta_values;
    double theta_scale = 1.0;

    bool width_free = false;

    std::vector<std::pair<double, double>> resolve_centers() const;
    std::vector<double> resolve_theta() const;
    NoiseModel build() const;
};

struct RegistrationConfig {
    int cp_rows = 3, cp_cols = 3;
    std::vector<std::pair<double, double>> points; // overrides the cp lattice
    double lambda = 0.1;
    int steps = 32;
    EstimatorConfig estimator;
};

struct ExperimentRow {
    std::string label;
    NoiseDecl noise;             // model to fit; theta resolves to the truth in experiment A
    std::vector<double> theta_init;
    double theta_init_constant = 0.0;
    bool has_theta_init_constant = false;

    std::vector<double> resolve_theta_init(std::size_t dim) const;
};

struct ExperimentConfig {
    std::string name; // "A" or "B"
    std::vector<ExperimentRow> rows;
    std::vector<NoiseDecl> ground_truth_fields; // experiment B truths, one per case
    std::vector<std::string> ground_truth_labels;
};

struct RunConfig {
    Grid grid{64, 64};
    KernelSpec kernel{{{1.0 / 3, 0.05}, {1.0 / 3, 0.1}, {1.0 / 3, 0.2}}};

    SyntheticImageSpec source_image;
    std::optional<SyntheticImageSpec> target_image;
    std::optional<std::string> source_image_path;
    std::optional<std::string> target_image_path;
    std::optional<std::string> momentum_path; // initial m0, SEPDA-F32
    std::optional<std::string> samples_path;  // SampleSet directory for estimate

    NoiseDecl noise;
    SdeConfig sde;
    EstimatorConfig estimator;
    int moment_steps = 0; // forward-model steps for estimation; 0 = sde.steps
    std::vector<double> theta_init;
    double theta_init_constant = 0.0;
    bool has_theta_init_constant = false;
    std::optional<std::vector<double>> ground_truth;

    std::optional<RegistrationConfig> registration;
    std::optional<ExperimentConfig> experiment;

    std::string out_dir = "out";

    static RunConfig load(const std::filesystem::path &path);
    std::vector<double> resolve_theta_init(std::size_t dim) const;
    int resolve_moment_steps() const { return moment_steps > 0 ? moment_steps : sde.steps; }
};

} // namespace sepda
