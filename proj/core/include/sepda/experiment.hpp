#pragma once

#include <filesystem>
#include <optional>

#include "sepda/config.hpp"
#include "sepda/io.hpp"

namespace sepda {

/// Source image and initial momentum resolved from a run configuration:
/// images load from SEPDA-F32 paths or synthesize from specs; the momentum
/// loads from momentum_path, else comes from a registration run against the
/// target, else is zero.
struct PipelineInputs {
    ScalarField source;
    std::optional<ScalarField> target;
    VectorField m0;
    std::optional<EstimationReport> registration_report;
};

PipelineInputs prepare_inputs(const RunConfig &cfg, const WorkerPool &pool);

/// Command cores shared by the CLI and the acceptance suite. Each writes its
/// artifacts plus a manifest under `out` and throws on failure after
/// flagging the failed stage in the manifest.
void cmd_register(const RunConfig &cfg, const WorkerPool &pool,
                  const std::filesystem::path &out);
void cmd_sample(const RunConfig &cfg, const WorkerPool &pool, const std::filesystem::path &out);
void cmd_moments(const RunConfig &cfg, const WorkerPool &pool, const std::filesystem::path &out);
void cmd_estimate(const RunConfig &cfg, const WorkerPool &pool, const std::filesystem::path &out);
void cmd_experiment(const RunConfig &cfg, const WorkerPool &pool,
                    const std::filesystem::path &out);

/// |theta0 - theta_hat| / |theta0|.
double relative_error(std::span<const double> truth, std::span<const double> estimate);

void write_estimation_csv(const std::filesystem::path &path, const EstimationReport &report,
                          const std::string &param_prefix);

} // namespace sepda
