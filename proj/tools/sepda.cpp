#include <cstdio>
#include <exception>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "sepda/experiment.hpp"

namespace {

int default_workers() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Stochastic image EPDiff: shooting, SDE sampling, moment equations and "
                 "noise-field estimation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    int workers = default_workers();

    auto add_common = [&](CLI::App *cmd) {
        cmd->add_option("--config", config_path, "Run configuration (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", out_override, "Output directory (overrides config)");
        cmd->add_option("--workers", workers, "Worker threads for sampling and gradient probes")
            ->check(CLI::PositiveNumber);
    };

    CLI::App *reg = app.add_subcommand("register", "Shooting registration of source onto target");
    CLI::App *sample = app.add_subcommand("sample", "Sample endpoint images from the SDE");
    CLI::App *moments = app.add_subcommand("moments", "Integrate the first-order moment equations");
    CLI::App *estimate = app.add_subcommand("estimate", "Fit noise parameters to a sample set");
    CLI::App *experiment = app.add_subcommand("experiment", "Run the configured study end to end");
    for (CLI::App *cmd : {reg, sample, moments, estimate, experiment}) {
        add_common(cmd);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        const sepda::RunConfig cfg = sepda::RunConfig::load(config_path);
        const std::filesystem::path out = out_override.empty() ? cfg.out_dir : out_override;
        const sepda::WorkerPool pool(workers);

        if (reg->parsed()) {
            sepda::cmd_register(cfg, pool, out);
        } else if (sample->parsed()) {
            sepda::cmd_sample(cfg, pool, out);
        } else if (moments->parsed()) {
            sepda::cmd_moments(cfg, pool, out);
        } else if (estimate->parsed()) {
            sepda::cmd_estimate(cfg, pool, out);
        } else if (experiment->parsed()) {
            sepda::cmd_experiment(cfg, pool, out);
        }
    } catch (const std::exception &e) {
        std::fprintf(stderr, "sepda: %s\n", e.what());
        return 1;
    }
    return 0;
}
