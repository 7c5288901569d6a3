#include "sepda/experiment.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sepda {

namespace fs = std::filesystem;

double relative_error(std::span<const double> truth, std::span<const double> estimate) {
    if (truth.size() != estimate.size()) {
        throw std::invalid_argument("relative_error: dimension mismatch");
    }
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
        num += (truth[j] - estimate[j]) * (truth[j] - estimate[j]);
        den += truth[j] * truth[j];
    }
    if (den == 0.0) {
        throw std::invalid_argument("relative_error: zero ground truth");
    }
    return std::sqrt(num / den);
}

void write_estimation_csv(const fs::path &path, const EstimationReport &report,
                          const std::string &param_prefix) {
    std::vector<std::string> header{"iteration", "loss"};
    const std::size_t q = report.final_theta.size();
    for (std::size_t j = 0; j < q; ++j) {
        header.push_back(param_prefix + std::to_string(j));
    }
    std::vector<std::vector<double>> rows;
    rows.reserve(report.losses.size());
    for (std::size_t k = 0; k < report.losses.size(); ++k) {
        std::vector<double> row{static_cast<double>(k), report.losses[k]};
        row.insert(row.end(), report.thetas[k].begin(), report.thetas[k].end());
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

namespace {

ScalarField load_image(const std::optional<std::string> &path, const SyntheticImageSpec &spec,
                       const Grid &grid) {
    if (path) {
        ScalarField img = read_scalar_field(*path);
        if (img.grid != grid) {
            throw std::runtime_error("image " + *path + " does not match the configured grid");
        }
        return img;
    }
    return synth_image(spec, grid);
}

ControlPointMomentum control_points_from_config(const RegistrationConfig &reg) {
    ControlPointMomentum cp;
    cp.points = reg.points.empty() ? square_lattice(reg.cp_rows, reg.cp_cols) : reg.points;
    cp.momenta.assign(cp.points.size(), {0.0, 0.0});
    return cp;
}

void write_theta_manifest(const fs::path &path, const EstimationReport &report,
                          const std::optional<std::vector<double>> &truth) {
    Manifest m;
    m.add("kind", "estimate");
    m.add("iterations", std::to_string(report.iterations()));
    m.add("aborted_non_finite", report.aborted_non_finite ? "1" : "0");
    if (!report.losses.empty()) {
        m.add_double("final_loss", report.losses.back());
    }
    for (std::size_t j = 0; j < report.final_theta.size(); ++j) {
        m.add_double("theta_hat." + std::to_string(j), report.final_theta[j]);
    }
    if (truth) {
        double den = 0.0, num = 0.0;
        for (std::size_t j = 0; j < truth->size(); ++j) {
            den += (*truth)[j] * (*truth)[j];
            num += ((*truth)[j] - report.final_theta[j]) * ((*truth)[j] - report.final_theta[j]);
        }
        if (den > 0.0) {
            m.add_double("relative_error", relative_error(*truth, report.final_theta));
        } else {
            // A zero ground truth leaves the relative metric undefined.
            m.add_double("absolute_error", std::sqrt(num));
        }
    }
    m.write(path);
}

// Stage bookkeeping so a failed pipeline leaves a manifest naming the stage
// and the artifacts written so far.
struct StageLog {
    Manifest manifest;
    fs::path out;

    explicit StageLog(const fs::path &out_dir, const std::string &command) : out(out_dir) {
        fs::create_directories(out);
        manifest.add("command", command);
        manifest.add("status", "running");
    }

    void artifact(const std::string &name) {
        manifest.add("artifact." + name, digest_file(out / name));
    }
    void artifact_at(const std::string &name, const fs::path &path) {
        manifest.add("artifact." + name, digest_file(path));
    }

    void fail(const std::string &stage, const std::string &what) {
        for (auto &[k, v] : manifest.entries) {
            if (k == "status") {
                v = "failed";
            }
        }
        manifest.add("failed_stage", stage);
        manifest.add("error", what);
        manifest.write(out / "manifest.txt");
    }

    void done() {
        for (auto &[k, v] : manifest.entries) {
            if (k == "status") {
                v = "ok";
            }
        }
        manifest.write(out / "manifest.txt");
    }
};

ScalarField mean_noise_difference(const ScalarField &mean, const ScalarField &deterministic) {
    ScalarField diff(mean.grid);
    for (std::size_t k = 0; k < diff.v.size(); ++k) {
        diff.v[k] = std::abs(mean.v[k] - deterministic.v[k]);
    }
    return diff;
}

struct FitResult {
    EstimationReport report;
    NoiseModel fitted;
};

FitResult fit_model(const NoiseDecl &decl, const std::vector<double> &theta_init,
                    const State &s0, const KernelSpec &kernel, int steps,
                    const ScalarField &empirical_mean, const EstimatorConfig &est,
                    const WorkerPool &pool) {
    LossFixture fixture;
    fixture.s0 = s0;
    NoiseDecl template_decl = decl;
    template_decl.theta_kind = NoiseDecl::ThetaKind::zeros;
    template_decl.theta_scale = 1.0;
    fixture.model_template = template_decl.build();
    fixture.width_free = decl.width_free;
    fixture.spec = kernel;
    fixture.steps = steps;
    fixture.empirical_mean = empirical_mean;
    fixture.similarity = est.similarity;

    const Objective objective = make_loss_objective(fixture);
    EstimationReport report = adam_minimize(objective, theta_init, est, pool);
    FitResult result;
    result.fitted = fixture.instantiate(report.final_theta);
    result.report = std::move(report);
    return result;
}

} // namespace

PipelineInputs prepare_inputs(const RunConfig &cfg, const WorkerPool &pool) {
    PipelineInputs in;
    in.source = load_image(cfg.source_image_path, cfg.source_image, cfg.grid);
    if (cfg.target_image_path || cfg.target_image) {
        in.target = load_image(cfg.target_image_path,
                               cfg.target_image.value_or(SyntheticImageSpec{}), cfg.grid);
    }
    if (cfg.momentum_path) {
        in.m0 = read_vector_field(*cfg.momentum_path);
        if (in.m0.grid != cfg.grid) {
            throw std::runtime_error("momentum field does not match the configured grid");
        }
    } else if (cfg.registration && in.target) {
        const RegistrationConfig &reg = *cfg.registration;
        auto [m0, report] =
            register_shooting(in.source, *in.target, control_points_from_config(reg), cfg.kernel,
                              reg.lambda, reg.steps, reg.estimator, pool);
        in.m0 = std::move(m0);
        in.registration_report = std::move(report);
    } else {
        in.m0 = VectorField(cfg.grid);
    }
    return in;
}

void cmd_register(const RunConfig &cfg, const WorkerPool &pool, const fs::path &out) {
    StageLog log(out, "register");
    try {
        ScalarField source = load_image(cfg.source_image_path, cfg.source_image, cfg.grid);
        if (!cfg.target_image_path && !cfg.target_image) {
            throw std::runtime_error("register: config has no target image");
        }
        ScalarField target = load_image(cfg.target_image_path,
                                        cfg.target_image.value_or(SyntheticImageSpec{}), cfg.grid);
        const RegistrationConfig reg = cfg.registration.value_or(RegistrationConfig{});

        auto [m0, report] =
            register_shooting(source, target, control_points_from_config(reg), cfg.kernel,
                              reg.lambda, reg.steps, reg.estimator, pool);

        write_field(out / "m0.sepda", m0);
        write_estimation_csv(out / "registration_report.csv", report, "p");
        write_pgm16(out / "source.pgm", source);
        write_pgm16(out / "target.pgm", target);
        const State end = integrate_deterministic(State(m0, source, 0.0), cfg.kernel, reg.steps);
        write_pgm16(out / "warped.pgm", end.image);
        write_field(out / "warped.sepda", end.image);

        log.artifact("m0.sepda");
        log.artifact("registration_report.csv");
        log.artifact("warped.sepda");
        log.manifest.add_double("initial_ssd", ssd(source, target));
        log.manifest.add_double("final_ssd", ssd(end.image, target));
        log.done();
    } catch (const std::exception &e) {
        log.fail("register", e.what());
        throw;
    }
}

void cmd_sample(const RunConfig &cfg, const WorkerPool &pool, const fs::path &out) {
    StageLog log(out, "sample");
    std::string stage = "prepare-inputs";
    try {
        const PipelineInputs in = prepare_inputs(cfg, pool);
        stage = "sample";
        const NoiseModel model = cfg.noise.build();
        const State s0(in.m0, in.source, 0.0);
        const SampleSet set = sample_endpoints(s0, model, cfg.kernel, cfg.sde, pool);

        stage = "write";
        write_sample_set(out / "samples", set, cfg.sde);
        const ScalarField mean = set.mean_image();
        write_field(out / "mean_image.sepda", mean);
        write_pgm16(out / "mean_image.pgm", mean);
        const State det = integrate_heun(s0, cfg.kernel, cfg.sde.steps);
        write_field(out / "deterministic_image.sepda", det.image);

        log.manifest.add("config_digest", set.config_digest);
        log.manifest.add("model_digest", set.model_digest);
        log.artifact_at("samples/manifest.txt", out / "samples" / "manifest.txt");
        log.artifact("mean_image.sepda");
        log.artifact("deterministic_image.sepda");
        log.done();
    } catch (const std::exception &e) {
        log.fail(stage, e.what());
        throw;
    }
}

void cmd_moments(const RunConfig &cfg, const WorkerPool &pool, const fs::path &out) {
    StageLog log(out, "moments");
    std::string stage = "prepare-inputs";
    try {
        const PipelineInputs in = prepare_inputs(cfg, pool);
        stage = "integrate-moments";
        const NoiseModel model = cfg.noise.build();
        const MomentState ms0(in.m0, in.source, 0.0);
        const MomentState end = integrate_moments(ms0, model, cfg.kernel, cfg.sde.steps);

        stage = "write";
        write_field(out / "moment_image.sepda", end.mean_image);
        write_field(out / "moment_momentum.sepda", end.mean_m);
        write_pgm16(out / "moment_image.pgm", end.mean_image);
        log.manifest.add("model_digest", digest_model(model));
        log.artifact("moment_image.sepda");
        log.artifact("moment_momentum.sepda");
        log.done();
    } catch (const std::exception &e) {
        log.fail(stage, e.what());
        throw;
    }
}

void cmd_estimate(const RunConfig &cfg, const WorkerPool &pool, const fs::path &out) {
    StageLog log(out, "estimate");
    std::string stage = "prepare-inputs";
    try {
        const PipelineInputs in = prepare_inputs(cfg, pool);
        stage = "load-samples";
        const fs::path samples =
            cfg.samples_path ? fs::path(*cfg.samples_path) : out / "samples";
        const SampleSet set = read_sample_set(samples);
        if (set.grid != cfg.grid) {
            throw std::runtime_error("sample set grid does not match the configured grid");
        }

        stage = "estimate";
        const State s0(in.m0, in.source, 0.0);
        NoiseDecl decl = cfg.noise;
        const std::size_t dim =
            decl.build().parameter_count() + (decl.width_free ? 1 : 0);
        const FitResult fit = fit_model(decl, cfg.resolve_theta_init(dim), s0, cfg.kernel,
                                        cfg.resolve_moment_steps(), set.mean_image(),
                                        cfg.estimator, pool);

        stage = "write";
        write_estimation_csv(out / "estimation_report.csv", fit.report, "theta_");
        write_theta_manifest(out / "theta_manifest.txt", fit.report, cfg.ground_truth);
        log.artifact("estimation_report.csv");
        log.artifact("theta_manifest.txt");
        log.done();
    } catch (const std::exception &e) {
        log.fail(stage, e.what());
        throw;
    }
}

namespace {

void run_experiment_a(const RunConfig &cfg, const WorkerPool &pool, const fs::path &out,
                      StageLog &log) {
    const ExperimentConfig &exp = *cfg.experiment;
    const PipelineInputs in = prepare_inputs(cfg, pool);
    const State s0(in.m0, in.source, 0.0);
    const State det = integrate_heun(s0, cfg.kernel, cfg.sde.steps);
    write_field(out / "deterministic_image.sepda", det.image);
    write_pgm16(out / "deterministic_image.pgm", det.image);

    std::vector<std::vector<double>> error_rows;
    std::vector<std::string> labels;
    for (const ExperimentRow &row : exp.rows) {
        const fs::path row_dir = out / ("row_" + row.label);
        fs::create_directories(row_dir);

        const NoiseModel truth = row.noise.build();
        const SampleSet set = sample_endpoints(s0, truth, cfg.kernel, cfg.sde, pool);
        write_sample_set(row_dir / "samples", set, cfg.sde);
        const ScalarField mean = set.mean_image();

        const std::size_t dim = truth.parameter_count() + (row.noise.width_free ? 1 : 0);
        const FitResult fit = fit_model(row.noise, row.resolve_theta_init(dim), s0, cfg.kernel,
                                        cfg.resolve_moment_steps(), mean, cfg.estimator, pool);

        std::vector<double> truth_theta = truth.theta;
        if (row.noise.width_free) {
            truth_theta.push_back(truth.tau);
        }
        const double rel = relative_error(truth_theta, fit.report.final_theta);

        write_estimation_csv(row_dir / "estimation_report.csv", fit.report, "theta_");
        write_theta_manifest(row_dir / "theta_manifest.txt", fit.report, truth_theta);
        write_field(row_dir / "mean_image.sepda", mean);
        const ScalarField meandiff = mean_noise_difference(mean, det.image);
        write_field(row_dir / "meandiff.sepda", meandiff);
        write_pgm16(row_dir / "meandiff.pgm", meandiff);
        const MomentState fitted_end =
            integrate_moments(MomentState(s0.m, s0.image, 0.0), fit.fitted, cfg.kernel,
                              cfg.resolve_moment_steps());
        const ScalarField predicted = mean_noise_difference(fitted_end.mean_image, det.image);
        write_field(row_dir / "meandiff_predicted.sepda", predicted);
        write_pgm16(row_dir / "meandiff_predicted.pgm", predicted);

        error_rows.push_back({static_cast<double>(error_rows.size()), rel,
                              fit.report.losses.empty() ? std::nan("") : fit.report.losses.back(),
                              static_cast<double>(fit.report.iterations())});
        labels.push_back(row.label);
        log.manifest.add("row." + row.label + ".relative_error",
                         std::to_string(rel));
    }

    write_csv(out / "relative_errors.csv", {"row", "relative_error", "final_loss", "iterations"},
              error_rows);
    {
        Manifest rowmap;
        for (std::size_t r = 0; r < labels.size(); ++r) {
            rowmap.add("row." + std::to_string(r), labels[r]);
        }
        rowmap.write(out / "relative_errors_rows.txt");
    }
    log.artifact("relative_errors.csv");
}

void run_experiment_b(const RunConfig &cfg, const WorkerPool &pool, const fs::path &out,
                      StageLog &log) {
    const ExperimentConfig &exp = *cfg.experiment;
    if (exp.ground_truth_fields.empty()) {
        throw std::runtime_error("experiment B needs ground_truth_fields");
    }
    const PipelineInputs in = prepare_inputs(cfg, pool);
    const State s0(in.m0, in.source, 0.0);
    const State det = integrate_heun(s0, cfg.kernel, cfg.sde.steps);

    std::vector<std::vector<double>> ssd_rows;
    std::vector<std::string> row_labels;
    for (std::size_t t = 0; t < exp.ground_truth_fields.size(); ++t) {
        const NoiseDecl &truth_decl = exp.ground_truth_fields[t];
        const std::string &truth_label = exp.ground_truth_labels[t];
        const NoiseModel truth = truth_decl.build();
        const ScalarField truth_norm = norm_field(truth, cfg.grid);
        const ScalarField zero_norm(cfg.grid);
        const double ssd_zero = ssd(zero_norm, truth_norm);

        const SampleSet set = sample_endpoints(s0, truth, cfg.kernel, cfg.sde, pool);
        const ScalarField mean = set.mean_image();
        const fs::path truth_dir = out / ("truth_" + truth_label);
        fs::create_directories(truth_dir);
        write_field(truth_dir / "norm_field_truth.sepda", truth_norm);
        write_pgm16(truth_dir / "norm_field_truth.pgm", truth_norm);
        const ScalarField meandiff = mean_noise_difference(mean, det.image);
        write_field(truth_dir / "meandiff.sepda", meandiff);
        write_pgm16(truth_dir / "meandiff.pgm", meandiff);

        for (const ExperimentRow &row : exp.rows) {
            const NoiseModel model_template = row.noise.build();
            const std::size_t dim =
                model_template.parameter_count() + (row.noise.width_free ? 1 : 0);
            const FitResult fit = fit_model(row.noise, row.resolve_theta_init(dim), s0,
                                            cfg.kernel, cfg.resolve_moment_steps(), mean,
                                            cfg.estimator, pool);

            const ScalarField fit_norm = norm_field(fit.fitted, cfg.grid);
            const double ssd_fit = ssd(fit_norm, truth_norm);

            const fs::path fit_dir = truth_dir / ("fit_" + row.label);
            fs::create_directories(fit_dir);
            write_estimation_csv(fit_dir / "estimation_report.csv", fit.report, "theta_");
            write_theta_manifest(fit_dir / "theta_manifest.txt", fit.report, std::nullopt);
            write_field(fit_dir / "norm_field_fit.sepda", fit_norm);
            write_pgm16(fit_dir / "norm_field_fit.pgm", fit_norm);
            const MomentState fitted_end =
                integrate_moments(MomentState(s0.m, s0.image, 0.0), fit.fitted, cfg.kernel,
                                  cfg.resolve_moment_steps());
            const ScalarField predicted = mean_noise_difference(fitted_end.mean_image, det.image);
            write_field(fit_dir / "meandiff_predicted.sepda", predicted);
            write_pgm16(fit_dir / "meandiff_predicted.pgm", predicted);

            ssd_rows.push_back({static_cast<double>(ssd_rows.size()), ssd_fit, ssd_zero});
            row_labels.push_back(truth_label + "/" + row.label);
            log.manifest.add("normfield_ssd." + truth_label + "." + row.label,
                             std::to_string(ssd_fit));
            log.manifest.add("normfield_ssd_zero." + truth_label, std::to_string(ssd_zero));
        }
    }

    write_csv(out / "normfield_ssd.csv", {"row", "ssd_fit", "ssd_zero"}, ssd_rows);
    {
        Manifest rowmap;
        for (std::size_t r = 0; r < row_labels.size(); ++r) {
            rowmap.add("row." + std::to_string(r), row_labels[r]);
        }
        rowmap.write(out / "normfield_ssd_rows.txt");
    }
    log.artifact("normfield_ssd.csv");
}

} // namespace

void cmd_experiment(const RunConfig &cfg, const WorkerPool &pool, const fs::path &out) {
    if (!cfg.experiment) {
        throw std::runtime_error("config has no experiment block");
    }
    StageLog log(out, "experiment-" + cfg.experiment->name);
    try {
        if (cfg.experiment->name == "A") {
            run_experiment_a(cfg, pool, out, log);
        } else {
            run_experiment_b(cfg, pool, out, log);
        }
        log.done();
    } catch (const std::exception &e) {
        log.fail("experiment-" + cfg.experiment->name, e.what());
        throw;
    }
}

} // namespace sepda
