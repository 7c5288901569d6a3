#include "sepda/config.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace sepda {

using nlohmann::json;

namespace {

// Separable test function whose sine coefficients seed the sinusoidal
// ground truth: f(x,y) = x y^2 (1-x)(1-y) cos(5x) cos(5y).
double sine_f(double x, double y) {
    return x * y * y * (1.0 - x) * (1.0 - y) * std::cos(5.0 * x) * std::cos(5.0 * y);
}

std::vector<std::pair<double, double>> parse_point_list(const json &j, const std::string &what) {
    std::vector<std::pair<double, double>> pts;
    for (const auto &p : j) {
        if (!p.is_array() || p.size() != 2) {
            throw std::runtime_error("config: " + what + " entries must be [x, y] pairs");
        }
        pts.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return pts;
}

SyntheticImageSpec parse_image(const json &j) {
    SyntheticImageSpec spec;
    const std::string kind = j.value("kind", "blob-sum");
    if (kind == "blob-sum") {
        spec.kind = ImageKind::blob_sum;
        for (const auto &b : j.value("blobs", json::array())) {
            SyntheticImageSpec::Blob blob;
            if (b.contains("center")) {
                blob.cx = b["center"][0].get<double>();
                blob.cy = b["center"][1].get<double>();
            }
            blob.width = b.value("width", blob.width);
            blob.height = b.value("height", blob.height);
            spec.blobs.push_back(blob);
        }
    } else if (kind == "ring") {
        spec.kind = ImageKind::ring;
        if (j.contains("center")) {
            spec.ring_cx = j["center"][0].get<double>();
            spec.ring_cy = j["center"][1].get<double>();
        }
        spec.ring_radius = j.value("radius", spec.ring_radius);
        spec.ring_width = j.value("width", spec.ring_width);
        spec.ring_height = j.value("height", spec.ring_height);
    } else if (kind == "checker-smooth") {
        spec.kind = ImageKind::checker_smooth;
        spec.checker_frequency = j.value("frequency", spec.checker_frequency);
    } else {
        throw std::runtime_error("config: unknown image kind '" + kind + "'");
    }
    return spec;
}

NoiseDecl parse_noise(const json &j) {
    NoiseDecl decl;
    const std::string family = j.value("family", "gaussian-lattice");
    if (family == "gaussian-lattice") {
        decl.family = NoiseFamily::gaussian_lattice;
    } else if (family == "bspline-lattice") {
        decl.family = NoiseFamily::bspline_lattice;
    } else if (family == "sinusoidal") {
        decl.family = NoiseFamily::sinusoidal;
    } else {
        throw std::runtime_error("config: unknown noise family '" + family + "'");
    }
    decl.lattice = j.value("lattice", decl.family == NoiseFamily::sinusoidal ? "" : "hex14");
    decl.rows = j.value("rows", 0);
    decl.cols = j.value("cols", 0);
    if (j.contains("centers")) {
        decl.centers = parse_point_list(j["centers"], "noise.centers");
    }
    decl.tau = j.value("tau", 0.0);
    if (j.contains("tau2")) {
        decl.tau = std::sqrt(j["tau2"].get<double>());
    }
    decl.max_frequency = j.value("max_frequency", 0);
    decl.theta_scale = j.value("theta_scale", 1.0);
    decl.width_free = j.value("width_free", false);

    if (j.contains("theta")) {
        const json &t = j["theta"];
        if (t.is_array()) {
            decl.theta_kind = NoiseDecl::ThetaKind::explicit_values;
            decl.theta_values = t.get<std::vector<double>>();
        } else if (t.is_string()) {
            const std::string s = t.get<std::string>();
            if (s == "reference-amplitudes") {
                decl.theta_kind = NoiseDecl::ThetaKind::reference_amplitudes;
            } else if (s == "sine-f") {
                decl.theta_kind = NoiseDecl::ThetaKind::sine_f;
            } else if (s == "zeros") {
                decl.theta_kind = NoiseDecl::ThetaKind::zeros;
            } else {
                throw std::runtime_error("config: unknown theta spec '" + s + "'");
            }
        } else {
            throw std::runtime_error("config: theta must be an array or a named rule");
        }
    }
    return decl;
}

EstimatorConfig parse_estimator(const json &j, const EstimatorConfig &base) {
    EstimatorConfig cfg = base;
    const std::string sim = j.value("similarity", cfg.similarity == Similarity::ssd ? "ssd" : "ncc");
    if (sim == "ssd") {
        cfg.similarity = Similarity::ssd;
    } else if (sim == "ncc") {
        cfg.similarity = Similarity::ncc;
    } else {
        throw std::runtime_error("config: unknown similarity '" + sim + "'");
    }
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.beta1 = j.value("beta1", cfg.beta1);
    cfg.beta2 = j.value("beta2", cfg.beta2);
    cfg.epsilon_stability = j.value("epsilon", cfg.epsilon_stability);
    cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
    cfg.fd_step = j.value("fd_step", cfg.fd_step);
    cfg.step_tolerance = j.value("step_tolerance", cfg.step_tolerance);
    cfg.theta_scale_floor = j.value("theta_scale_floor", cfg.theta_scale_floor);
    if (j.contains("bounds")) {
        cfg.bounds.clear();
        const json &b = j["bounds"];
        if (b.is_array() && b.size() == 2 && b[0].is_number()) {
            cfg.bounds.emplace_back(b[0].get<double>(), b[1].get<double>());
        } else {
            for (const auto &pair : b) {
                cfg.bounds.emplace_back(pair[0].get<double>(), pair[1].get<double>());
            }
        }
    }
    return cfg;
}

void parse_theta_init(const json &j, std::vector<double> &values, double &constant,
                      bool &has_constant) {
    if (!j.contains("theta_init")) {
        return;
    }
    const json &t = j["theta_init"];
    if (t.is_array()) {
        values = t.get<std::vector<double>>();
    } else if (t.is_object() && t.contains("constant")) {
        constant = t["constant"].get<double>();
        has_constant = true;
    } else {
        throw std::runtime_error("config: theta_init must be an array or {\"constant\": c}");
    }
}

std::vector<double> resolve_init(const std::vector<double> &values, double constant,
                                 bool has_constant, std::size_t dim, double width_init,
                                 bool width_free) {
    if (!values.empty()) {
        if (values.size() != dim) {
            throw std::runtime_error("config: theta_init has wrong length");
        }
        return values;
    }
    if (!has_constant) {
        throw std::runtime_error("config: estimation requires theta_init");
    }
    std::vector<double> init(dim, constant);
    if (width_free) {
        init.back() = width_init;
    }
    return init;
}

} // namespace

std::vector<std::pair<double, double>> NoiseDecl::resolve_centers() const {
    if (family == NoiseFamily::sinusoidal) {
        return {};
    }
    if (lattice == "square") {
        if (rows < 1 || cols < 1) {
            throw std::runtime_error("config: square lattice needs rows and cols >= 1");
        }
        return square_lattice(rows, cols);
    }
    if (lattice == "hex14") {
        return hexagonal_lattice_14();
    }
    if (lattice == "explicit") {
        if (centers.empty()) {
            throw std::runtime_error("config: explicit lattice needs centers");
        }
        return centers;
    }
    throw std::runtime_error("config: unknown lattice '" + lattice + "'");
}

std::vector<double> NoiseDecl::resolve_theta() const {
    std::vector<double> theta;
    const std::size_t p = family == NoiseFamily::sinusoidal
                              ? static_cast<std::size_t>(max_frequency) * max_frequency
                              : resolve_centers().size();
    switch (theta_kind) {
    case ThetaKind::explicit_values:
        theta = theta_values;
        break;
    case ThetaKind::reference_amplitudes:
        if (family == NoiseFamily::sinusoidal) {
            throw std::runtime_error("config: reference-amplitudes applies to lattice families");
        }
        theta = ground_truth_amplitudes(family, static_cast<int>(p));
        break;
    case ThetaKind::sine_f:
        if (family != NoiseFamily::sinusoidal) {
            throw std::runtime_error("config: sine-f applies to the sinusoidal family");
        }
        theta = sine_coefficients(sine_f, max_frequency);
        break;
    case ThetaKind::zeros:
        theta.assign(p, 0.0);
        break;
    }
    if (theta.size() != p) {
        throw std::runtime_error("config: theta has wrong length for the noise model");
    }
    for (double &t : theta) {
        t *= theta_scale;
    }
    return theta;
}

NoiseModel NoiseDecl::build() const {
    if (family == NoiseFamily::sinusoidal) {
        return NoiseModel::sinusoidal(max_frequency, resolve_theta());
    }
    if (family == NoiseFamily::gaussian_lattice) {
        return NoiseModel::gaussian(resolve_centers(), tau, resolve_theta());
    }
    return NoiseModel::bspline(resolve_centers(), tau, resolve_theta());
}

std::vector<double> ExperimentRow::resolve_theta_init(std::size_t dim) const {
    return resolve_init(theta_init, theta_init_constant, has_theta_init_constant, dim, noise.tau,
                        noise.width_free);
}

std::vector<double> RunConfig::resolve_theta_init(std::size_t dim) const {
    return resolve_init(theta_init, theta_init_constant, has_theta_init_constant, dim, noise.tau,
                        noise.width_free);
}

RunConfig RunConfig::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config: " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception &e) {
        throw std::runtime_error("config parse error in " + path.string() + ": " + e.what());
    }

    RunConfig cfg;
    if (j.contains("grid")) {
        const int nx = j["grid"].value("nx", 64);
        const int ny = j["grid"].value("ny", 64);
        if (nx < 8 || ny < 8) {
            throw std::runtime_error("config: simulation grids need at least 8 nodes per axis");
        }
        cfg.grid = Grid(nx, ny);
    }
    if (j.contains("kernel")) {
        std::vector<KernelSpec::Term> terms;
        for (const auto &t : j["kernel"]) {
            terms.push_back({t[0].get<double>(), t[1].get<double>()});
        }
        cfg.kernel = KernelSpec(std::move(terms));
    }
    if (j.contains("source_image")) {
        cfg.source_image = parse_image(j["source_image"]);
    }
    if (j.contains("target_image")) {
        cfg.target_image = parse_image(j["target_image"]);
    }
    if (j.contains("source_image_path")) {
        cfg.source_image_path = j["source_image_path"].get<std::string>();
    }
    if (j.contains("target_image_path")) {
        cfg.target_image_path = j["target_image_path"].get<std::string>();
    }
    if (j.contains("momentum_path")) {
        cfg.momentum_path = j["momentum_path"].get<std::string>();
    }
    if (j.contains("samples_path")) {
        cfg.samples_path = j["samples_path"].get<std::string>();
    }
    if (j.contains("noise")) {
        cfg.noise = parse_noise(j["noise"]);
    }
    if (j.contains("sde")) {
        const json &s = j["sde"];
        cfg.sde.steps = s.value("steps", cfg.sde.steps);
        cfg.sde.base_seed = s.value("base_seed", cfg.sde.base_seed);
        cfg.sde.n_samples = s.value("n_samples", cfg.sde.n_samples);
        cfg.sde.store_momenta = s.value("store_momenta", cfg.sde.store_momenta);
    }
    if (j.contains("estimator")) {
        cfg.estimator = parse_estimator(j["estimator"], cfg.estimator);
        cfg.moment_steps = j["estimator"].value("moment_steps", cfg.moment_steps);
        parse_theta_init(j["estimator"], cfg.theta_init, cfg.theta_init_constant,
                         cfg.has_theta_init_constant);
    }
    if (j.contains("ground_truth")) {
        cfg.ground_truth = j["ground_truth"].get<std::vector<double>>();
    }
    if (j.contains("registration")) {
        const json &r = j["registration"];
        RegistrationConfig reg;
        if (r.contains("control_points")) {
            const json &cp = r["control_points"];
            if (cp.contains("points")) {
                reg.points = parse_point_list(cp["points"], "registration.control_points");
            } else {
                reg.cp_rows = cp.value("rows", reg.cp_rows);
                reg.cp_cols = cp.value("cols", reg.cp_cols);
            }
        }
        reg.lambda = r.value("lambda", reg.lambda);
        reg.steps = r.value("steps", reg.steps);
        // Registration moves point momenta, not amplitudes; give it wider
        // defaults unless the config says otherwise.
        reg.estimator.learning_rate = 0.2;
        reg.estimator.theta_scale_floor = 0.05;
        reg.estimator.max_iterations = 60;
        if (r.contains("estimator")) {
            reg.estimator = parse_estimator(r["estimator"], reg.estimator);
        }
        cfg.registration = reg;
    }
    if (j.contains("experiment")) {
        const json &e = j["experiment"];
        ExperimentConfig exp;
        exp.name = e.value("name", "A");
        if (exp.name != "A" && exp.name != "B") {
            throw std::runtime_error("config: experiment name must be \"A\" or \"B\"");
        }
        for (const auto &row : e.value("rows", json::array())) {
            ExperimentRow r;
            r.label = row.value("label", "row" + std::to_string(exp.rows.size()));
            if (!row.contains("noise")) {
                throw std::runtime_error("config: experiment row needs a noise block");
            }
            r.noise = parse_noise(row["noise"]);
            parse_theta_init(row, r.theta_init, r.theta_init_constant,
                             r.has_theta_init_constant);
            exp.rows.push_back(std::move(r));
        }
        for (const auto &gt : e.value("ground_truth_fields", json::array())) {
            exp.ground_truth_labels.push_back(
                gt.value("label", "truth" + std::to_string(exp.ground_truth_fields.size())));
            exp.ground_truth_fields.push_back(parse_noise(gt));
        }
        cfg.experiment = std::move(exp);
    }
    cfg.out_dir = j.value("out", cfg.out_dir);
    return cfg;
}

} // namespace sepda
