#include "sepda/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sepda {

double ssd(const ScalarField &a, const ScalarField &b) {
    if (a.grid != b.grid) {
        throw shape_error("ssd: grids differ");
    }
    ScalarField diff(a.grid);
    for (std::size_t k = 0; k < diff.v.size(); ++k) {
        diff.v[k] = a.v[k] - b.v[k];
    }
    return inner_l2(diff, diff);
}

double ncc_distance(const ScalarField &a, const ScalarField &b) {
    if (a.grid != b.grid) {
        throw shape_error("ncc_distance: grids differ");
    }
    const double aa = inner_l2(a, a);
    const double bb = inner_l2(b, b);
    if (aa == 0.0 || bb == 0.0) {
        throw degenerate_similarity_error("ncc_distance: zero field");
    }
    const double ab = inner_l2(a, b);
    return 1.0 - (ab * ab) / (aa * bb);
}

double similarity_distance(Similarity kind, const ScalarField &a, const ScalarField &b) {
    return kind == Similarity::ssd ? ssd(a, b) : ncc_distance(a, b);
}

void EstimatorConfig::validate(std::size_t dim) const {
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("EstimatorConfig: learning_rate must be positive");
    }
    if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("EstimatorConfig: decay rates must lie in (0,1)");
    }
    if (!(fd_step > 0.0)) {
        throw std::invalid_argument("EstimatorConfig: fd_step must be positive");
    }
    if (max_iterations < 1) {
        throw std::invalid_argument("EstimatorConfig: max_iterations must be >= 1");
    }
    if (!bounds.empty() && bounds.size() != 1 && bounds.size() != dim) {
        throw std::invalid_argument("EstimatorConfig: bounds must be empty, one pair, or one "
                                    "pair per parameter");
    }
}

std::vector<double> fd_gradient(const Objective &objective, std::span<const double> theta,
                                const EstimatorConfig &cfg, const WorkerPool &pool) {
    const std::size_t q = theta.size();
    std::vector<double> plus(q), minus(q);
    pool.for_index(2 * q, [&](std::size_t probe) {
        const std::size_t j = probe / 2;
        const double sign = (probe % 2 == 0) ? 1.0 : -1.0;
        const double delta = cfg.fd_step * std::max(std::abs(theta[j]), cfg.theta_scale_floor);
        std::vector<double> probe_theta(theta.begin(), theta.end());
        probe_theta[j] += sign * delta;
        (sign > 0 ? plus : minus)[j] = objective(probe_theta);
    });
    std::vector<double> grad(q);
    for (std::size_t j = 0; j < q; ++j) {
        const double delta = cfg.fd_step * std::max(std::abs(theta[j]), cfg.theta_scale_floor);
        grad[j] = (plus[j] - minus[j]) / (2.0 * delta);
    }
    return grad;
}

namespace {

void project_bounds(std::vector<double> &theta, const std::vector<std::pair<double, double>> &b) {
    if (b.empty()) {
        return;
    }
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const auto &[lo, hi] = b.size() == 1 ? b[0] : b[j];
        theta[j] = std::clamp(theta[j], lo, hi);
    }
}

bool vec_finite(const std::vector<double> &v) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

} // namespace

EstimationReport adam_minimize(const Objective &objective, std::vector<double> theta0,
                               const EstimatorConfig &cfg, const WorkerPool &pool) {
    const std::size_t q = theta0.size();
    cfg.validate(q);
    if (q == 0) {
        throw std::invalid_argument("adam_minimize: empty parameter vector");
    }

    // Per-parameter step scale: normalization by initialization magnitude.
    std::vector<double> scale(q);
    for (std::size_t j = 0; j < q; ++j) {
        scale[j] = std::max(std::abs(theta0[j]), cfg.theta_scale_floor);
    }

    EstimationReport report;
    std::vector<double> theta = std::move(theta0);
    project_bounds(theta, cfg.bounds);
    std::vector<double> m1(q, 0.0), m2(q, 0.0);
    int small_steps = 0;

    for (int k = 1; k <= cfg.max_iterations; ++k) {
        const double value = objective(theta);
        if (!std::isfinite(value)) {
            report.aborted_non_finite = true;
            break;
        }
        report.thetas.push_back(theta);
        report.losses.push_back(value);

        const std::vector<double> grad = fd_gradient(objective, theta, cfg, pool);
        if (!vec_finite(grad)) {
            report.aborted_non_finite = true;
            break;
        }

        double step_norm2 = 0.0;
        const double bc1 = 1.0 - std::pow(cfg.beta1, k);
        const double bc2 = 1.0 - std::pow(cfg.beta2, k);
        for (std::size_t j = 0; j < q; ++j) {
            m1[j] = cfg.beta1 * m1[j] + (1.0 - cfg.beta1) * grad[j];
            m2[j] = cfg.beta2 * m2[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
            const double mhat = m1[j] / bc1;
            const double vhat = m2[j] / bc2;
            const double step =
                cfg.learning_rate * scale[j] * mhat / (std::sqrt(vhat) + cfg.epsilon_stability);
            theta[j] -= step;
            step_norm2 += step * step;
        }
        project_bounds(theta, cfg.bounds);

        if (std::sqrt(step_norm2) < cfg.step_tolerance) {
            if (++small_steps >= 5) {
                break;
            }
        } else {
            small_steps = 0;
        }
    }

    report.final_theta = report.aborted_non_finite && !report.thetas.empty()
                             ? report.thetas.back()
                             : theta;
    if (report.thetas.empty()) {
        // Nothing evaluated cleanly; report the starting point as-is.
        report.final_theta = theta;
    }
    return report;
}

NoiseModel LossFixture::instantiate(std::span<const double> theta) const {
    const std::size_t q = model_template.parameter_count();
    if (theta.size() != dimension()) {
        throw std::invalid_argument("loss: theta has wrong dimension");
    }
    NoiseModel m = model_template;
    m.theta.assign(theta.begin(), theta.begin() + q);
    if (width_free) {
        m.tau = theta[q];
    }
    m.validate();
    return m;
}

std::size_t LossFixture::dimension() const {
    return model_template.parameter_count() + (width_free ? 1 : 0);
}

double loss(std::span<const double> theta, const LossFixture &fixture) {
    const NoiseModel model = fixture.instantiate(theta);
    const MomentState ms0(fixture.s0.m, fixture.s0.image, 0.0);
    const MomentState end = integrate_moments(ms0, model, fixture.spec, fixture.steps);
    return similarity_distance(fixture.similarity, end.mean_image, fixture.empirical_mean);
}

Objective make_loss_objective(const LossFixture &fixture) {
    return [&fixture](std::span<const double> theta) -> double {
        try {
            return loss(theta, fixture);
        } catch (const blowup_error &) {
            return std::numeric_limits<double>::infinity();
        } catch (const std::invalid_argument &) {
            // e.g. a width probe crossing zero; treat as infeasible
            return std::numeric_limits<double>::infinity();
        }
    };
}

void ControlPointMomentum::validate() const {
    if (points.empty() || points.size() != momenta.size()) {
        throw std::invalid_argument("ControlPointMomentum: need equally many points and momenta");
    }
    for (const auto &[x, y] : points) {
        if (!(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0)) {
            throw std::invalid_argument("ControlPointMomentum: points must lie inside (0,1)^2");
        }
    }
}

VectorField rasterize_control_points(const ControlPointMomentum &cp, const Grid &grid) {
    cp.validate();
    VectorField m0(grid);
    const double inv_area = 1.0 / (grid.hx() * grid.hy());
    for (std::size_t c = 0; c < cp.points.size(); ++c) {
        const int i = std::clamp(static_cast<int>(std::lround(cp.points[c].first / grid.hx())), 0,
                                 grid.nx - 1);
        const int j = std::clamp(static_cast<int>(std::lround(cp.points[c].second / grid.hy())),
                                 0, grid.ny - 1);
        m0.x[grid.idx(i, j)] += cp.momenta[c].first * inv_area;
        m0.y[grid.idx(i, j)] += cp.momenta[c].second * inv_area;
    }
    return m0;
}

std::pair<VectorField, EstimationReport>
register_shooting(const ScalarField &source, const ScalarField &target,
                  const ControlPointMomentum &init, const KernelSpec &spec, double lambda,
                  int steps, const EstimatorConfig &cfg, const WorkerPool &pool) {
    if (source.grid != target.grid) {
        throw shape_error("register_shooting: source and target grids differ");
    }
    init.validate();
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("register_shooting: lambda must be positive");
    }
    const Grid grid = source.grid;
    const std::vector<std::pair<double, double>> points = init.points;
    const double mismatch_weight = 1.0 / (2.0 * lambda * lambda);

    Objective objective = [&](std::span<const double> theta) -> double {
        ControlPointMomentum cp;
        cp.points = points;
        cp.momenta.reserve(points.size());
        for (std::size_t c = 0; c < points.size(); ++c) {
            cp.momenta.emplace_back(theta[2 * c], theta[2 * c + 1]);
        }
        const VectorField m0 = rasterize_control_points(cp, grid);
        try {
            const State end = integrate_deterministic(State(m0, source, 0.0), spec, steps);
            return 0.5 * kinetic_energy(m0, spec) + mismatch_weight * ssd(end.image, target);
        } catch (const blowup_error &) {
            return std::numeric_limits<double>::infinity();
        }
    };

    std::vector<double> theta0;
    theta0.reserve(2 * points.size());
    for (const auto &[px, py] : init.momenta) {
        theta0.push_back(px);
        theta0.push_back(py);
    }

    EstimationReport report = adam_minimize(objective, std::move(theta0), cfg, pool);
    if (report.losses.empty()) {
        throw blowup_error("register_shooting: shooting blew up at the initial momenta", 0);
    }

    ControlPointMomentum best;
    best.points = points;
    for (std::size_t c = 0; c < points.size(); ++c) {
        best.momenta.emplace_back(report.final_theta[2 * c], report.final_theta[2 * c + 1]);
    }
    return {rasterize_control_points(best, grid), std::move(report)};
}

} // namespace sepda
