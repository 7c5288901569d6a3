#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sepda/moments.hpp"
#include "sepda/parallel.hpp"
#include "sepda/sde.hpp"

namespace sepda {

class degenerate_similarity_error : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

enum class Similarity { ssd, ncc };

/// Squared L2 distance |a - b|^2 under the trapezoidal pairing.
double ssd(const ScalarField &a, const ScalarField &b);

/// 1 - NCC^2 with NCC = <a,b> / (|a| |b|); invariant under rescaling of
/// either argument. Throws degenerate_similarity_error on a zero field.
double ncc_distance(const ScalarField &a, const ScalarField &b);

double similarity_distance(Similarity kind, const ScalarField &a, const ScalarField &b);

struct EstimatorConfig {
    Similarity similarity = Similarity::ncc;
    double learning_rate = 1e-3; // on normalized parameters, see adam_minimize
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon_stability = 1e-8;
    int max_iterations = 100;
    double fd_step = 1e-2;
    double step_tolerance = 1e-9;
    double theta_scale_floor = 1e-4;
    /// Optional projection box per parameter; a single entry applies to all.
    std::vector<std::pair<double, double>> bounds;

    void validate(std::size_t dim) const;
};

struct EstimationReport {
    std::vector<std::vector<double>> thetas; // theta at the start of each iteration
    std::vector<double> losses;              // loss at the same points
    std::vector<double> final_theta;
    std::optional<double> relative_error; // |theta0 - theta_hat| / |theta0| when truth known
    bool aborted_non_finite = false;

    int iterations() const { return static_cast<int>(losses.size()); }
};

/// Any callable loss; probes must be safe to evaluate concurrently.
using Objective = std::function<double(std::span<const double>)>;

/// Central finite differences, step_j = fd_step * max(|theta_j|, floor).
/// The 2q probes fan out over the pool and are reassembled by index.
std::vector<double> fd_gradient(const Objective &objective, std::span<const double> theta,
                                const EstimatorConfig &cfg,
                                const WorkerPool &pool = WorkerPool(1));

/// Adaptive-moment descent with bias correction. Parameters are normalized
/// by their initialization magnitude (floored), i.e. the effective step of
/// parameter j is learning_rate * max(|theta0_j|, floor). Iterates are
/// projected onto the bounds when given; stops after max_iterations or once
/// |theta_{k+1} - theta_k| stays below step_tolerance for 5 consecutive
/// iterations. A non-finite loss aborts with the last good theta recorded.
EstimationReport adam_minimize(const Objective &objective, std::vector<double> theta0,
                               const EstimatorConfig &cfg, const WorkerPool &pool = WorkerPool(1));

/// Everything fixed about a moment-matching problem except theta.
struct LossFixture {
    State s0;
    NoiseModel model_template; // theta replaced per evaluation
    bool width_free = false;   // when set, theta carries tau as its last entry
    KernelSpec spec;
    int steps = 32;
    ScalarField empirical_mean;
    Similarity similarity = Similarity::ncc;

    NoiseModel instantiate(std::span<const double> theta) const;
    std::size_t dimension() const;
};

/// d( endpoint of the moment equations under theta, empirical mean ).
/// Propagates blowup_error from the moment integration.
double loss(std::span<const double> theta, const LossFixture &fixture);

/// The same loss wrapped for optimization: a blow-up evaluates to +infinity
/// so the optimizer's non-finite handling can abort or step around it.
Objective make_loss_objective(const LossFixture &fixture);

/// Low-dimensional momentum parametrization for shooting registration: one
/// point momentum per control point, rasterized as a nearest-node impulse
/// scaled by 1/(hx hy).
struct ControlPointMomentum {
    std::vector<std::pair<double, double>> points;
    std::vector<std::pair<double, double>> momenta;

    void validate() const;
};

VectorField rasterize_control_points(const ControlPointMomentum &cp, const Grid &grid);

/// Shooting registration of I0 onto T over the control-point momenta:
/// minimizes kinetic_energy(m0)/2 + ssd(I1(m0), T)/(2 lambda^2). Returns the
/// rasterized optimal m0 and the optimizer report.
std::pair<VectorField, EstimationReport>
register_shooting(const ScalarField &source, const ScalarField &target,
                  const ControlPointMomentum &init, const KernelSpec &spec, double lambda,
                  int steps, const EstimatorConfig &cfg, const WorkerPool &pool = WorkerPool(1));

} // namespace sepda
