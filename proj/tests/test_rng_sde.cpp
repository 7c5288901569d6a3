#include "doctest.h"

#include <cmath>

#include "sepda/rng.hpp"
#include "sepda/sde.hpp"
#include "sepda/synth.hpp"
#include "test_helpers.hpp"

using namespace sepda;
using namespace sepda_test;

namespace {

KernelSpec test_kernel() { return KernelSpec{{{0.7, 0.08}, {0.3, 0.16}}}; }

State small_state(const Grid &g) {
    auto m = make_vector(g, [](double x, double y) { return 0.2 * bump(x, y, 0.45, 0.5, 0.12); },
                         [](double x, double y) { return -0.1 * bump(x, y, 0.55, 0.5, 0.1); });
    auto img = make_scalar(g, [](double x, double y) { return bump(x, y, 0.5, 0.5, 0.15); });
    return State(std::move(m), std::move(img), 0.0);
}

} // namespace

TEST_SUITE("rng") {

TEST_CASE("streams are deterministic and distinct") {
    NormalStream a(42, 0), b(42, 0), c(42, 1), d(43, 0);
    bool all_equal_c = true, all_equal_d = true;
    for (int i = 0; i < 100; ++i) {
        const double va = a.next();
        CHECK(va == b.next());
        all_equal_c &= (va == c.next());
        all_equal_d &= (va == d.next());
    }
    CHECK_FALSE(all_equal_c);
    CHECK_FALSE(all_equal_d);
}

TEST_CASE("draws look standard normal") {
    NormalStream s(2024, 7);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = s.next();
        sum += z;
        sum2 += z * z;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

} // TEST_SUITE

TEST_SUITE("sepda_sde") {

TEST_CASE("scalar Heun step expands to the Stratonovich polynomial") {
    const double x = 1.7, b = 0.45, dw = 0.21;
    const double expected = x * (1.0 + b * dw + 0.5 * b * b * dw * dw);
    CHECK(heun_scalar_step(x, b, dw) == doctest::Approx(expected).epsilon(1e-15));
    CHECK(euler_maruyama_scalar_step(x, b, dw) == doctest::Approx(x * (1 + b * dw)));
}

TEST_CASE("scalar surrogate obeys the Stratonovich mean law, Ito variant fails it") {
    const double b = 0.3;
    const int steps = 64;
    const int paths = 100000;
    const double dt = 1.0 / steps;
    const double sqrt_dt = std::sqrt(dt);

    double sum_heun = 0.0, sum_ito = 0.0, sum2_heun = 0.0;
    for (int p = 0; p < paths; ++p) {
        NormalStream rng(99, p);
        double xh = 1.0, xi = 1.0;
        for (int s = 0; s < steps; ++s) {
            const double dw = sqrt_dt * rng.next();
            xh = heun_scalar_step(xh, b, dw);
            xi = euler_maruyama_scalar_step(xi, b, dw);
        }
        sum_heun += xh;
        sum_ito += xi;
        sum2_heun += xh * xh;
    }
    const double mean_heun = sum_heun / paths;
    const double mean_ito = sum_ito / paths;
    const double se = std::sqrt((sum2_heun / paths - mean_heun * mean_heun) / paths);
    const double strat_mean = std::exp(0.5 * b * b); // X0 e^{b^2/2} = 1.046
    CHECK(std::abs(mean_heun - strat_mean) < 3.0 * se);
    // The Ito integrator must land near X0 = 1 instead.
    CHECK(std::abs(mean_ito - 1.0) < 3.0 * se);
    CHECK(std::abs(mean_ito - strat_mean) > 3.0 * se);
}

TEST_CASE("stratonovich_drift shares the deterministic code path") {
    const Grid g(33, 33);
    const KernelSpec spec = test_kernel();
    const State s = small_state(g);
    const auto [dm, di] = stratonovich_drift(s, spec);
    const VectorField dm_ref = epdiff_rhs(s, spec);
    const ScalarField di_ref = advection_rhs(s, spec);
    CHECK(dm.x == dm_ref.x); // 0 ulp: same functions evaluate both
    CHECK(dm.y == dm_ref.y);
    CHECK(di.v == di_ref.v);

    const State zero_m(VectorField(g), s.image, 0.0);
    const auto [dm0, di0] = stratonovich_drift(zero_m, spec);
    CHECK(max_abs(dm0) == 0.0);
    CHECK(max_abs(di0) == 0.0);
}

TEST_CASE("diffusion_term closed forms") {
    const Grid g(25, 25);
    const State s = small_state(g);

    // sigma = 0.
    const NoiseFieldSet zero_set =
        NoiseFieldSet::from_model(NoiseModel::gaussian({{0.5, 0.5}}, 0.1, {0.0}), g);
    const auto [bm0, bi0] = diffusion_term(s, zero_set, 0);
    CHECK(max_abs(bm0) == 0.0);
    CHECK(max_abs(bi0) == 0.0);

    // m = 0 and constant image.
    ScalarField const_img(g);
    std::fill(const_img.v.begin(), const_img.v.end(), 2.0);
    const State trivial(VectorField(g), const_img, 0.0);
    ScalarField cprof(g);
    std::fill(cprof.v.begin(), cprof.v.end(), 1.0);
    const NoiseFieldSet const_e1 = NoiseFieldSet::from_profiles(g, {{cprof, 0}});
    const auto [bm1, bi1] = diffusion_term(trivial, const_e1, 0);
    CHECK(max_abs(bm1) == 0.0);
    CHECK(max_abs(bi1) == 0.0);

    // Constant sigma = e1 against I = x gives dI noise coefficient -1.
    const auto img_x = make_scalar(g, [](double x, double) { return x; });
    const State lin(VectorField(g), img_x, 0.0);
    const auto [bm2, bi2] = diffusion_term(lin, const_e1, 0);
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(bi2.v[k] == doctest::Approx(-1.0).epsilon(1e-12));
    }
    CHECK(max_abs(bm2) == 0.0);
}

TEST_CASE("heun_step with zero noise is a deterministic Heun step") {
    const Grid g(25, 25);
    const KernelSpec spec = test_kernel();
    const State s = small_state(g);
    const double dt = 1.0 / 16;

    NoiseFieldSet empty;
    empty.grid = g;
    const State stepped = heun_step(s, empty, spec, dt, {});

    // Manual two-stage Heun from the public drift.
    const auto [a1m, a1i] = stratonovich_drift(s, spec);
    State pred = s;
    for (std::size_t k = 0; k < g.size(); ++k) {
        pred.m.x[k] = s.m.x[k] + dt * a1m.x[k];
        pred.m.y[k] = s.m.y[k] + dt * a1m.y[k];
        pred.image.v[k] = s.image.v[k] + dt * a1i.v[k];
    }
    const auto [a2m, a2i] = stratonovich_drift(pred, spec);
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(stepped.m.x[k] ==
              doctest::Approx(s.m.x[k] + 0.5 * dt * (a1m.x[k] + a2m.x[k])).epsilon(1e-14));
        CHECK(stepped.image.v[k] ==
              doctest::Approx(s.image.v[k] + 0.5 * dt * (a1i.v[k] + a2i.v[k])).epsilon(1e-14));
    }
    CHECK(stepped.t == doctest::Approx(s.t + dt));
}

TEST_CASE("heun_step matches the composed predictor-corrector for live noise") {
    const Grid g(25, 25);
    const KernelSpec spec = test_kernel();
    const State s = small_state(g);
    const NoiseModel model = NoiseModel::gaussian({{0.45, 0.5}, {0.6, 0.55}}, 0.12, {0.03, 0.05});
    const NoiseFieldSet noise = NoiseFieldSet::from_model(model, g);
    const std::vector<double> dw{0.08, -0.05, 0.02, 0.11};
    const double dt = 1.0 / 32;

    const State got = heun_step(s, noise, spec, dt, dw);

    auto add_noise = [&](const State &at, VectorField &bm, ScalarField &bi) {
        for (int alpha = 0; alpha < noise.field_count(); ++alpha) {
            const auto [bma, bia] = diffusion_term(at, noise, alpha);
            for (std::size_t k = 0; k < g.size(); ++k) {
                bm.x[k] += dw[alpha] * bma.x[k];
                bm.y[k] += dw[alpha] * bma.y[k];
                bi.v[k] += dw[alpha] * bia.v[k];
            }
        }
    };

    const auto [a1m, a1i] = stratonovich_drift(s, spec);
    VectorField b1m(g);
    ScalarField b1i(g);
    add_noise(s, b1m, b1i);
    State pred = s;
    for (std::size_t k = 0; k < g.size(); ++k) {
        pred.m.x[k] = s.m.x[k] + dt * a1m.x[k] + b1m.x[k];
        pred.m.y[k] = s.m.y[k] + dt * a1m.y[k] + b1m.y[k];
        pred.image.v[k] = s.image.v[k] + dt * a1i.v[k] + b1i.v[k];
    }
    const auto [a2m, a2i] = stratonovich_drift(pred, spec);
    VectorField b2m(g);
    ScalarField b2i(g);
    add_noise(pred, b2m, b2i);

    for (std::size_t k = 0; k < g.size(); ++k) {
        const double want_mx =
            s.m.x[k] + 0.5 * dt * (a1m.x[k] + a2m.x[k]) + 0.5 * (b1m.x[k] + b2m.x[k]);
        const double want_i =
            s.image.v[k] + 0.5 * dt * (a1i.v[k] + a2i.v[k]) + 0.5 * (b1i.v[k] + b2i.v[k]);
        CHECK(got.m.x[k] == doctest::Approx(want_mx).epsilon(1e-12));
        CHECK(got.image.v[k] == doctest::Approx(want_i).epsilon(1e-12));
    }
}

TEST_CASE("zero-amplitude sampling collapses to deterministic Heun bitwise") {
    const Grid g(25, 25);
    const KernelSpec spec = test_kernel();
    const State s0 = small_state(g);
    const NoiseModel model =
        NoiseModel::gaussian(hexagonal_lattice_14(), std::sqrt(0.008),
                             std::vector<double>(14, 0.0));
    SdeConfig cfg;
    cfg.steps = 12;
    cfg.n_samples = 3;
    cfg.base_seed = 555;
    const SampleSet set = sample_endpoints(s0, model, spec, cfg);
    const State det = integrate_heun(s0, spec, cfg.steps);
    for (const ScalarField &img : set.images) {
        CHECK(img.v == det.image.v);
    }
}

TEST_CASE("sampling is reproducible and worker-count independent") {
    const Grid g(17, 17);
    const KernelSpec spec = test_kernel();
    const State s0 = small_state(g);
    const NoiseModel model = NoiseModel::gaussian({{0.5, 0.5}}, 0.12, {0.02});
    SdeConfig cfg;
    cfg.steps = 8;
    cfg.n_samples = 6;
    cfg.base_seed = 777;
    cfg.store_momenta = true;

    const SampleSet a = sample_endpoints(s0, model, spec, cfg);
    const SampleSet b = sample_endpoints(s0, model, spec, cfg);
    const SampleSet c = sample_endpoints(s0, model, spec, cfg, WorkerPool(3));
    REQUIRE(a.images.size() == 6);
    for (std::size_t i = 0; i < a.images.size(); ++i) {
        CHECK(a.images[i].v == b.images[i].v);
        CHECK(a.images[i].v == c.images[i].v);
        CHECK(a.momenta[i].x == c.momenta[i].x);
    }
    CHECK(a.config_digest == c.config_digest);
    CHECK(a.model_digest == c.model_digest);
}

TEST_CASE("endpoint variance scales quadratically in the amplitude") {
    const Grid g(17, 17);
    const KernelSpec spec = test_kernel();
    const State s0 = small_state(g);
    SdeConfig cfg;
    cfg.steps = 12;
    cfg.n_samples = 48;
    cfg.base_seed = 31;

    auto pixel_variance = [&](double amp) {
        const NoiseModel model = NoiseModel::gaussian({{0.5, 0.5}}, 0.15, {amp});
        const SampleSet set = sample_endpoints(s0, model, spec, cfg);
        const ScalarField mean = set.mean_image();
        double var = 0.0;
        for (const ScalarField &img : set.images) {
            for (std::size_t k = 0; k < mean.v.size(); ++k) {
                var += (img.v[k] - mean.v[k]) * (img.v[k] - mean.v[k]);
            }
        }
        return var / static_cast<double>(set.images.size());
    };

    const double a = 0.02;
    const double ratio = pixel_variance(a) / pixel_variance(a / 2);
    CHECK(ratio >= 3.2);
    CHECK(ratio <= 4.8);
}

TEST_CASE("blow-up during sampling names the sample and step") {
    const Grid g(16, 16);
    const KernelSpec spec{{{1.0, 0.06}}};
    auto m = make_vector(g, [](double x, double y) { return 1e160 * bump(x, y, 0.5, 0.5, 0.1); },
                         [](double, double) { return 0.0; });
    const State s0(std::move(m), make_scalar(g, [](double x, double) { return x; }), 0.0);
    const NoiseModel model = NoiseModel::gaussian({{0.5, 0.5}}, 0.1, {0.01});
    SdeConfig cfg;
    cfg.steps = 4;
    cfg.n_samples = 2;
    try {
        sample_endpoints(s0, model, spec, cfg);
        FAIL("expected blowup_error");
    } catch (const blowup_error &e) {
        CHECK(e.sample >= 0);
        CHECK(e.step >= 0);
        CHECK(std::string(e.what()).find("sample") != std::string::npos);
    }
}

} // TEST_SUITE
