#include "doctest.h"

#include <cmath>
#include <numbers>

#include "sepda/field_ops.hpp"
#include "sepda/noise.hpp"
#include "test_helpers.hpp"

using namespace sepda;
using namespace sepda_test;

namespace {

// Sine coefficients of f(x,y) = x y^2 (1-x)(1-y) cos(5x) cos(5y) for
// 1 <= n,m <= 4, frozen from a high-precision adaptive quadrature of the
// separated 1D factors (mpmath, 30 digits).
constexpr double kSineFCoeffs[16] = {
    0.011177540722,    -0.00807677259263,  -0.00253749481661,  0.0026096529119,
    -0.0088222889796,  0.00637489261789,   0.00200281198818,   -0.00205976544375,
    -0.00633640046058, 0.00457861589136,   0.00143847235493,   -0.00147937782775,
    0.000852403649443, -0.000615937852961, -0.000193510352225, 0.000199013156938};

double sine_f(double x, double y) {
    return x * y * y * (1.0 - x) * (1.0 - y) * std::cos(5.0 * x) * std::cos(5.0 * y);
}

} // namespace

TEST_SUITE("noise_models") {

TEST_CASE("square lattice layout") {
    const auto single = square_lattice(1, 1);
    REQUIRE(single.size() == 1);
    CHECK(single[0].first == doctest::Approx(0.5));
    CHECK(single[0].second == doctest::Approx(0.5));

    const auto l44 = square_lattice(4, 4);
    REQUIRE(l44.size() == 16);
    CHECK(l44.front().first == doctest::Approx(0.2));
    CHECK(l44.front().second == doctest::Approx(0.2));
    CHECK(l44.back().first == doctest::Approx(0.8));
    CHECK(l44.back().second == doctest::Approx(0.8));

    const auto l33 = square_lattice(3, 3);
    REQUIRE(l33.size() == 9);
    for (const auto &[x, y] : l33) {
        CHECK(std::fmod(x, 0.25) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(std::fmod(y, 0.25) == doctest::Approx(0.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(square_lattice(0, 3), std::invalid_argument);
}

TEST_CASE("hexagonal lattice: 14 points, centered, inside the domain") {
    const auto hex = hexagonal_lattice_14();
    REQUIRE(hex.size() == 14);
    double cx = 0.0, cy = 0.0;
    for (const auto &[x, y] : hex) {
        CHECK(x > 0.0);
        CHECK(x < 1.0);
        CHECK(y > 0.0);
        CHECK(y < 1.0);
        cx += x;
        cy += y;
    }
    CHECK(cx / 14 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(cy / 14 == doctest::Approx(0.5).epsilon(1e-12));
    // Row structure 3-4-4-3 from the top.
    CHECK(hex[0].second == doctest::Approx(0.8));
    CHECK(hex[3].second == doctest::Approx(0.6));
    CHECK(hex[7].second == doctest::Approx(0.4));
    CHECK(hex[11].second == doctest::Approx(0.2));
}

TEST_CASE("gaussian noise field peaks at its center with amplitude lambda") {
    // 43 nodes put the 2x2 lattice centers (thirds) onto grid nodes.
    const Grid g(43, 43);
    auto centers = square_lattice(2, 2);
    std::vector<double> theta{0.02, 0.03, 0.04, 0.05};
    const NoiseModel model = NoiseModel::gaussian(centers, 0.1, theta);
    REQUIRE(model.field_count() == 8);

    for (int shape = 0; shape < 4; ++shape) {
        const VectorField f1 = eval_noise_field(model, 2 * shape, g);
        const VectorField f2 = eval_noise_field(model, 2 * shape + 1, g);
        const auto [cx, cy] = centers[shape];
        const int ci = static_cast<int>(std::lround(cx / g.hx()));
        const int cj = static_cast<int>(std::lround(cy / g.hy()));
        CHECK(f1.x[g.idx(ci, cj)] == doctest::Approx(theta[shape]).epsilon(1e-12));
        CHECK(f2.y[g.idx(ci, cj)] == doctest::Approx(theta[shape]).epsilon(1e-12));
        CHECK(max_abs_diff(f1.y, std::vector<double>(g.size(), 0.0)) == 0.0);
        CHECK(max_abs_diff(f2.x, std::vector<double>(g.size(), 0.0)) == 0.0);
    }
    CHECK_THROWS_AS(eval_noise_field(model, 8, g), std::out_of_range);
}

TEST_CASE("cubic B-spline profile: center value and compact support") {
    CHECK(bspline3(0.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(bspline3(2.0) == 0.0);
    CHECK(bspline3(-2.5) == 0.0);
    CHECK(bspline3(1.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));

    const Grid g(61, 61);
    const double tau = 0.12;
    const NoiseModel model = NoiseModel::bspline({{0.5, 0.5}}, tau, {0.8});
    const VectorField f = eval_noise_field(model, 0, g);
    CHECK(f.x[g.idx(30, 30)] == doctest::Approx(0.8 * 2.0 / 3.0).epsilon(1e-12));
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            const double r = std::hypot(g.x(i) - 0.5, g.y(j) - 0.5);
            if (r >= 2.0 * tau) {
                CHECK(f.x[g.idx(i, j)] == 0.0);
            }
        }
    }
}

TEST_CASE("sinusoidal field values") {
    const Grid g(33, 33);
    std::vector<double> theta(4, 0.0); // q = 2
    theta[0] = 0.7;                    // c_11
    const NoiseModel model = NoiseModel::sinusoidal(2, theta);
    REQUIRE(model.field_count() == 8);
    const VectorField f = eval_noise_field(model, 1, g); // (n,m) = (1,1), e2
    CHECK(f.y[g.idx(16, 16)] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(max_abs_diff(f.x, std::vector<double>(g.size(), 0.0)) == 0.0);
    // Vanishes on the boundary.
    for (int i = 0; i < g.nx; ++i) {
        CHECK(f.y[g.idx(i, 0)] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(f.y[g.idx(i, g.ny - 1)] == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("noise fields are linear in theta") {
    const Grid g(33, 33);
    const auto centers = hexagonal_lattice_14();
    const auto theta = ground_truth_amplitudes(NoiseFamily::gaussian_lattice, 14);
    const NoiseModel model = NoiseModel::gaussian(centers, std::sqrt(0.008), theta);
    std::vector<double> doubled(theta);
    for (double &t : doubled) {
        t *= 2.0;
    }
    const NoiseModel model2 = model.with_theta(doubled);
    for (int alpha = 0; alpha < model.field_count(); alpha += 5) {
        const VectorField f = eval_noise_field(model, alpha, g);
        const VectorField f2 = eval_noise_field(model2, alpha, g);
        for (std::size_t k = 0; k < g.size(); ++k) {
            CHECK(f2.x[k] == 2.0 * f.x[k]);
            CHECK(f2.y[k] == 2.0 * f.y[k]);
        }
    }
}

TEST_CASE("paired fields share the profile on orthogonal directions") {
    const Grid g(25, 25);
    const NoiseModel model = NoiseModel::gaussian({{0.4, 0.6}}, 0.09, {0.5});
    const VectorField f1 = eval_noise_field(model, 0, g);
    const VectorField f2 = eval_noise_field(model, 1, g);
    CHECK(f1.x == f2.y);
    CHECK(max_abs_diff(f1.y, std::vector<double>(g.size(), 0.0)) == 0.0);
    CHECK(max_abs_diff(f2.x, std::vector<double>(g.size(), 0.0)) == 0.0);
}

TEST_CASE("norm_field: zeros, single profile, pythagorean pair") {
    const Grid g(33, 33);
    const NoiseModel zero = NoiseModel::gaussian({{0.5, 0.5}}, 0.1, {0.0});
    CHECK(max_abs(norm_field(zero, g)) == 0.0);

    // A single e1 field via the explicit profile constructor.
    const auto profile =
        make_scalar(g, [](double x, double y) { return 0.6 * bump(x, y, 0.5, 0.5, 0.1); });
    const NoiseFieldSet single = NoiseFieldSet::from_profiles(g, {{profile, 0}});
    const ScalarField n1 = norm_field(single);
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(n1.v[k] == doctest::Approx(std::abs(profile.v[k])).epsilon(1e-14));
    }

    // The paired model doubles up the same profile on e1 and e2.
    const NoiseModel pair = NoiseModel::gaussian({{0.5, 0.5}}, 0.1, {0.6});
    const ScalarField n2 = norm_field(pair, g);
    const VectorField f = eval_noise_field(pair, 0, g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(n2.v[k] ==
              doctest::Approx(std::abs(f.x[k]) * std::numbers::sqrt2).epsilon(1e-12));
    }
}

TEST_CASE("sine_coefficients recovers an exact mode and annihilates zero") {
    const Grid g(257, 257);
    const auto mode = make_scalar(g, [](double x, double y) {
        return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
    });
    const auto coeffs = sine_coefficients(mode, 3);
    REQUIRE(coeffs.size() == 9);
    CHECK(coeffs[0] == doctest::Approx(1.0).epsilon(1e-6));
    for (std::size_t k = 1; k < coeffs.size(); ++k) {
        CHECK(std::abs(coeffs[k]) < 1e-6);
    }

    const ScalarField zero(g);
    for (double c : sine_coefficients(zero, 2)) {
        CHECK(c == 0.0);
    }
}

TEST_CASE("sine_coefficients of the reference function match the quadrature oracle") {
    const auto coeffs = sine_coefficients(sine_f, 4);
    REQUIRE(coeffs.size() == 16);
    for (int k = 0; k < 16; ++k) {
        CHECK(coeffs[k] ==
              doctest::Approx(kSineFCoeffs[k]).epsilon(1e-4)); // 4 significant digits
    }
}

TEST_CASE("reference amplitudes follow the formula") {
    const auto gauss = ground_truth_amplitudes(NoiseFamily::gaussian_lattice, 14);
    REQUIRE(gauss.size() == 14);
    CHECK(gauss[0] == doctest::Approx(0.005 + 0.000625 * (1.0 + 2.0 * std::sin(1.0)))
                          .epsilon(1e-15));
    CHECK(gauss[0] == doctest::Approx(0.00667683873100987).epsilon(1e-12));

    const auto bspl = ground_truth_amplitudes(NoiseFamily::bspline_lattice, 14);
    for (int i = 0; i < 14; ++i) {
        CHECK(bspl[i] == doctest::Approx(gauss[i] / 5.0).epsilon(1e-15));
        // |sin| <= 1 envelope
        CHECK(gauss[i] >= 0.005 + 0.000625 * ((i + 1) - 2.0));
        CHECK(gauss[i] <= 0.005 + 0.000625 * ((i + 1) + 2.0));
    }
}

TEST_CASE("model validation rejects malformed declarations") {
    CHECK_THROWS_AS(NoiseModel::gaussian({{0.5, 0.5}}, -0.1, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(NoiseModel::gaussian({{1.5, 0.5}}, 0.1, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(NoiseModel::gaussian({{0.5, 0.5}}, 0.1, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(NoiseModel::sinusoidal(0, {}), std::invalid_argument);
}

TEST_CASE("NoiseFieldSet reproduces the closed-form fields") {
    const Grid g(49, 49);
    const NoiseModel model =
        NoiseModel::bspline(hexagonal_lattice_14(), 0.15,
                            ground_truth_amplitudes(NoiseFamily::bspline_lattice, 14));
    const NoiseFieldSet set = NoiseFieldSet::from_model(model, g);
    REQUIRE(set.field_count() == 28);
    for (int alpha : {0, 7, 13, 27}) {
        const VectorField direct = eval_noise_field(model, alpha, g);
        const VectorField from_set = set.field(alpha);
        CHECK(max_abs_diff(direct.x, from_set.x) == 0.0);
        CHECK(max_abs_diff(direct.y, from_set.y) == 0.0);
    }
    // Support boxes contain every nonzero node.
    for (const NoiseProfile &p : set.profiles) {
        for (int i = 0; i < g.nx; ++i) {
            for (int j = 0; j < g.ny; ++j) {
                if (p.psi[g.idx(i, j)] != 0.0) {
                    CHECK(i >= p.i0);
                    CHECK(i < p.i1);
                    CHECK(j >= p.j0);
                    CHECK(j < p.j1);
                }
            }
        }
    }
}

} // TEST_SUITE
