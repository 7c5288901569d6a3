#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sepda/config.hpp"
#include "sepda/io.hpp"
#include "test_helpers.hpp"

using namespace sepda;
using namespace sepda_test;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "sepda_io_test";
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_SUITE("io") {

TEST_CASE("SEPDA-F32 scalar round trip and header layout") {
    const Grid g(12, 9);
    const auto f = make_scalar(g, [](double x, double y) { return 3.5 * x - y * y; });
    const fs::path path = temp_dir() / "scalar.sepda";
    write_field(path, f);

    // Header bytes: magic, then little-endian nx, ny, n_components.
    std::ifstream in(path, std::ios::binary);
    char magic[8];
    in.read(magic, 8);
    CHECK(std::string(magic, 8) == "SEPDAF32");
    unsigned char b[12];
    in.read(reinterpret_cast<char *>(b), 12);
    CHECK((b[0] | (b[1] << 8)) == 12);
    CHECK((b[4] | (b[5] << 8)) == 9);
    CHECK(b[8] == 1);
    CHECK(fs::file_size(path) == 8 + 12 + 4u * g.size());

    const ScalarField back = read_scalar_field(path);
    CHECK(back.grid == g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(back.v[k] == doctest::Approx(f.v[k]).epsilon(1e-6)); // float32 storage
    }
    CHECK(field_components(path) == 1);
    CHECK_THROWS(read_vector_field(path));
}

TEST_CASE("SEPDA-F32 vector round trip") {
    const Grid g(8, 8);
    const auto v = make_vector(g, [](double x, double y) { return x - y; },
                               [](double x, double y) { return x * y; });
    const fs::path path = temp_dir() / "vector.sepda";
    write_field(path, v);
    CHECK(field_components(path) == 2);
    const VectorField back = read_vector_field(path);
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(back.x[k] == doctest::Approx(v.x[k]).epsilon(1e-6));
        CHECK(back.y[k] == doctest::Approx(v.y[k]).epsilon(1e-6));
    }
}

TEST_CASE("corrupt field files are rejected") {
    const fs::path path = temp_dir() / "bad.sepda";
    std::ofstream(path, std::ios::binary) << "NOTSEPDA123";
    CHECK_THROWS(read_scalar_field(path));
    const fs::path missing = temp_dir() / "missing.sepda";
    fs::remove(missing);
    CHECK_THROWS(read_scalar_field(missing));
}

TEST_CASE("PGM preview carries the range sidecar") {
    const Grid g(16, 16);
    const auto f = make_scalar(g, [](double x, double y) { return x + 2 * y; });
    const fs::path path = temp_dir() / "img.pgm";
    write_pgm16(path, f);

    std::ifstream in(path, std::ios::binary);
    std::string fmt;
    int w, h, maxval;
    in >> fmt >> w >> h >> maxval;
    CHECK(fmt == "P5");
    CHECK(w == 16);
    CHECK(h == 16);
    CHECK(maxval == 65535);

    const Manifest side = Manifest::read(path.string() + ".range.txt");
    REQUIRE(side.find("min") != nullptr);
    REQUIRE(side.find("max") != nullptr);
    CHECK(std::stod(*side.find("min")) == doctest::Approx(0.0));
    CHECK(std::stod(*side.find("max")) == doctest::Approx(3.0));
}

TEST_CASE("digests are stable and sensitive") {
    const Grid g(8, 8);
    const NoiseModel a = NoiseModel::gaussian({{0.5, 0.5}}, 0.1, {0.02});
    const NoiseModel b = NoiseModel::gaussian({{0.5, 0.5}}, 0.1, {0.03});
    CHECK(digest_model(a) == digest_model(a));
    CHECK(digest_model(a) != digest_model(b));
}

TEST_CASE("sample sets round trip through a directory") {
    const Grid g(9, 9);
    SampleSet set;
    set.grid = g;
    set.images.push_back(make_scalar(g, [](double x, double y) { return x + y; }));
    set.images.push_back(make_scalar(g, [](double x, double y) { return x * y; }));
    set.config_digest = "cfg123";
    set.model_digest = "model456";
    SdeConfig cfg;
    cfg.steps = 4;
    cfg.n_samples = 2;
    cfg.base_seed = 9;

    const fs::path dir = temp_dir() / "set";
    fs::remove_all(dir);
    write_sample_set(dir, set, cfg);
    const SampleSet back = read_sample_set(dir);
    REQUIRE(back.images.size() == 2);
    CHECK(back.config_digest == "cfg123");
    CHECK(back.model_digest == "model456");
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(back.images[0].v[k] == doctest::Approx(set.images[0].v[k]).epsilon(1e-6));
    }

    const Manifest m = Manifest::read(dir / "manifest.txt");
    CHECK(*m.find("n_samples") == "2");
    CHECK(m.find("sample_digest.0") != nullptr);
}

} // TEST_SUITE

TEST_SUITE("config") {

TEST_CASE("full config parses with derived theta rules") {
    const fs::path path = temp_dir() / "run.json";
    std::ofstream(path) << R"({
      "grid": {"nx": 16, "ny": 16},
      "kernel": [[0.5, 0.08], [0.5, 0.2]],
      "source_image": {"kind": "blob-sum",
                       "blobs": [{"center": [0.4, 0.5], "width": 0.1, "height": 0.8}]},
      "noise": {"family": "gaussian-lattice", "lattice": "hex14",
                "tau2": 0.008, "theta": "reference-amplitudes", "theta_scale": 2.0},
      "sde": {"steps": 16, "n_samples": 10, "base_seed": 99},
      "estimator": {"similarity": "ncc", "learning_rate": 0.05,
                    "max_iterations": 30, "theta_init": {"constant": 0.01},
                    "bounds": [0.0, 1.0]},
      "out": "results"
    })";
    const RunConfig cfg = RunConfig::load(path);
    CHECK(cfg.grid.nx == 16);
    CHECK(cfg.kernel.terms.size() == 2);
    CHECK(cfg.source_image.blobs.size() == 1);
    CHECK(cfg.sde.base_seed == 99);
    CHECK(cfg.estimator.learning_rate == doctest::Approx(0.05));
    CHECK(cfg.estimator.bounds.size() == 1);
    CHECK(cfg.out_dir == "results");

    const NoiseModel model = cfg.noise.build();
    CHECK(model.field_count() == 28);
    CHECK(model.tau == doctest::Approx(std::sqrt(0.008)));
    const auto ref = ground_truth_amplitudes(NoiseFamily::gaussian_lattice, 14);
    for (int i = 0; i < 14; ++i) {
        CHECK(model.theta[i] == doctest::Approx(2.0 * ref[i]).epsilon(1e-14));
    }
    const auto init = cfg.resolve_theta_init(14);
    CHECK(init == std::vector<double>(14, 0.01));
}

TEST_CASE("config validation errors") {
    const fs::path small = temp_dir() / "small.json";
    std::ofstream(small) << R"({"grid": {"nx": 4, "ny": 16}})";
    CHECK_THROWS(RunConfig::load(small));

    const fs::path badsim = temp_dir() / "badsim.json";
    std::ofstream(badsim) << R"({"estimator": {"similarity": "mse"}})";
    CHECK_THROWS(RunConfig::load(badsim));

    const fs::path badjson = temp_dir() / "bad.json";
    std::ofstream(badjson) << "{nope";
    CHECK_THROWS(RunConfig::load(badjson));
}

TEST_CASE("sinusoidal declaration resolves sine-f coefficients") {
    const fs::path path = temp_dir() / "sin.json";
    std::ofstream(path) << R"({
      "noise": {"family": "sinusoidal", "max_frequency": 2, "theta": "sine-f"}
    })";
    const RunConfig cfg = RunConfig::load(path);
    const NoiseModel model = cfg.noise.build();
    CHECK(model.parameter_count() == 4);
    // Leading coefficient of the reference function (frozen oracle value).
    CHECK(model.theta[0] == doctest::Approx(0.011177540722).epsilon(1e-4));
}

} // TEST_SUITE
