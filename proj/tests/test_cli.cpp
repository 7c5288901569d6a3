#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "sepda/io.hpp"

using namespace sepda;
namespace fs = std::filesystem;

namespace {

const char *kBin = SEPDA_BIN;

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "sepda_cli_test";
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string &args) {
    const std::string cmd = std::string(kBin) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

void write_config(const fs::path &path, const std::string &noise_theta, const fs::path &out,
                  const std::string &extra = "") {
    std::ofstream cfg(path);
    cfg << R"({
      "grid": {"nx": 16, "ny": 16},
      "kernel": [[0.5, 0.08], [0.5, 0.2]],
      "source_image": {"kind": "blob-sum",
                       "blobs": [{"center": [0.45, 0.5], "width": 0.14, "height": 0.9}]},
      "noise": {"family": "gaussian-lattice", "lattice": "square", "rows": 1, "cols": 2,
                "tau": 0.15, "theta": )"
        << noise_theta << R"(},
      "sde": {"steps": 6, "n_samples": 5, "base_seed": 321},
      "estimator": {"similarity": "ssd", "learning_rate": 0.05, "max_iterations": 12,
                    "fd_step": 0.01, "theta_scale_floor": 0.001,
                    "bounds": [0.0, 1.0], "theta_init": {"constant": 0.004}},
      )" << extra
        << R"(
      "out": ")"
        << out.string() << R"("
    })";
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("sample with zero amplitudes reproduces the deterministic endpoint") {
    const fs::path dir = work_dir() / "zero_noise";
    fs::remove_all(dir);
    const fs::path cfg = work_dir() / "zero.json";
    write_config(cfg, "[0.0, 0.0]", dir);

    REQUIRE(run_cli("sample --config " + cfg.string() + " --workers 2") == 0);
    const SampleSet set = read_sample_set(dir / "samples");
    const ScalarField det = read_scalar_field(dir / "deterministic_image.sepda");
    REQUIRE(set.images.size() == 5);
    for (const ScalarField &img : set.images) {
        CHECK(img.v == det.v);
    }
    const Manifest m = Manifest::read(dir / "manifest.txt");
    REQUIRE(m.find("status") != nullptr);
    CHECK(*m.find("status") == "ok");
}

TEST_CASE("estimate on a zero-noise dataset drives theta toward zero") {
    const fs::path dir = work_dir() / "null_recovery";
    fs::remove_all(dir);
    const fs::path cfg = work_dir() / "null.json";
    write_config(cfg, "[0.0, 0.0]", dir, R"("ground_truth": [0.0, 0.0],)");

    REQUIRE(run_cli("sample --config " + cfg.string()) == 0);
    REQUIRE(run_cli("estimate --config " + cfg.string()) == 0);
    const Manifest m = Manifest::read(dir / "theta_manifest.txt");
    REQUIRE(m.find("theta_hat.0") != nullptr);
    // Starting at 0.004 with a 12-iteration budget and step band
    // lr * scale = 2e-4 per iteration, the estimate must shrink.
    const double t0 = std::stod(*m.find("theta_hat.0"));
    const double t1 = std::stod(*m.find("theta_hat.1"));
    CHECK(std::hypot(t0, t1) < 0.004);
}

TEST_CASE("register writes momentum, report and warped image") {
    const fs::path dir = work_dir() / "register";
    fs::remove_all(dir);
    const fs::path cfg = work_dir() / "register.json";
    std::ofstream(cfg) << R"({
      "grid": {"nx": 24, "ny": 24},
      "kernel": [[0.6, 0.12], [0.4, 0.2]],
      "source_image": {"kind": "blob-sum",
                       "blobs": [{"center": [0.46, 0.5], "width": 0.12, "height": 0.9}]},
      "target_image": {"kind": "blob-sum",
                       "blobs": [{"center": [0.52, 0.5], "width": 0.12, "height": 0.9}]},
      "registration": {"control_points": {"rows": 2, "cols": 2}, "lambda": 0.1, "steps": 8,
                       "estimator": {"learning_rate": 0.25, "theta_scale_floor": 0.02,
                                     "max_iterations": 15, "fd_step": 0.01}},
      "out": ")" << dir.string()
                       << R"("
    })";

    REQUIRE(run_cli("register --config " + cfg.string()) == 0);
    CHECK(fs::exists(dir / "m0.sepda"));
    CHECK(fs::exists(dir / "registration_report.csv"));
    CHECK(fs::exists(dir / "warped.pgm"));
    const Manifest m = Manifest::read(dir / "manifest.txt");
    REQUIRE(m.find("final_ssd") != nullptr);
    REQUIRE(m.find("initial_ssd") != nullptr);
    CHECK(std::stod(*m.find("final_ssd")) < std::stod(*m.find("initial_ssd")));
}

TEST_CASE("moments command writes endpoint fields") {
    const fs::path dir = work_dir() / "moments";
    fs::remove_all(dir);
    const fs::path cfg = work_dir() / "moments.json";
    write_config(cfg, "[0.02, 0.01]", dir);
    REQUIRE(run_cli("moments --config " + cfg.string()) == 0);
    CHECK(field_components(dir / "moment_image.sepda") == 1);
    CHECK(field_components(dir / "moment_momentum.sepda") == 2);
}

TEST_CASE("failures exit nonzero and flag the stage in the manifest") {
    const fs::path dir = work_dir() / "fail";
    fs::remove_all(dir);
    const fs::path cfg = work_dir() / "fail.json";
    write_config(cfg, "[0.01, 0.01]", dir);
    // Estimate without a sample set: the load-samples stage fails.
    CHECK(run_cli("estimate --config " + cfg.string()) != 0);
    const Manifest m = Manifest::read(dir / "manifest.txt");
    REQUIRE(m.find("status") != nullptr);
    CHECK(*m.find("status") == "failed");
    REQUIRE(m.find("failed_stage") != nullptr);
    CHECK(*m.find("failed_stage") == "load-samples");

    CHECK(run_cli("estimate --config /nonexistent.json") != 0);
    CHECK(run_cli("bogus-subcommand --config " + cfg.string()) != 0);
}

} // TEST_SUITE
