#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sepda/sde.hpp"

namespace sepda {

/// FNV-1a 64-bit accumulator used for provenance digests. Not cryptographic;
/// serves to pin reproducibility of artifacts across runs and worker counts.
class Digest {
  public:
    void update(const void *data, std::size_t n);
    void update_u32(std::uint32_t v);
    void update_u64(std::uint64_t v);
    void update_double(double v);
    void update_string(const std::string &s);
    std::string hex() const;

  private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

std::string digest_file(const std::filesystem::path &path);
std::string digest_model(const NoiseModel &model);
std::string digest_sde_run(const State &s0, const KernelSpec &spec, const SdeConfig &cfg);

// SEPDA-F32 field container: magic "SEPDAF32", u32 little-endian nx, ny,
// n_components (1 or 2), then nx*ny*n_components float32 little-endian in
// index order (i*ny + j, components interleaved innermost).
void write_field(const std::filesystem::path &path, const ScalarField &f);
void write_field(const std::filesystem::path &path, const VectorField &f);
int field_components(const std::filesystem::path &path);
ScalarField read_scalar_field(const std::filesystem::path &path);
VectorField read_vector_field(const std::filesystem::path &path);

/// 16-bit binary PGM preview, values affinely rescaled to [0, 65535]; the
/// original min/max go to a "<path>.range.txt" sidecar. Raster rows run top
/// to bottom with decreasing y.
void write_pgm16(const std::filesystem::path &path, const ScalarField &f);

/// Numeric CSV with a fixed header; cells print with %.17g so a write/read
/// round trip is value-exact.
void write_csv(const std::filesystem::path &path, const std::vector<std::string> &header,
               const std::vector<std::vector<double>> &rows);

/// Ordered "key: value" text manifest.
struct Manifest {
    std::vector<std::pair<std::string, std::string>> entries;

    void add(const std::string &key, const std::string &value);
    void add_double(const std::string &key, double value);
    void write(const std::filesystem::path &path) const;
    static Manifest read(const std::filesystem::path &path);
    const std::string *find(const std::string &key) const;
};

/// SampleSet directory layout: sample_NNNNN.sepda (+ momentum_NNNNN.sepda
/// when stored) plus a manifest.txt with digests and the seed.
void write_sample_set(const std::filesystem::path &dir, const SampleSet &set,
                      const SdeConfig &cfg);
SampleSet read_sample_set(const std::filesystem::path &dir);

} // namespace sepda
