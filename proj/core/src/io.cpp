#include "sepda/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sepda {

namespace fs = std::filesystem;

void Digest::update(const void *data, std::size_t n) {
    const auto *bytes = static_cast<const unsigned char *>(data);
    for (std::size_t i = 0; i < n; ++i) {
        state_ ^= bytes[i];
        state_ *= 0x100000001b3ull;
    }
}

void Digest::update_u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    update(b, 4);
}

void Digest::update_u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    update(b, 8);
}

void Digest::update_double(double v) { update_u64(std::bit_cast<std::uint64_t>(v)); }

void Digest::update_string(const std::string &s) {
    update_u64(s.size());
    update(s.data(), s.size());
}

std::string Digest::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
    return buf;
}

std::string digest_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open for digest: " + path.string());
    }
    Digest d;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        d.update(buf, static_cast<std::size_t>(in.gcount()));
    }
    return d.hex();
}

std::string digest_model(const NoiseModel &model) {
    Digest d;
    d.update_u32(static_cast<std::uint32_t>(model.family));
    d.update_u64(model.centers.size());
    for (const auto &[x, y] : model.centers) {
        d.update_double(x);
        d.update_double(y);
    }
    d.update_double(model.tau);
    d.update_u32(static_cast<std::uint32_t>(model.max_frequency));
    d.update_u64(model.theta.size());
    for (double t : model.theta) {
        d.update_double(t);
    }
    return d.hex();
}

std::string digest_sde_run(const State &s0, const KernelSpec &spec, const SdeConfig &cfg) {
    Digest d;
    d.update_u32(static_cast<std::uint32_t>(s0.m.grid.nx));
    d.update_u32(static_cast<std::uint32_t>(s0.m.grid.ny));
    for (double v : s0.m.x) {
        d.update_double(v);
    }
    for (double v : s0.m.y) {
        d.update_double(v);
    }
    for (double v : s0.image.v) {
        d.update_double(v);
    }
    d.update_u64(spec.terms.size());
    for (const auto &t : spec.terms) {
        d.update_double(t.weight);
        d.update_double(t.width);
    }
    d.update_u32(static_cast<std::uint32_t>(cfg.steps));
    d.update_u64(cfg.base_seed);
    d.update_u32(static_cast<std::uint32_t>(cfg.n_samples));
    return d.hex();
}

namespace {

constexpr char kMagic[8] = {'S', 'E', 'P', 'D', 'A', 'F', '3', '2'};

void put_u32(std::ofstream &out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char *>(b), 4);
}

std::uint32_t get_u32(std::ifstream &in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char *>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ofstream &out, float f) {
    const std::uint32_t v = std::bit_cast<std::uint32_t>(f);
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char *>(b), 4);
}

float get_f32(std::ifstream &in) { return std::bit_cast<float>(get_u32(in)); }

std::ofstream open_out(const fs::path &path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write: " + path.string());
    }
    return out;
}

struct FieldHeader {
    std::uint32_t nx, ny, nc;
};

FieldHeader read_header(std::ifstream &in, const fs::path &path) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw std::runtime_error("not a SEPDA-F32 file: " + path.string());
    }
    FieldHeader h{get_u32(in), get_u32(in), get_u32(in)};
    if (!in || h.nx < 2 || h.ny < 2 || (h.nc != 1 && h.nc != 2)) {
        throw std::runtime_error("bad SEPDA-F32 header in " + path.string());
    }
    return h;
}

} // namespace

void write_field(const fs::path &path, const ScalarField &f) {
    std::ofstream out = open_out(path);
    out.write(kMagic, 8);
    put_u32(out, static_cast<std::uint32_t>(f.grid.nx));
    put_u32(out, static_cast<std::uint32_t>(f.grid.ny));
    put_u32(out, 1);
    for (double v : f.v) {
        put_f32(out, static_cast<float>(v));
    }
}

void write_field(const fs::path &path, const VectorField &f) {
    std::ofstream out = open_out(path);
    out.write(kMagic, 8);
    put_u32(out, static_cast<std::uint32_t>(f.grid.nx));
    put_u32(out, static_cast<std::uint32_t>(f.grid.ny));
    put_u32(out, 2);
    for (std::size_t k = 0; k < f.x.size(); ++k) {
        put_f32(out, static_cast<float>(f.x[k]));
        put_f32(out, static_cast<float>(f.y[k]));
    }
}

int field_components(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open: " + path.string());
    }
    return static_cast<int>(read_header(in, path).nc);
}

ScalarField read_scalar_field(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open: " + path.string());
    }
    const FieldHeader h = read_header(in, path);
    if (h.nc != 1) {
        throw std::runtime_error("expected scalar field in " + path.string());
    }
    ScalarField f(Grid(static_cast<int>(h.nx), static_cast<int>(h.ny)));
    for (double &v : f.v) {
        v = get_f32(in);
    }
    if (!in) {
        throw std::runtime_error("truncated SEPDA-F32 file: " + path.string());
    }
    return f;
}

VectorField read_vector_field(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open: " + path.string());
    }
    const FieldHeader h = read_header(in, path);
    if (h.nc != 2) {
        throw std::runtime_error("expected vector field in " + path.string());
    }
    VectorField f(Grid(static_cast<int>(h.nx), static_cast<int>(h.ny)));
    for (std::size_t k = 0; k < f.x.size(); ++k) {
        f.x[k] = get_f32(in);
        f.y[k] = get_f32(in);
    }
    if (!in) {
        throw std::runtime_error("truncated SEPDA-F32 file: " + path.string());
    }
    return f;
}

void write_pgm16(const fs::path &path, const ScalarField &f) {
    double lo = f.v.empty() ? 0.0 : f.v[0];
    double hi = lo;
    for (double v : f.v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double scale = (hi > lo) ? 65535.0 / (hi - lo) : 0.0;

    std::ofstream out = open_out(path);
    out << "P5\n" << f.grid.nx << " " << f.grid.ny << "\n65535\n";
    // PGM samples are big-endian; rows scan top to bottom = decreasing y.
    for (int j = f.grid.ny - 1; j >= 0; --j) {
        for (int i = 0; i < f.grid.nx; ++i) {
            const double v = (f(i, j) - lo) * scale;
            const auto q = static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0) + 0.5);
            const unsigned char b[2] = {static_cast<unsigned char>(q >> 8),
                                        static_cast<unsigned char>(q & 0xff)};
            out.write(reinterpret_cast<const char *>(b), 2);
        }
    }

    std::ofstream side(path.string() + ".range.txt");
    char buf[128];
    std::snprintf(buf, sizeof(buf), "min: %.17g\nmax: %.17g\n", lo, hi);
    side << buf;
}

void write_csv(const fs::path &path, const std::vector<std::string> &header,
               const std::vector<std::vector<double>> &rows) {
    std::ofstream out = open_out(path);
    for (std::size_t c = 0; c < header.size(); ++c) {
        out << header[c] << (c + 1 < header.size() ? "," : "\n");
    }
    char buf[64];
    for (const auto &row : rows) {
        if (row.size() != header.size()) {
            throw std::invalid_argument("write_csv: row width does not match header");
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[c]);
            out << buf << (c + 1 < row.size() ? "," : "\n");
        }
    }
}

void Manifest::add(const std::string &key, const std::string &value) {
    entries.emplace_back(key, value);
}

void Manifest::add_double(const std::string &key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    entries.emplace_back(key, buf);
}

void Manifest::write(const fs::path &path) const {
    std::ofstream out = open_out(path);
    for (const auto &[k, v] : entries) {
        out << k << ": " << v << "\n";
    }
}

Manifest Manifest::read(const fs::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open manifest: " + path.string());
    }
    Manifest m;
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.find(": ");
        if (pos == std::string::npos) {
            continue;
        }
        m.entries.emplace_back(line.substr(0, pos), line.substr(pos + 2));
    }
    return m;
}

const std::string *Manifest::find(const std::string &key) const {
    for (const auto &[k, v] : entries) {
        if (k == key) {
            return &v;
        }
    }
    return nullptr;
}

namespace {

std::string sample_name(std::size_t i) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "sample_%05zu.sepda", i);
    return buf;
}

std::string momentum_name(std::size_t i) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "momentum_%05zu.sepda", i);
    return buf;
}

} // namespace

void write_sample_set(const fs::path &dir, const SampleSet &set, const SdeConfig &cfg) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < set.images.size(); ++i) {
        write_field(dir / sample_name(i), set.images[i]);
    }
    for (std::size_t i = 0; i < set.momenta.size(); ++i) {
        write_field(dir / momentum_name(i), set.momenta[i]);
    }
    Manifest m;
    m.add("kind", "sample-set");
    m.add("config_digest", set.config_digest);
    m.add("model_digest", set.model_digest);
    m.add("base_seed", std::to_string(cfg.base_seed));
    m.add("steps", std::to_string(cfg.steps));
    m.add("n_samples", std::to_string(set.images.size()));
    m.add("store_momenta", set.momenta.empty() ? "0" : "1");
    for (std::size_t i = 0; i < set.images.size(); ++i) {
        m.add("sample_digest." + std::to_string(i), digest_file(dir / sample_name(i)));
    }
    m.write(dir / "manifest.txt");
}

SampleSet read_sample_set(const fs::path &dir) {
    const Manifest m = Manifest::read(dir / "manifest.txt");
    const std::string *count = m.find("n_samples");
    if (!count) {
        throw std::runtime_error("sample-set manifest missing n_samples: " + dir.string());
    }
    const std::size_t n = std::stoul(*count);
    SampleSet set;
    set.images.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        set.images.push_back(read_scalar_field(dir / sample_name(i)));
    }
    if (n > 0) {
        set.grid = set.images[0].grid;
    }
    const std::string *momenta = m.find("store_momenta");
    if (momenta && *momenta == "1") {
        set.momenta.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            set.momenta.push_back(read_vector_field(dir / momentum_name(i)));
        }
    }
    if (const std::string *d = m.find("config_digest")) {
        set.config_digest = *d;
    }
    if (const std::string *d = m.find("model_digest")) {
        set.model_digest = *d;
    }
    return set;
}

} // namespace sepda
