#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sepda {

class grid_error : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class shape_error : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an integrator encounters non-finite values. `step` is the
/// 0-based index of the step that produced them; `sample` is the Monte Carlo
/// sample index when applicable, -1 otherwise.
class blowup_error : public std::runtime_error {
  public:
    blowup_error(const std::string &msg, long step_, long sample_ = -1)
        : std::runtime_error(msg), step(step_), sample(sample_) {}
    long step;
    long sample;
};

/// Node-centered discretization of the unit square: node (i,j) sits at
/// (i/(nx-1), j/(ny-1)), so boundary nodes lie on the boundary of [0,1]^2.
struct Grid {
    int nx = 0;
    int ny = 0;

    Grid() = default;
    Grid(int nx_, int ny_) : nx(nx_), ny(ny_) {
        if (nx < 2 || ny < 2) {
            throw grid_error("Grid requires at least 2 nodes per axis, got " +
                             std::to_string(nx) + "x" + std::to_string(ny));
        }
    }

    double hx() const { return 1.0 / (nx - 1); }
    double hy() const { return 1.0 / (ny - 1); }
    double x(int i) const { return i * hx(); }
    double y(int j) const { return j * hy(); }

    std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * ny + j; }

    bool operator==(const Grid &) const = default;
};

/// Scalar quantity sampled on a Grid, row-major with index (i,j) -> i*ny + j.
struct ScalarField {
    Grid grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const Grid &g) : grid(g), v(g.size(), 0.0) {}

    double &operator()(int i, int j) { return v[grid.idx(i, j)]; }
    double operator()(int i, int j) const { return v[grid.idx(i, j)]; }
};

/// Two-component field (velocity, momentum, noise field) stored as planes.
struct VectorField {
    Grid grid;
    std::vector<double> x;
    std::vector<double> y;

    VectorField() = default;
    explicit VectorField(const Grid &g) : grid(g), x(g.size(), 0.0), y(g.size(), 0.0) {}
};

/// Per-node 2x2 matrix field: row r holds the spatial gradient of component r,
/// i.e. xx = d(v_x)/dx, xy = d(v_x)/dy, yx = d(v_y)/dx, yy = d(v_y)/dy.
struct MatrixField {
    Grid grid;
    std::vector<double> xx, xy, yx, yy;

    MatrixField() = default;
    explicit MatrixField(const Grid &g)
        : grid(g), xx(g.size(), 0.0), xy(g.size(), 0.0), yx(g.size(), 0.0), yy(g.size(), 0.0) {}
};

} // namespace sepda
