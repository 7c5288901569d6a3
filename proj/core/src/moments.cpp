#include "sepda/moments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace sepda {

MomentState::MomentState(VectorField m, ScalarField image, double t_)
    : mean_m(std::move(m)), mean_image(std::move(image)), t(t_) {
    if (mean_m.grid != mean_image.grid) {
        throw shape_error("MomentState: momentum and image grids differ");
    }
}

namespace {

// Derivatives restricted to a node box. Values outside the box are not
// written; callers only read inside it. Grid boundaries keep the one-sided
// stencils regardless of the box.
void diff_x_box(const Grid &g, const double *f, double *out, int i0, int i1, int j0, int j1) {
    const int nx = g.nx, ny = g.ny;
    const double inv2h = 1.0 / (2.0 * g.hx());
    for (int i = i0; i < i1; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * ny;
        if (i == 0) {
            for (int j = j0; j < j1; ++j) {
                out[row + j] = (-3.0 * f[row + j] + 4.0 * f[row + ny + j] - f[row + 2 * ny + j]) *
                               inv2h;
            }
        } else if (i == nx - 1) {
            for (int j = j0; j < j1; ++j) {
                out[row + j] = (3.0 * f[row + j] - 4.0 * f[row - ny + j] + f[row - 2 * ny + j]) *
                               inv2h;
            }
        } else {
            for (int j = j0; j < j1; ++j) {
                out[row + j] = (f[row + ny + j] - f[row - ny + j]) * inv2h;
            }
        }
    }
}

void diff_y_box(const Grid &g, const double *f, double *out, int i0, int i1, int j0, int j1) {
    const int ny = g.ny;
    const double inv2h = 1.0 / (2.0 * g.hy());
    for (int i = i0; i < i1; ++i) {
        const double *row = f + static_cast<std::size_t>(i) * ny;
        double *o = out + static_cast<std::size_t>(i) * ny;
        for (int j = j0; j < j1; ++j) {
            if (j == 0) {
                o[j] = (-3.0 * row[0] + 4.0 * row[1] - row[2]) * inv2h;
            } else if (j == ny - 1) {
                o[j] = (3.0 * row[ny - 1] - 4.0 * row[ny - 2] + row[ny - 3]) * inv2h;
            } else {
                o[j] = (row[j + 1] - row[j - 1]) * inv2h;
            }
        }
    }
}

struct CorrScratch {
    std::vector<double> w1, w2, d1, d2, d3, d4;

    explicit CorrScratch(const Grid &g)
        : w1(g.size()), w2(g.size()), d1(g.size()), d2(g.size()), d3(g.size()), d4(g.size()) {}
};

// Box dilated by the stencil footprint; the inner field of a nested
// derivative must be valid two nodes beyond where the derivative is read.
struct Box {
    int i0, i1, j0, j1;
};

Box dilate(const NoiseProfile &p, const Grid &g) {
    return {std::max(p.i0 - 2, 0), std::min(p.i1 + 2, g.nx), std::max(p.j0 - 2, 0),
            std::min(p.j1 + 2, g.ny)};
}

// acc += coeff * sum_alpha ad*_{sigma_alpha}(ad*_{sigma_alpha} m), with
// sigma = psi e_axis. The inner coadjoint w is supported where psi is; only
// the axis column of Dw enters the outer coadjoint.
void add_correction_epdiff(const VectorField &m, const MatrixField &jm, const NoiseFieldSet &noise,
                           double coeff, VectorField &acc, CorrScratch &cs) {
    const Grid &g = m.grid;
    const int ny = g.ny;
    for (const NoiseProfile &p : noise.profiles) {
        const Box d = dilate(p, g);
        if (!p.full_support(g)) {
            std::fill(cs.w1.begin(), cs.w1.end(), 0.0);
            std::fill(cs.w2.begin(), cs.w2.end(), 0.0);
        }
        if (p.is_e1()) {
            for (int i = d.i0; i < d.i1; ++i) {
                const std::size_t row = static_cast<std::size_t>(i) * ny;
                for (int j = d.j0; j < d.j1; ++j) {
                    const std::size_t k = row + j;
                    const double psi = p.psi[k], px = p.dpsi_x[k], py = p.dpsi_y[k];
                    cs.w1[k] = psi * jm.xx[k] + 2.0 * (px * m.x[k]);
                    cs.w2[k] = psi * jm.yx[k] + py * m.x[k] + px * m.y[k];
                }
            }
            diff_x_box(g, cs.w1.data(), cs.d1.data(), p.i0, p.i1, p.j0, p.j1);
            diff_x_box(g, cs.w2.data(), cs.d2.data(), p.i0, p.i1, p.j0, p.j1);
            for (int i = p.i0; i < p.i1; ++i) {
                const std::size_t row = static_cast<std::size_t>(i) * ny;
                for (int j = p.j0; j < p.j1; ++j) {
                    const std::size_t k = row + j;
                    const double psi = p.psi[k], px = p.dpsi_x[k], py = p.dpsi_y[k];
                    acc.x[k] += coeff * (psi * cs.d1[k] + 2.0 * (px * cs.w1[k]));
                    acc.y[k] += coeff * (psi * cs.d2[k] + py * cs.w1[k] + px * cs.w2[k]);
                }
            }
        } else if (p.is_e2()) {
            for (int i = d.i0; i < d.i1; ++i) {
                const std::size_t row = static_cast<std::size_t>(i) * ny;
                for (int j = d.j0; j < d.j1; ++j) {
                    const std::size_t k = row + j;
                    const double psi = p.psi[k], px = p.dpsi_x[k], py = p.dpsi_y[k];
                    cs.w1[k] = psi * jm.xy[k] + px * m.y[k] + py * m.x[k];
                    cs.w2[k] = psi * jm.yy[k] + 2.0 * (py * m.y[k]);
                }
            }
            diff_y_box(g, cs.w1.data(), cs.d1.data(), p.i0, p.i1, p.j0, p.j1);
            diff_y_box(g, cs.w2.data(), cs.d2.data(), p.i0, p.i1, p.j0, p.j1);
            for (int i = p.i0; i < p.i1; ++i) {
                const std::size_t row = static_cast<std::size_t>(i) * ny;
                for (int j = p.j0; j < p.j1; ++j) {
                    const std::size_t k = row + j;
                    const double psi = p.psi[k], px = p.dpsi_x[k], py = p.dpsi_y[k];
                    acc.x[k] += coeff * (psi * cs.d1[k] + px * cs.w2[k] + py * cs.w1[k]);
                    acc.y[k] += coeff * (psi * cs.d2[k] + 2.0 * (py * cs.w2[k]));
                }
            }
        } else {
            // General constant direction: sigma = psi (dx, dy).
            const double sx = p.dir_x, sy = p.dir_y;
            for (int i = d.i0; i < d.i1; ++i) {
                const std::size_t row = static_cast<std::size_t>(i) * ny;
                for (int j = d.j0; j < d.j1; ++j) {
                    const std::size_t k = row + j;
                    const double psi = p.psi[k], px = p.dpsi_x[k], py = p.dpsi_y[k];
                    const double div_s = sx * px + sy * py;
                    const double proj = sx * m.x[k] + sy * m.y[k];
                    cs.w1[k] = psi * (sx * jm.xx[k] + sy * jm.xy[k]) + px * proj +
                               div_s * m.x[k];
                    cs.w2[k] = psi * (sx * jm.yx[k] + sy * jm.yy[k]) + py * proj +
                               div_s * m.y[k];
                }
            }
            diff_x_box(g, cs.w1.data(), cs.d1.data(), p.i0, p.i1, p.j0, p.j1);
            diff_y_box(g, cs.w1.data(), cs.d2.data(), p.i0, p.i1, p.j0, p.j1);
            diff_x_box(g, cs.w2.data(), cs.d3.data(), p.i0, p.i1, p.j0, p.j1);
            diff_y_box(g, cs.w2.data(), cs.d4.data(), p.i0, p.i1, p.j0, p.j1);
            for (int i = p.i0; i < p.i1; ++i) {
                const std::size_t row = static_cast<std::size_t>(i) * ny;
                for (int j = p.j0; j < p.j1; ++j) {
                    const std::size_t k = row + j;
                    const double psi = p.psi[k], px = p.dpsi_x[k], py = p.dpsi_y[k];
                    const double div_s = sx * px + sy * py;
                    const double projw = sx * cs.w1[k] + sy * cs.w2[k];
                    acc.x[k] += coeff * (psi * (sx * cs.d1[k] + sy * cs.d2[k]) + px * projw +
                                         div_s * cs.w1[k]);
                    acc.y[k] += coeff * (psi * (sx * cs.d3[k] + sy * cs.d4[k]) + py * projw +
                                         div_s * cs.w2[k]);
                }
            }
        }
    }
}

// acc += coeff * sum_alpha grad(grad(I).sigma_alpha).sigma_alpha; for
// sigma = psi e_axis only the axis derivative of psi*(dI/d axis) survives
// the outer dot product.
void add_correction_advect(const VectorField &gi, const NoiseFieldSet &noise, double coeff,
                           ScalarField &acc, CorrScratch &cs) {
    const Grid &g = gi.grid;
    const int ny = g.ny;
    for (const NoiseProfile &p : noise.profiles) {
        const Box d = dilate(p, g);
        if (!p.full_support(g)) {
            std::fill(cs.w1.begin(), cs.w1.end(), 0.0);
        }
        const bool e1 = p.is_e1(), e2 = p.is_e2();
        for (int i = d.i0; i < d.i1; ++i) {
            const std::size_t row = static_cast<std::size_t>(i) * ny;
            for (int j = d.j0; j < d.j1; ++j) {
                const std::size_t k = row + j;
                cs.w1[k] = e1   ? p.psi[k] * gi.x[k]
                           : e2 ? p.psi[k] * gi.y[k]
                                : p.psi[k] * (p.dir_x * gi.x[k] + p.dir_y * gi.y[k]);
            }
        }
        if (e1) {
            diff_x_box(g, cs.w1.data(), cs.d1.data(), p.i0, p.i1, p.j0, p.j1);
        } else if (e2) {
            diff_y_box(g, cs.w1.data(), cs.d1.data(), p.i0, p.i1, p.j0, p.j1);
        } else {
            diff_x_box(g, cs.w1.data(), cs.d1.data(), p.i0, p.i1, p.j0, p.j1);
            diff_y_box(g, cs.w1.data(), cs.d2.data(), p.i0, p.i1, p.j0, p.j1);
        }
        for (int i = p.i0; i < p.i1; ++i) {
            const std::size_t row = static_cast<std::size_t>(i) * ny;
            for (int j = p.j0; j < p.j1; ++j) {
                const std::size_t k = row + j;
                acc.v[k] += coeff * (e1 || e2
                                         ? p.psi[k] * cs.d1[k]
                                         : p.psi[k] * (p.dir_x * cs.d1[k] + p.dir_y * cs.d2[k]));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Assembled correction operators.
//
// For a fixed noise field set the corrections are linear in their argument,
// so the repeated per-profile stencil sweeps inside an integration can be
// collapsed once into shift-coefficient planes. For an e1 profile,
//   w1 = psi a1 + 2 psi_x m1            (a = d/dx of m)
//   w2 = psi a2 + psi_y m1 + psi_x m2
//   out1 = psi dx(w1) + 2 psi_x w1
//   out2 = psi dx(w2) + psi_y w1 + psi_x w2,
// and expanding dx through its (boundary-aware) stencil turns the alpha-sum
// into plane sets applied to shifted copies of m and of the momentum
// derivative along the group axis. e2 profiles mirror this in y; profiles
// with general directions stay on the loop path.
struct CorrectionOperator {
    Grid grid;
    bool any_e1 = false, any_e2 = false;
    std::vector<const NoiseProfile *> general; // non-axis profiles, loop path

    // Shift slots s = -2..2 stored at index s+2.
    using Planes = std::array<std::vector<double>, 5>;

    // Advection: out += sum_s Ax_s gx(+s e_x) + Ay_s gy(+s e_y).
    Planes adv_x, adv_y;

    // EPDiff, e1 group (shifts along x; a_r = dx m_r):
    Planes e1_p1;    // out1 <- a1
    Planes e1_q1;    // out1 <- m1
    Planes e1_p2;    // out2 <- a2
    Planes e1_u;     // out2 <- m1
    Planes e1_v;     // out2 <- m2
    std::vector<double> e1_pw_a1; // out2 <- a1, pointwise

    // EPDiff, e2 group (shifts along y; b_r = dy m_r):
    Planes e2_pb1;   // out1 <- b1
    Planes e2_ym1;   // out1 <- m1
    Planes e2_xm2;   // out1 <- m2
    Planes e2_pb2;   // out2 <- b2
    Planes e2_q2;    // out2 <- m2
    std::vector<double> e2_pw_b2; // out1 <- b2, pointwise
};

// Stencil coefficients of the shared first-derivative operator at line
// index i of n nodes: fills c[s+2] for s in -2..2.
void derivative_stencil(int i, int n, double inv2h, double c[5]) {
    c[0] = c[1] = c[2] = c[3] = c[4] = 0.0;
    if (i == 0) {
        c[2] = -3.0 * inv2h;
        c[3] = 4.0 * inv2h;
        c[4] = -inv2h;
    } else if (i == n - 1) {
        c[2] = 3.0 * inv2h;
        c[1] = -4.0 * inv2h;
        c[0] = inv2h;
    } else {
        c[1] = -inv2h;
        c[3] = inv2h;
    }
}

CorrectionOperator build_correction_operator(const NoiseFieldSet &noise) {
    const Grid &g = noise.grid;
    CorrectionOperator op;
    op.grid = g;
    const int nx = g.nx, ny = g.ny;
    const double inv2hx = 1.0 / (2.0 * g.hx());
    const double inv2hy = 1.0 / (2.0 * g.hy());

    auto alloc = [&](CorrectionOperator::Planes &p) {
        for (auto &plane : p) {
            plane.assign(g.size(), 0.0);
        }
    };

    for (const NoiseProfile &p : noise.profiles) {
        if (p.is_e1()) {
            if (!op.any_e1) {
                op.any_e1 = true;
                alloc(op.adv_x);
                alloc(op.e1_p1);
                alloc(op.e1_q1);
                alloc(op.e1_p2);
                alloc(op.e1_u);
                alloc(op.e1_v);
                op.e1_pw_a1.assign(g.size(), 0.0);
            }
            double c[5];
            for (int i = p.i0; i < p.i1; ++i) {
                derivative_stencil(i, nx, inv2hx, c);
                for (int j = p.j0; j < p.j1; ++j) {
                    const std::size_t k = g.idx(i, j);
                    const double psi = p.psi[k], px = p.dpsi_x[k], py = p.dpsi_y[k];
                    for (int s = -2; s <= 2; ++s) {
                        const double cs = c[s + 2];
                        if (cs == 0.0) {
                            continue;
                        }
                        const std::size_t ks = g.idx(i + s, j);
                        const double ps = p.psi[ks];
                        const double pxs = p.dpsi_x[ks];
                        const double pys = p.dpsi_y[ks];
                        const double base = psi * cs;
                        op.adv_x[s + 2][k] += base * ps;
                        op.e1_p1[s + 2][k] += base * ps;
                        op.e1_q1[s + 2][k] += 2.0 * base * pxs;
                        op.e1_p2[s + 2][k] += base * ps;
                        op.e1_u[s + 2][k] += base * pys;
                        op.e1_v[s + 2][k] += base * pxs;
                    }
                    // Pointwise outer terms folded into the zero-shift slot.
                    op.e1_p1[2][k] += 2.0 * px * psi;       // 2 psi_x w1 <- psi a1
                    op.e1_q1[2][k] += 4.0 * px * px;        // 2 psi_x w1 <- 2 psi_x m1
                    op.e1_u[2][k] += py * 2.0 * px + px * py; // psi_y w1 + psi_x w2 <- m1
                    op.e1_v[2][k] += px * px;               // psi_x w2 <- psi_x m2
                    op.e1_p2[2][k] += px * psi;             // psi_x w2 <- psi a2
                    op.e1_pw_a1[k] += py * psi;             // psi_y w1 <- psi a1
                }
            }
        } else if (p.is_e2()) {
            if (!op.any_e2) {
                op.any_e2 = true;
                alloc(op.adv_y);
                alloc(op.e2_pb1);
                alloc(op.e2_ym1);
                alloc(op.e2_xm2);
                alloc(op.e2_pb2);
                alloc(op.e2_q2);
                op.e2_pw_b2.assign(g.size(), 0.0);
            }
            double c[5];
            for (int i = p.i0; i < p.i1; ++i) {
                for (int j = p.j0; j < p.j1; ++j) {
                    derivative_stencil(j, ny, inv2hy, c);
                    const std::size_t k = g.idx(i, j);
                    const double psi = p.psi[k], px = p.dpsi_x[k], py = p.dpsi_y[k];
                    for (int s = -2; s <= 2; ++s) {
                        const double cs = c[s + 2];
                        if (cs == 0.0) {
                            continue;
                        }
                        const std::size_t ks = g.idx(i, j + s);
                        const double ps = p.psi[ks];
                        const double pxs = p.dpsi_x[ks];
                        const double pys = p.dpsi_y[ks];
                        const double base = psi * cs;
                        op.adv_y[s + 2][k] += base * ps;
                        op.e2_pb1[s + 2][k] += base * ps;
                        op.e2_ym1[s + 2][k] += base * pys;
                        op.e2_xm2[s + 2][k] += base * pxs;
                        op.e2_pb2[s + 2][k] += base * ps;
                        op.e2_q2[s + 2][k] += 2.0 * base * pys;
                    }
                    op.e2_pb1[2][k] += py * psi;            // psi_y w1 <- psi b1
                    op.e2_ym1[2][k] += py * py;             // psi_y w1 <- psi_y m1
                    op.e2_xm2[2][k] += py * px + 2.0 * px * py; // psi_y w1, psi_x w2 <- m2
                    op.e2_pb2[2][k] += 2.0 * py * psi;      // 2 psi_y w2 <- psi b2
                    op.e2_q2[2][k] += 4.0 * py * py;        // 2 psi_y w2 <- 2 psi_y m2
                    op.e2_pw_b2[k] += px * psi;             // psi_x w2 <- psi b2
                }
            }
        } else {
            op.general.push_back(&p);
        }
    }
    return op;
}

// acc += coeff * sum_s plane_s(k) * f(k + s*stride_x) along x.
void apply_planes_x(const Grid &g, const CorrectionOperator::Planes &planes, const double *f,
                    double coeff, double *acc) {
    const int nx = g.nx, ny = g.ny;
    for (int s = -2; s <= 2; ++s) {
        const double *plane = planes[s + 2].data();
        const int i_lo = std::max(0, -s);
        const int i_hi = nx - std::max(0, s);
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(s) * ny;
        for (int i = i_lo; i < i_hi; ++i) {
            const std::size_t row = static_cast<std::size_t>(i) * ny;
            for (int j = 0; j < ny; ++j) {
                acc[row + j] += coeff * plane[row + j] * f[row + j + off];
            }
        }
    }
}

void apply_planes_y(const Grid &g, const CorrectionOperator::Planes &planes, const double *f,
                    double coeff, double *acc) {
    const int nx = g.nx, ny = g.ny;
    for (int s = -2; s <= 2; ++s) {
        const double *plane = planes[s + 2].data();
        const int j_lo = std::max(0, -s);
        const int j_hi = ny - std::max(0, s);
        for (int i = 0; i < nx; ++i) {
            const std::size_t row = static_cast<std::size_t>(i) * ny;
            for (int j = j_lo; j < j_hi; ++j) {
                acc[row + j] += coeff * plane[row + j] * f[row + j + s];
            }
        }
    }
}

void op_add_correction_advect(const CorrectionOperator &op, const VectorField &gi, double coeff,
                              ScalarField &acc, const NoiseFieldSet &noise, CorrScratch &cs) {
    if (op.any_e1) {
        apply_planes_x(op.grid, op.adv_x, gi.x.data(), coeff, acc.v.data());
    }
    if (op.any_e2) {
        apply_planes_y(op.grid, op.adv_y, gi.y.data(), coeff, acc.v.data());
    }
    if (!op.general.empty()) {
        NoiseFieldSet rest;
        rest.grid = noise.grid;
        for (const NoiseProfile *p : op.general) {
            rest.profiles.push_back(*p);
        }
        add_correction_advect(gi, rest, coeff, acc, cs);
    }
}

void op_add_correction_epdiff(const CorrectionOperator &op, const VectorField &m,
                              const MatrixField &jm, double coeff, VectorField &acc,
                              const NoiseFieldSet &noise, CorrScratch &cs) {
    const Grid &g = op.grid;
    if (op.any_e1) {
        apply_planes_x(g, op.e1_p1, jm.xx.data(), coeff, acc.x.data());
        apply_planes_x(g, op.e1_q1, m.x.data(), coeff, acc.x.data());
        apply_planes_x(g, op.e1_p2, jm.yx.data(), coeff, acc.y.data());
        apply_planes_x(g, op.e1_u, m.x.data(), coeff, acc.y.data());
        apply_planes_x(g, op.e1_v, m.y.data(), coeff, acc.y.data());
        for (std::size_t k = 0; k < g.size(); ++k) {
            acc.y[k] += coeff * op.e1_pw_a1[k] * jm.xx[k];
        }
    }
    if (op.any_e2) {
        apply_planes_y(g, op.e2_pb1, jm.xy.data(), coeff, acc.x.data());
        apply_planes_y(g, op.e2_ym1, m.x.data(), coeff, acc.x.data());
        apply_planes_y(g, op.e2_xm2, m.y.data(), coeff, acc.x.data());
        apply_planes_y(g, op.e2_pb2, jm.yy.data(), coeff, acc.y.data());
        apply_planes_y(g, op.e2_q2, m.y.data(), coeff, acc.y.data());
        for (std::size_t k = 0; k < g.size(); ++k) {
            acc.x[k] += coeff * op.e2_pw_b2[k] * jm.yy[k];
        }
    }
    if (!op.general.empty()) {
        NoiseFieldSet rest;
        rest.grid = noise.grid;
        for (const NoiseProfile *p : op.general) {
            rest.profiles.push_back(*p);
        }
        add_correction_epdiff(m, jm, rest, coeff, acc, cs);
    }
}

void moment_rhs_into(const VectorField &m, const ScalarField &image, const NoiseFieldSet &noise,
                     const KernelSpec &spec, VectorField &dm, ScalarField &di, CorrScratch &cs,
                     const CorrectionOperator *op) {
    const VectorField u = smooth(spec, m);
    const MatrixField jm = jacobian(m);
    const VectorField gi = gradient(image);
    detail::epdiff_drift_into(m, jm, u, dm);
    detail::advection_drift_into(gi, u, di);
    if (op) {
        op_add_correction_epdiff(*op, m, jm, 0.5, dm, noise, cs);
        op_add_correction_advect(*op, gi, 0.5, di, noise, cs);
    } else {
        add_correction_epdiff(m, jm, noise, 0.5, dm, cs);
        add_correction_advect(gi, noise, 0.5, di, cs);
    }
}

} // namespace

VectorField correction_epdiff(const VectorField &m, const NoiseFieldSet &noise) {
    if (m.grid != noise.grid) {
        throw shape_error("correction_epdiff: grids differ");
    }
    VectorField acc(m.grid);
    CorrScratch cs(m.grid);
    add_correction_epdiff(m, jacobian(m), noise, 1.0, acc, cs);
    return acc;
}

VectorField correction_epdiff(const VectorField &m, const NoiseModel &model) {
    return correction_epdiff(m, NoiseFieldSet::from_model(model, m.grid));
}

ScalarField correction_advect(const ScalarField &image, const NoiseFieldSet &noise) {
    if (image.grid != noise.grid) {
        throw shape_error("correction_advect: grids differ");
    }
    ScalarField acc(image.grid);
    CorrScratch cs(image.grid);
    add_correction_advect(gradient(image), noise, 1.0, acc, cs);
    return acc;
}

ScalarField correction_advect(const ScalarField &image, const NoiseModel &model) {
    return correction_advect(image, NoiseFieldSet::from_model(model, image.grid));
}

std::pair<VectorField, ScalarField> moment_rhs(const MomentState &ms, const NoiseFieldSet &noise,
                                               const KernelSpec &spec) {
    VectorField dm(ms.mean_m.grid);
    ScalarField di(ms.mean_image.grid);
    CorrScratch cs(ms.mean_m.grid);
    moment_rhs_into(ms.mean_m, ms.mean_image, noise, spec, dm, di, cs, nullptr);
    return {std::move(dm), std::move(di)};
}

MomentState integrate_moments(const MomentState &ms0, const NoiseFieldSet &noise,
                              const KernelSpec &spec, int steps) {
    if (steps < 1) {
        throw std::invalid_argument("integrate_moments: steps must be >= 1");
    }
    const Grid &g = ms0.mean_m.grid;
    if (g != noise.grid) {
        throw shape_error("integrate_moments: grids differ");
    }
    MomentState s = ms0;
    const CorrectionOperator op = build_correction_operator(noise);
    CorrScratch cs(g);
    VectorField k1m(g), k2m(g), k3m(g), k4m(g), mt(g);
    ScalarField k1i(g), k2i(g), k3i(g), k4i(g), it(g);
    const double dt = 1.0 / steps;
    const std::size_t n = g.size();

    auto stage = [&](VectorField &my, ScalarField &iy, double c, const VectorField &km,
                     const ScalarField &ki) {
        for (std::size_t k = 0; k < n; ++k) {
            my.x[k] = s.mean_m.x[k] + c * km.x[k];
            my.y[k] = s.mean_m.y[k] + c * km.y[k];
            iy.v[k] = s.mean_image.v[k] + c * ki.v[k];
        }
    };

    for (int step = 0; step < steps; ++step) {
        moment_rhs_into(s.mean_m, s.mean_image, noise, spec, k1m, k1i, cs, &op);
        stage(mt, it, 0.5 * dt, k1m, k1i);
        moment_rhs_into(mt, it, noise, spec, k2m, k2i, cs, &op);
        stage(mt, it, 0.5 * dt, k2m, k2i);
        moment_rhs_into(mt, it, noise, spec, k3m, k3i, cs, &op);
        stage(mt, it, dt, k3m, k3i);
        moment_rhs_into(mt, it, noise, spec, k4m, k4i, cs, &op);
        const double c = dt / 6.0;
        for (std::size_t k = 0; k < n; ++k) {
            s.mean_m.x[k] += c * (k1m.x[k] + 2.0 * k2m.x[k] + 2.0 * k3m.x[k] + k4m.x[k]);
            s.mean_m.y[k] += c * (k1m.y[k] + 2.0 * k2m.y[k] + 2.0 * k3m.y[k] + k4m.y[k]);
            s.mean_image.v[k] += c * (k1i.v[k] + 2.0 * k2i.v[k] + 2.0 * k3i.v[k] + k4i.v[k]);
        }
        s.t = ms0.t + (step + 1) * dt;
        if (!all_finite(s.mean_m) || !all_finite(s.mean_image)) {
            throw blowup_error("moment integration blew up at step " + std::to_string(step),
                               step);
        }
    }
    return s;
}

MomentState integrate_moments(const MomentState &ms0, const NoiseModel &model,
                              const KernelSpec &spec, int steps) {
    return integrate_moments(ms0, NoiseFieldSet::from_model(model, ms0.mean_m.grid), spec, steps);
}

} // namespace sepda
