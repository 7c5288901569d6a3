#include "sepda/epdiff.hpp"

#include <cmath>
#include <string>

namespace sepda {

State::State(VectorField m_, ScalarField image_, double t_)
    : m(std::move(m_)), image(std::move(image_)), t(t_) {
    if (m.grid != image.grid) {
        throw shape_error("State: momentum and image grids differ");
    }
    if (t < 0.0 || t > 1.0) {
        throw std::invalid_argument("State: t outside [0,1]");
    }
}

namespace detail {

void epdiff_drift_into(const VectorField &m, const MatrixField &jm, const VectorField &u,
                       VectorField &dm) {
    const MatrixField ju = jacobian(u);
    const std::size_t n = m.grid.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double div_u = ju.xx[k] + ju.yy[k];
        dm.x[k] = -((jm.xx[k] * u.x[k] + jm.xy[k] * u.y[k]) +
                    (ju.xx[k] * m.x[k] + ju.yx[k] * m.y[k]) + div_u * m.x[k]);
        dm.y[k] = -((jm.yx[k] * u.x[k] + jm.yy[k] * u.y[k]) +
                    (ju.xy[k] * m.x[k] + ju.yy[k] * m.y[k]) + div_u * m.y[k]);
    }
}

void advection_drift_into(const VectorField &grad_image, const VectorField &u, ScalarField &di) {
    const std::size_t n = grad_image.grid.size();
    for (std::size_t k = 0; k < n; ++k) {
        di.v[k] = -(grad_image.x[k] * u.x[k] + grad_image.y[k] * u.y[k]);
    }
}

} // namespace detail

VectorField coadjoint(const VectorField &m, const VectorField &v) {
    if (m.grid != v.grid) {
        throw shape_error("coadjoint: grids differ");
    }
    const MatrixField jm = jacobian(m);
    const MatrixField jv = jacobian(v);
    VectorField out(m.grid);
    const std::size_t n = m.grid.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double div_v = jv.xx[k] + jv.yy[k];
        out.x[k] = (jm.xx[k] * v.x[k] + jm.xy[k] * v.y[k]) +
                   (jv.xx[k] * m.x[k] + jv.yx[k] * m.y[k]) + div_v * m.x[k];
        out.y[k] = (jm.yx[k] * v.x[k] + jm.yy[k] * v.y[k]) +
                   (jv.xy[k] * m.x[k] + jv.yy[k] * m.y[k]) + div_v * m.y[k];
    }
    return out;
}

VectorField epdiff_rhs(const State &s, const KernelSpec &spec) {
    const VectorField u = smooth(spec, s.m);
    VectorField dm(s.m.grid);
    detail::epdiff_drift_into(s.m, jacobian(s.m), u, dm);
    return dm;
}

ScalarField advection_rhs(const State &s, const KernelSpec &spec) {
    const VectorField u = smooth(spec, s.m);
    ScalarField di(s.image.grid);
    detail::advection_drift_into(gradient(s.image), u, di);
    return di;
}

double kinetic_energy(const VectorField &m, const KernelSpec &spec) {
    return inner_l2(smooth(spec, m), m);
}

namespace {

// One RK4 stage update y = base + c*k over both halves of the state.
void stage(VectorField &my, ScalarField &iy, const VectorField &mb, const ScalarField &ib,
           double c, const VectorField &km, const ScalarField &ki) {
    const std::size_t n = mb.grid.size();
    for (std::size_t k = 0; k < n; ++k) {
        my.x[k] = mb.x[k] + c * km.x[k];
        my.y[k] = mb.y[k] + c * km.y[k];
        iy.v[k] = ib.v[k] + c * ki.v[k];
    }
}

void rk4_step(State &s, const KernelSpec &spec, double dt) {
    const Grid &g = s.m.grid;
    auto rhs = [&](const VectorField &m, const ScalarField &im, VectorField &dm, ScalarField &di) {
        const VectorField u = smooth(spec, m);
        detail::epdiff_drift_into(m, jacobian(m), u, dm);
        detail::advection_drift_into(gradient(im), u, di);
    };

    VectorField k1m(g), k2m(g), k3m(g), k4m(g), mt(g);
    ScalarField k1i(g), k2i(g), k3i(g), k4i(g), it(g);

    rhs(s.m, s.image, k1m, k1i);
    stage(mt, it, s.m, s.image, 0.5 * dt, k1m, k1i);
    rhs(mt, it, k2m, k2i);
    stage(mt, it, s.m, s.image, 0.5 * dt, k2m, k2i);
    rhs(mt, it, k3m, k3i);
    stage(mt, it, s.m, s.image, dt, k3m, k3i);
    rhs(mt, it, k4m, k4i);

    const double c = dt / 6.0;
    const std::size_t n = g.size();
    for (std::size_t k = 0; k < n; ++k) {
        s.m.x[k] += c * (k1m.x[k] + 2.0 * k2m.x[k] + 2.0 * k3m.x[k] + k4m.x[k]);
        s.m.y[k] += c * (k1m.y[k] + 2.0 * k2m.y[k] + 2.0 * k3m.y[k] + k4m.y[k]);
        s.image.v[k] += c * (k1i.v[k] + 2.0 * k2i.v[k] + 2.0 * k3i.v[k] + k4i.v[k]);
    }
}

} // namespace

State integrate_deterministic(const State &s0, const KernelSpec &spec, int steps) {
    if (steps < 1) {
        throw std::invalid_argument("integrate_deterministic: steps must be >= 1");
    }
    State s = s0;
    const double dt = 1.0 / steps;
    for (int step = 0; step < steps; ++step) {
        rk4_step(s, spec, dt);
        s.t = s0.t + (step + 1) * dt;
        if (!all_finite(s.m) || !all_finite(s.image)) {
            throw blowup_error("deterministic integration blew up at step " +
                                   std::to_string(step),
                               step);
        }
    }
    return s;
}

std::vector<State> integrate_deterministic_path(const State &s0, const KernelSpec &spec,
                                                int steps) {
    if (steps < 1) {
        throw std::invalid_argument("integrate_deterministic_path: steps must be >= 1");
    }
    std::vector<State> path;
    path.reserve(steps + 1);
    path.push_back(s0);
    State s = s0;
    const double dt = 1.0 / steps;
    for (int step = 0; step < steps; ++step) {
        rk4_step(s, spec, dt);
        s.t = s0.t + (step + 1) * dt;
        if (!all_finite(s.m) || !all_finite(s.image)) {
            throw blowup_error("deterministic integration blew up at step " +
                                   std::to_string(step),
                               step);
        }
        path.push_back(s);
    }
    return path;
}

} // namespace sepda
