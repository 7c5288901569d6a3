#include "sepda/sde.hpp"

#include <cmath>
#include <string>

#include "sepda/io.hpp"
#include "sepda/rng.hpp"

namespace sepda {

ScalarField SampleSet::mean_image() const {
    if (images.empty()) {
        throw std::invalid_argument("SampleSet::mean_image: no samples");
    }
    ScalarField mean(grid);
    for (const ScalarField &img : images) {
        for (std::size_t k = 0; k < mean.v.size(); ++k) {
            mean.v[k] += img.v[k];
        }
    }
    const double inv = 1.0 / static_cast<double>(images.size());
    for (double &x : mean.v) {
        x *= inv;
    }
    return mean;
}

std::pair<VectorField, ScalarField> stratonovich_drift(const State &s, const KernelSpec &spec) {
    const VectorField u = smooth(spec, s.m);
    VectorField dm(s.m.grid);
    ScalarField di(s.image.grid);
    detail::epdiff_drift_into(s.m, jacobian(s.m), u, dm);
    detail::advection_drift_into(gradient(s.image), u, di);
    return {std::move(dm), std::move(di)};
}

std::pair<VectorField, ScalarField> diffusion_term(const State &s, const NoiseFieldSet &noise,
                                                   int alpha) {
    const VectorField sigma = noise.field(alpha);
    VectorField bm = coadjoint(s.m, sigma);
    for (double &x : bm.x) {
        x = -x;
    }
    for (double &x : bm.y) {
        x = -x;
    }
    const VectorField g = gradient(s.image);
    ScalarField bi(s.image.grid);
    for (std::size_t k = 0; k < bi.v.size(); ++k) {
        bi.v[k] = -(g.x[k] * sigma.x[k] + g.y[k] * sigma.y[k]);
    }
    return {std::move(bm), std::move(bi)};
}

namespace {

// Drift and accumulated noise increment at one state. The profile loops are
// specialized to axis-aligned fields sigma = psi e_axis and restricted to
// each profile's support box.
struct StateEval {
    VectorField am;
    ScalarField ai;
    VectorField bm; // sum_alpha b_alpha dW^alpha
    ScalarField bi;

    explicit StateEval(const Grid &g) : am(g), ai(g), bm(g), bi(g) {}
};

void accumulate_diffusion(const VectorField &m, const MatrixField &jm, const VectorField &gi,
                          const NoiseFieldSet &noise, std::span<const double> dw,
                          VectorField &bm_acc, ScalarField &bi_acc) {
    const Grid &g = m.grid;
    const int ny = g.ny;
    for (std::size_t a = 0; a < noise.profiles.size(); ++a) {
        const NoiseProfile &p = noise.profiles[a];
        const double w = dw[a];
        if (p.is_e1()) {
            for (int i = p.i0; i < p.i1; ++i) {
                const std::size_t row = static_cast<std::size_t>(i) * ny;
                for (int j = p.j0; j < p.j1; ++j) {
                    const std::size_t k = row + j;
                    const double psi = p.psi[k], dpx = p.dpsi_x[k], dpy = p.dpsi_y[k];
                    const double w1 = psi * jm.xx[k] + 2.0 * (dpx * m.x[k]);
                    const double w2 = psi * jm.yx[k] + dpy * m.x[k] + dpx * m.y[k];
                    bm_acc.x[k] -= w * w1;
                    bm_acc.y[k] -= w * w2;
                    bi_acc.v[k] -= w * (psi * gi.x[k]);
                }
            }
        } else if (p.is_e2()) {
            for (int i = p.i0; i < p.i1; ++i) {
                const std::size_t row = static_cast<std::size_t>(i) * ny;
                for (int j = p.j0; j < p.j1; ++j) {
                    const std::size_t k = row + j;
                    const double psi = p.psi[k], dpx = p.dpsi_x[k], dpy = p.dpsi_y[k];
                    const double w1 = psi * jm.xy[k] + dpx * m.y[k] + dpy * m.x[k];
                    const double w2 = psi * jm.yy[k] + 2.0 * (dpy * m.y[k]);
                    bm_acc.x[k] -= w * w1;
                    bm_acc.y[k] -= w * w2;
                    bi_acc.v[k] -= w * (psi * gi.y[k]);
                }
            }
        } else {
            const double dx = p.dir_x, dy = p.dir_y;
            for (int i = p.i0; i < p.i1; ++i) {
                const std::size_t row = static_cast<std::size_t>(i) * ny;
                for (int j = p.j0; j < p.j1; ++j) {
                    const std::size_t k = row + j;
                    const double psi = p.psi[k], dpx = p.dpsi_x[k], dpy = p.dpsi_y[k];
                    const double div_s = dx * dpx + dy * dpy;
                    const double proj = dx * m.x[k] + dy * m.y[k];
                    const double w1 =
                        psi * (dx * jm.xx[k] + dy * jm.xy[k]) + dpx * proj + div_s * m.x[k];
                    const double w2 =
                        psi * (dx * jm.yx[k] + dy * jm.yy[k]) + dpy * proj + div_s * m.y[k];
                    bm_acc.x[k] -= w * w1;
                    bm_acc.y[k] -= w * w2;
                    bi_acc.v[k] -= w * (psi * (dx * gi.x[k] + dy * gi.y[k]));
                }
            }
        }
    }
}

bool vec_all_zero(const std::vector<double> &v) {
    for (double x : v) {
        if (x != 0.0) {
            return false;
        }
    }
    return true;
}

void eval_state(const VectorField &m, const ScalarField &image, const KernelSpec &spec,
                const NoiseFieldSet &noise, std::span<const double> dw, StateEval &out) {
    const VectorField gi = gradient(image);
    std::fill(out.bm.x.begin(), out.bm.x.end(), 0.0);
    std::fill(out.bm.y.begin(), out.bm.y.end(), 0.0);
    std::fill(out.bi.v.begin(), out.bi.v.end(), 0.0);

    // Every momentum term (drift and noise) is linear in m, so an exactly
    // zero momentum stays zero and the velocity vanishes; only the image
    // noise remains active.
    if (vec_all_zero(m.x) && vec_all_zero(m.y)) {
        std::fill(out.am.x.begin(), out.am.x.end(), 0.0);
        std::fill(out.am.y.begin(), out.am.y.end(), 0.0);
        std::fill(out.ai.v.begin(), out.ai.v.end(), 0.0);
        if (!dw.empty()) {
            for (std::size_t a = 0; a < noise.profiles.size(); ++a) {
                const NoiseProfile &p = noise.profiles[a];
                const double w = dw[a];
                const double dx = p.dir_x, dy = p.dir_y;
                const int ny = m.grid.ny;
                for (int i = p.i0; i < p.i1; ++i) {
                    const std::size_t row = static_cast<std::size_t>(i) * ny;
                    for (int j = p.j0; j < p.j1; ++j) {
                        const std::size_t k = row + j;
                        out.bi.v[k] -= w * (p.psi[k] * (dx * gi.x[k] + dy * gi.y[k]));
                    }
                }
            }
        }
        return;
    }

    const VectorField u = smooth(spec, m);
    const MatrixField jm = jacobian(m);
    detail::epdiff_drift_into(m, jm, u, out.am);
    detail::advection_drift_into(gi, u, out.ai);
    if (!dw.empty()) {
        accumulate_diffusion(m, jm, gi, noise, dw, out.bm, out.bi);
    }
}

void heun_step_into(State &s, const NoiseFieldSet &noise, const KernelSpec &spec, double dt,
                    std::span<const double> dw, StateEval &e1, StateEval &e2, VectorField &mp,
                    ScalarField &ip) {
    const std::size_t n = s.m.grid.size();
    eval_state(s.m, s.image, spec, noise, dw, e1);
    for (std::size_t k = 0; k < n; ++k) {
        mp.x[k] = s.m.x[k] + dt * e1.am.x[k] + e1.bm.x[k];
        mp.y[k] = s.m.y[k] + dt * e1.am.y[k] + e1.bm.y[k];
        ip.v[k] = s.image.v[k] + dt * e1.ai.v[k] + e1.bi.v[k];
    }
    eval_state(mp, ip, spec, noise, dw, e2);
    for (std::size_t k = 0; k < n; ++k) {
        s.m.x[k] += 0.5 * dt * (e1.am.x[k] + e2.am.x[k]) + 0.5 * (e1.bm.x[k] + e2.bm.x[k]);
        s.m.y[k] += 0.5 * dt * (e1.am.y[k] + e2.am.y[k]) + 0.5 * (e1.bm.y[k] + e2.bm.y[k]);
        s.image.v[k] += 0.5 * dt * (e1.ai.v[k] + e2.ai.v[k]) + 0.5 * (e1.bi.v[k] + e2.bi.v[k]);
    }
}

} // namespace

State heun_step(const State &s, const NoiseFieldSet &noise, const KernelSpec &spec, double dt,
                std::span<const double> dw) {
    if (static_cast<int>(dw.size()) != noise.field_count()) {
        throw shape_error("heun_step: dw size does not match noise field count");
    }
    State out = s;
    const Grid &g = s.m.grid;
    StateEval e1(g), e2(g);
    VectorField mp(g);
    ScalarField ip(g);
    heun_step_into(out, noise, spec, dt, dw, e1, e2, mp, ip);
    out.t = s.t + dt;
    return out;
}

State integrate_heun(const State &s0, const KernelSpec &spec, int steps) {
    if (steps < 1) {
        throw std::invalid_argument("integrate_heun: steps must be >= 1");
    }
    NoiseFieldSet empty;
    empty.grid = s0.m.grid;
    State s = s0;
    const Grid &g = s0.m.grid;
    StateEval e1(g), e2(g);
    VectorField mp(g);
    ScalarField ip(g);
    const double dt = 1.0 / steps;
    for (int step = 0; step < steps; ++step) {
        heun_step_into(s, empty, spec, dt, {}, e1, e2, mp, ip);
        s.t = s0.t + (step + 1) * dt;
        if (!all_finite(s.m) || !all_finite(s.image)) {
            throw blowup_error("Heun integration blew up at step " + std::to_string(step), step);
        }
    }
    return s;
}

SampleSet sample_endpoints(const State &s0, const NoiseModel &model, const KernelSpec &spec,
                           const SdeConfig &cfg, const WorkerPool &pool) {
    if (cfg.steps < 1 || cfg.n_samples < 1) {
        throw std::invalid_argument("sample_endpoints: steps and n_samples must be >= 1");
    }
    const Grid &g = s0.m.grid;
    const NoiseFieldSet noise = NoiseFieldSet::from_model(model, g);
    const int p_total = noise.field_count();
    const double dt = 1.0 / cfg.steps;
    const double sqrt_dt = std::sqrt(dt);

    SampleSet set;
    set.grid = g;
    set.images.resize(cfg.n_samples);
    if (cfg.store_momenta) {
        set.momenta.resize(cfg.n_samples);
    }
    set.config_digest = digest_sde_run(s0, spec, cfg);
    set.model_digest = digest_model(model);

    pool.for_index(static_cast<std::size_t>(cfg.n_samples), [&](std::size_t i) {
        NormalStream rng(cfg.base_seed, i);
        State s = s0;
        StateEval e1(g), e2(g);
        VectorField mp(g);
        ScalarField ip(g);
        std::vector<double> dw(p_total);
        for (int step = 0; step < cfg.steps; ++step) {
            for (int a = 0; a < p_total; ++a) {
                dw[a] = sqrt_dt * rng.next();
            }
            heun_step_into(s, noise, spec, dt, dw, e1, e2, mp, ip);
            if (!all_finite(s.m) || !all_finite(s.image)) {
                throw blowup_error("SDE sample " + std::to_string(i) + " blew up at step " +
                                       std::to_string(step),
                                   step, static_cast<long>(i));
            }
        }
        set.images[i] = std::move(s.image);
        if (cfg.store_momenta) {
            set.momenta[i] = std::move(s.m);
        }
    });
    return set;
}

double heun_scalar_step(double x, double b, double dw) {
    const double b1 = b * x;
    const double xt = x + b1 * dw;
    const double b2 = b * xt;
    return x + 0.5 * (b1 + b2) * dw;
}

double euler_maruyama_scalar_step(double x, double b, double dw) {
    return x + b * x * dw;
}

} // namespace sepda
