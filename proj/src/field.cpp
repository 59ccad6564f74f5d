#include "kdvq/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kdvq/fft.hpp"

namespace kdvq {

void validate(const PeriodicField& u) {
    if (u.c.size() != static_cast<size_t>(2 * u.n_max + 1))
        throw std::invalid_argument("PeriodicField: coefficient count mismatch");
    double amax = 0.0;
    for (const cplx& z : u.c) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw std::invalid_argument("PeriodicField: non-finite coefficient");
        amax = std::max(amax, std::abs(z));
    }
    if (u.is_real) {
        double tol = 1e-12 * std::max(amax, 1e-300);
        for (int n = 0; n <= u.n_max; ++n)
            if (std::abs(u.mode(-n) - std::conj(u.mode(n))) > tol)
                throw std::invalid_argument("PeriodicField: Hermitian symmetry violated");
    }
}

PeriodicField zero_like(const PeriodicField& u) { return PeriodicField(u.n_max, u.is_real); }

PeriodicField axpy(const PeriodicField& u, const PeriodicField& v, cplx s) {
    int nm = std::max(u.n_max, v.n_max);
    bool realness = u.is_real && v.is_real && s.imag() == 0.0;
    PeriodicField r(nm, realness);
    for (int n = -u.n_max; n <= u.n_max; ++n) r.mode(n) += u.mode(n);
    for (int n = -v.n_max; n <= v.n_max; ++n) r.mode(n) += s * v.mode(n);
    return r;
}

PeriodicField add(const PeriodicField& u, const PeriodicField& v) { return axpy(u, v, 1.0); }
PeriodicField sub(const PeriodicField& u, const PeriodicField& v) { return axpy(u, v, -1.0); }

PeriodicField scale(const PeriodicField& u, cplx s) {
    PeriodicField r = u;
    r.is_real = u.is_real && s.imag() == 0.0;
    for (cplx& z : r.c) z *= s;
    return r;
}

cplx inner(const PeriodicField& u, const PeriodicField& v) {
    int nm = std::min(u.n_max, v.n_max);
    cplx acc = 0.0;
    for (int n = -nm; n <= nm; ++n) acc += u.mode(n) * std::conj(v.mode(n));
    return acc;
}

double sobolev_norm(const PeriodicField& u, double s) {
    double acc = 0.0;
    for (int n = -u.n_max; n <= u.n_max; ++n)
        acc += std::norm(u.mode(n)) * std::pow(1.0 + double(n) * n, s);
    return std::sqrt(acc);
}

PeriodicField dx(const PeriodicField& u, int order) {
    PeriodicField r = u;
    for (int n = -u.n_max; n <= u.n_max; ++n) {
        cplx in{0.0, double(n)};
        cplx f = 1.0;
        for (int k = 0; k < order; ++k) f *= in;
        r.mode(n) = u.mode(n) * f;
    }
    return r;
}

PeriodicField dx_inverse(const PeriodicField& u) {
    PeriodicField r = u;
    r.mode(0) = 0.0; // mean mode projected away before inverting
    for (int n = -u.n_max; n <= u.n_max; ++n)
        if (n != 0) r.mode(n) = u.mode(n) / cplx{0.0, double(n)};
    return r;
}

PeriodicField pi0(const PeriodicField& u) {
    PeriodicField r = u;
    r.mode(0) = 0.0;
    return r;
}

PeriodicField lambda_s(const PeriodicField& u, double s) {
    PeriodicField r = u;
    for (int n = -u.n_max; n <= u.n_max; ++n)
        r.mode(n) = u.mode(n) * std::pow(1.0 + double(n) * n, 0.5 * s);
    return r;
}

PeriodicField truncate(const PeriodicField& u, int n_max) {
    PeriodicField r(n_max, u.is_real);
    int nm = std::min(n_max, u.n_max);
    for (int n = -nm; n <= nm; ++n) r.mode(n) = u.mode(n);
    return r;
}

std::vector<cplx> grid_eval(const PeriodicField& u, int p) {
    if (p < 2 * u.n_max + 1)
        throw std::invalid_argument("grid_eval: grid too coarse for the truncation");
    std::vector<cplx> spec(static_cast<size_t>(p), cplx{0.0, 0.0});
    for (int n = -u.n_max; n <= u.n_max; ++n)
        spec[static_cast<size_t>(((n % p) + p) % p)] += u.mode(n);
    fft_inverse(spec); // sum_k S_k e^{+2 pi i jk/p} = u(x_j)
    return spec;
}

PeriodicField field_from_samples(const std::vector<cplx>& samples, int n_max, bool is_real) {
    int p = static_cast<int>(samples.size());
    if (p < 2 * n_max + 1)
        throw std::invalid_argument("field_from_samples: too few samples");
    std::vector<cplx> spec = samples;
    fft_forward(spec);
    PeriodicField r(n_max, is_real);
    for (int n = -n_max; n <= n_max; ++n)
        r.mode(n) = spec[static_cast<size_t>(((n % p) + p) % p)] / double(p);
    if (is_real) {
        r.mode(0) = cplx{r.mode(0).real(), 0.0};
        for (int n = 1; n <= n_max; ++n) {
            cplx avg = 0.5 * (r.mode(n) + std::conj(r.mode(-n)));
            r.mode(n) = avg;
            r.mode(-n) = std::conj(avg);
        }
    }
    return r;
}

cplx eval_at(const PeriodicField& u, double x) {
    cplx z = std::polar(1.0, x);
    cplx zi = std::polar(1.0, -double(u.n_max) * x);
    cplx acc = 0.0;
    for (int n = -u.n_max; n <= u.n_max; ++n) {
        acc += u.mode(n) * zi;
        zi *= z;
    }
    return acc;
}

int padded_size(int nm) { return next_fast_size(4 * nm + 4); }

PeriodicField multiply(const PeriodicField& u, const PeriodicField& v) {
    int nm = std::max(u.n_max, v.n_max);
    // modes <= nm of the product are alias-free when p > u.n_max + v.n_max + nm
    int p = next_fast_size(u.n_max + v.n_max + nm + 2);
    std::vector<cplx> a = grid_eval(u, p), b = grid_eval(v, p);
    for (int i = 0; i < p; ++i) a[static_cast<size_t>(i)] *= b[static_cast<size_t>(i)];
    return field_from_samples(a, nm, u.is_real && v.is_real);
}

PeriodicField pointwise(const std::vector<const PeriodicField*>& args,
                        const std::function<double(const std::vector<double>&, double)>& f,
                        int n_max_out, int grid_p) {
    int nmx = n_max_out;
    for (const PeriodicField* a : args) nmx = std::max(nmx, a->n_max);
    int p = grid_p > 0 ? grid_p : padded_size(nmx);
    std::vector<std::vector<cplx>> vals;
    vals.reserve(args.size());
    for (const PeriodicField* a : args) vals.push_back(grid_eval(*a, p));
    std::vector<cplx> out(static_cast<size_t>(p));
    std::vector<double> z(args.size());
    for (int i = 0; i < p; ++i) {
        for (size_t j = 0; j < args.size(); ++j) z[j] = vals[j][static_cast<size_t>(i)].real();
        out[static_cast<size_t>(i)] = f(z, 6.283185307179586476925286766559 * i / p);
    }
    return field_from_samples(out, n_max_out, true);
}

namespace {
int compose_grid(int nm) { return next_fast_size(std::max(64, 4 * (2 * nm + 1))); }
} // namespace

PeriodicField compose_with_diffeo(const PeriodicField& h, const PeriodicField& beta) {
    int nm = std::max(h.n_max, beta.n_max);
    int p = compose_grid(nm);
    std::vector<cplx> slope = grid_eval(dx(beta), p);
    for (const cplx& s : slope)
        if (std::abs(s.real()) > 0.5 + 1e-12)
            throw std::domain_error("compose_with_diffeo: |beta_x| <= 1/2 violated");
    std::vector<cplx> disp = grid_eval(beta, p);
    std::vector<cplx> out(static_cast<size_t>(p));
    double step = 6.283185307179586476925286766559 / p;
    for (int i = 0; i < p; ++i)
        out[static_cast<size_t>(i)] = eval_at(h, step * i + disp[static_cast<size_t>(i)].real());
    return field_from_samples(out, h.n_max, h.is_real && beta.is_real);
}

PeriodicField invert_diffeo(const PeriodicField& beta, int n_max_out) {
    if (n_max_out <= 0) n_max_out = 2 * beta.n_max + 8;
    int p = compose_grid(n_max_out);
    std::vector<cplx> slope = grid_eval(dx(beta), p);
    for (const cplx& s : slope)
        if (std::abs(s.real()) > 0.5 + 1e-12)
            throw std::domain_error("invert_diffeo: |beta_x| <= 1/2 violated");
    double step = 6.283185307179586476925286766559 / p;
    std::vector<double> bt(static_cast<size_t>(p), 0.0);
    double relax = 1.0;
    double prev = 1e300;
    for (int it = 0; it < 200; ++it) {
        double delta = 0.0;
        for (int i = 0; i < p; ++i) {
            double target = -eval_at(beta, step * i + bt[static_cast<size_t>(i)]).real();
            double upd = relax * (target - bt[static_cast<size_t>(i)]);
            bt[static_cast<size_t>(i)] += upd;
            delta = std::max(delta, std::abs(upd));
        }
        if (delta < 1e-12) {
            std::vector<cplx> samples(bt.begin(), bt.end());
            return field_from_samples(samples, n_max_out, true);
        }
        if (delta > prev) relax = 0.5; // cannot happen under the slope bound; defensive
        prev = delta;
    }
    throw std::runtime_error("invert_diffeo: fixed point did not converge");
}

TameReport verify_tame_product(const PeriodicField& u, const PeriodicField& v, double s,
                               double s0) {
    if (!(s >= s0 && s0 > 0.5))
        throw std::invalid_argument("verify_tame_product: need s >= s0 > 1/2");
    PeriodicField uv = multiply(u, v);
    double den = sobolev_norm(u, s) * sobolev_norm(v, s0) + sobolev_norm(u, s0) * sobolev_norm(v, s);
    TameReport rep;
    rep.threshold = 2.0;
    rep.ratio = den > 0.0 ? sobolev_norm(uv, s) / den : 0.0;
    rep.flagged = rep.ratio > rep.threshold;
    return rep;
}

PeriodicField random_real_field(Rng& rng, int n_max, double decay) {
    PeriodicField u(n_max, true);
    u.mode(0) = rng.normal();
    for (int n = 1; n <= n_max; ++n) {
        double a = rng.normal(), b = rng.normal();
        double w = std::pow(1.0 + double(n) * n, -0.5 * decay);
        u.mode(n) = cplx{0.5 * a * w, -0.5 * b * w};
        u.mode(-n) = std::conj(u.mode(n));
    }
    return u;
}

PeriodicField random_complex_field(Rng& rng, int n_max, double decay) {
    PeriodicField u(n_max, false);
    for (int n = -n_max; n <= n_max; ++n) {
        double a = rng.normal(), b = rng.normal();
        double w = std::pow(1.0 + double(n) * n, -0.5 * decay);
        u.mode(n) = cplx{a * w / std::sqrt(2.0), b * w / std::sqrt(2.0)};
    }
    return u;
}

// ---------------------------------------------------------------------------

void require_same_grid(const SpaceTimeField& u, const SpaceTimeField& v) {
    if (!(u.grid == v.grid) || u.n_max() != v.n_max())
        throw std::invalid_argument("SpaceTimeField: grid mismatch");
}

double traj_norm(const SpaceTimeField& u, double s) {
    double m = 0.0;
    for (const PeriodicField& f : u.snaps) m = std::max(m, sobolev_norm(f, s));
    return m;
}

SpaceTimeField st_map(const SpaceTimeField& u,
                      const std::function<PeriodicField(const PeriodicField&)>& f) {
    SpaceTimeField r;
    r.grid = u.grid;
    r.snaps.reserve(u.snaps.size());
    for (const PeriodicField& s : u.snaps) r.snaps.push_back(f(s));
    return r;
}

SpaceTimeField st_axpy(const SpaceTimeField& u, const SpaceTimeField& v, cplx s) {
    if (!(u.grid == v.grid)) throw std::invalid_argument("st_axpy: grid mismatch");
    SpaceTimeField r;
    r.grid = u.grid;
    r.snaps.reserve(u.snaps.size());
    for (size_t k = 0; k < u.snaps.size(); ++k) r.snaps.push_back(axpy(u.snaps[k], v.snaps[k], s));
    return r;
}

SpaceTimeField st_add(const SpaceTimeField& u, const SpaceTimeField& v) { return st_axpy(u, v, 1.0); }
SpaceTimeField st_sub(const SpaceTimeField& u, const SpaceTimeField& v) { return st_axpy(u, v, -1.0); }

SpaceTimeField st_scale(const SpaceTimeField& u, cplx s) {
    return st_map(u, [s](const PeriodicField& f) { return scale(f, s); });
}

SpaceTimeField st_multiply(const SpaceTimeField& u, const SpaceTimeField& v) {
    if (!(u.grid == v.grid)) throw std::invalid_argument("st_multiply: grid mismatch");
    SpaceTimeField r;
    r.grid = u.grid;
    r.snaps.reserve(u.snaps.size());
    for (size_t k = 0; k < u.snaps.size(); ++k) r.snaps.push_back(multiply(u.snaps[k], v.snaps[k]));
    return r;
}

SpaceTimeField st_dx(const SpaceTimeField& u, int order) {
    return st_map(u, [order](const PeriodicField& f) { return dx(f, order); });
}

PeriodicField snapshot_at(const SpaceTimeField& u, double t) {
    int M = u.grid.M;
    if (M < 3) throw std::invalid_argument("snapshot_at: need at least 4 time nodes");
    double dt = u.grid.dt();
    double tc = std::min(std::max(t, 0.0), u.grid.T);
    int i0 = std::min(std::max(static_cast<int>(std::floor(tc / dt)) - 1, 0), M - 3);
    double w[4];
    for (int j = 0; j < 4; ++j) {
        double tj = u.grid.node(i0 + j);
        double num = 1.0, den = 1.0;
        for (int i = 0; i < 4; ++i) {
            if (i == j) continue;
            num *= tc - u.grid.node(i0 + i);
            den *= tj - u.grid.node(i0 + i);
        }
        w[j] = num / den;
    }
    PeriodicField r = scale(u.at(i0), w[0]);
    for (int j = 1; j < 4; ++j) r = axpy(r, u.at(i0 + j), w[j]);
    r.is_real = u.at(i0).is_real;
    return r;
}

namespace {
// 4th-order one-sided and centered first-derivative stencils over 5 nodes.
const double kEdge0[5] = {-25.0, 48.0, -36.0, 16.0, -3.0};
const double kEdge1[5] = {-3.0, -10.0, 18.0, -6.0, 1.0};
} // namespace

std::vector<double> dt_samples(const std::vector<double>& f, double dt) {
    int M = static_cast<int>(f.size()) - 1;
    if (M < 4) throw std::invalid_argument("dt_samples: need at least 5 nodes");
    std::vector<double> d(f.size());
    double h12 = 1.0 / (12.0 * dt);
    for (int k = 2; k <= M - 2; ++k)
        d[static_cast<size_t>(k)] =
            (f[static_cast<size_t>(k - 2)] - 8.0 * f[static_cast<size_t>(k - 1)] +
             8.0 * f[static_cast<size_t>(k + 1)] - f[static_cast<size_t>(k + 2)]) * h12;
    auto edge = [&](int at, const double* w, bool flip) {
        double acc = 0.0;
        for (int j = 0; j < 5; ++j) {
            int idx = flip ? M - j : j;
            acc += w[j] * f[static_cast<size_t>(idx)];
        }
        d[static_cast<size_t>(at)] = (flip ? -acc : acc) * h12;
    };
    edge(0, kEdge0, false);
    edge(1, kEdge1, false);
    edge(M - 1, kEdge1, true);
    edge(M, kEdge0, true);
    return d;
}

SpaceTimeField dt_field(const SpaceTimeField& u) {
    int M = u.grid.M;
    if (M < 4) throw std::invalid_argument("dt_field: need at least 5 time nodes");
    SpaceTimeField r(u.grid, u.n_max(), u.snaps[0].is_real);
    double h12 = 1.0 / (12.0 * u.grid.dt());
    int nm = u.n_max();
    for (int n = -nm; n <= nm; ++n) {
        for (int k = 2; k <= M - 2; ++k)
            r.at(k).mode(n) = (u.at(k - 2).mode(n) - 8.0 * u.at(k - 1).mode(n) +
                               8.0 * u.at(k + 1).mode(n) - u.at(k + 2).mode(n)) * h12;
        cplx e0 = 0.0, e1 = 0.0, eM1 = 0.0, eM = 0.0;
        for (int j = 0; j < 5; ++j) {
            e0 += kEdge0[j] * u.at(j).mode(n);
            e1 += kEdge1[j] * u.at(j).mode(n);
            eM1 += kEdge1[j] * u.at(M - j).mode(n);
            eM += kEdge0[j] * u.at(M - j).mode(n);
        }
        r.at(0).mode(n) = e0 * h12;
        r.at(1).mode(n) = e1 * h12;
        r.at(M - 1).mode(n) = -eM1 * h12;
        r.at(M).mode(n) = -eM * h12;
    }
    return r;
}

namespace {
// Integral over one cell of the cubic through 4 stencil nodes; offsets are
// relative to the cell and weights are in units of dt.
const double kCellFirst[4] = {9.0 / 24.0, 19.0 / 24.0, -5.0 / 24.0, 1.0 / 24.0};
const double kCellMid[4] = {-1.0 / 24.0, 13.0 / 24.0, 13.0 / 24.0, -1.0 / 24.0};
const double kCellLast[4] = {1.0 / 24.0, -5.0 / 24.0, 19.0 / 24.0, 9.0 / 24.0};

void cell_stencil(int i, int M, const double** w, int* base) {
    if (i == 0) {
        *w = kCellFirst;
        *base = 0;
    } else if (i == M - 1) {
        *w = kCellLast;
        *base = M - 3;
    } else {
        *w = kCellMid;
        *base = i - 1;
    }
}
} // namespace

std::vector<double> cumulative_integral(const std::vector<double>& f, double dt) {
    int M = static_cast<int>(f.size()) - 1;
    if (M < 3) throw std::invalid_argument("cumulative_integral: need at least 4 nodes");
    std::vector<double> out(f.size(), 0.0);
    double acc = 0.0;
    for (int i = 0; i < M; ++i) {
        const double* w;
        int base;
        cell_stencil(i, M, &w, &base);
        double cell = 0.0;
        for (int j = 0; j < 4; ++j) cell += w[j] * f[static_cast<size_t>(base + j)];
        acc += cell * dt;
        out[static_cast<size_t>(i + 1)] = acc;
    }
    return out;
}

std::vector<double> quad_weights(int M, double dt) {
    if (M < 3) throw std::invalid_argument("quad_weights: need at least 4 nodes");
    std::vector<double> q(static_cast<size_t>(M) + 1, 0.0);
    for (int i = 0; i < M; ++i) {
        const double* w;
        int base;
        cell_stencil(i, M, &w, &base);
        for (int j = 0; j < 4; ++j) q[static_cast<size_t>(base + j)] += w[j] * dt;
    }
    return q;
}

SpaceTimeField random_st_field(Rng& rng, const TimeGrid& g, int n_max, double decay,
                               double t_freq) {
    PeriodicField u0 = random_real_field(rng, n_max, decay);
    PeriodicField v = random_real_field(rng, n_max, decay);
    PeriodicField w = random_real_field(rng, n_max, decay);
    SpaceTimeField r(g, n_max, true);
    for (int k = 0; k <= g.M; ++k) {
        double t = g.node(k);
        r.at(k) = add(u0, axpy(scale(v, std::cos(t_freq * t)), w, std::sin(t_freq * t)));
    }
    return r;
}

} // namespace kdvq
