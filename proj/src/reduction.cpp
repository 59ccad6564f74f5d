#include "kdvq/reduction.hpp"

#include <algorithm>

#include "kdvq/fft.hpp"
#include <cmath>
#include <stdexcept>

namespace kdvq {

namespace {

// generous sampling for the non-polynomial pointwise maps (cube roots, exp)
int wide_grid(int n_max) { return next_fast_size(8 * (n_max + 1)); }

void check_grids(const LinearizedCoefficients& c) {
    require_same_grid(c.a0, c.a1);
    require_same_grid(c.a0, c.a2);
    require_same_grid(c.a0, c.a3);
}

// safeguarded Newton for psi(t) = tau, derivative psi' = b/m
double invert_psi(const ScalarTraj& psi, const ScalarTraj& b, double m, double tau) {
    double T = psi.grid.T;
    double lo = 0.0, hi = T;
    double t = std::min(std::max(tau, 0.0), T);
    for (int it = 0; it < 100; ++it) {
        double f = psi.eval(t) - tau;
        if (std::abs(f) < 1e-13 * std::max(1.0, T)) return t;
        if (f > 0.0) hi = t; else lo = t;
        double d = b.eval(t) / m;
        double tn = t - f / d;
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi); // bisection fallback
        t = tn;
    }
    throw std::runtime_error("time reparametrization: inversion stalled");
}

PeriodicField sinv_snapshot(const PeriodicField& g, const PeriodicField& gam) {
    PeriodicField acc = g, term = g;
    double g0 = sobolev_norm(g, 0.0);
    for (int it = 0; it < 80; ++it) {
        term = scale(multiply(gam, dx_inverse(term)), -1.0);
        if (term.n_max != g.n_max) term = truncate(term, g.n_max);
        acc = add(acc, term);
        if (sobolev_norm(term, 0.0) <= 1e-15 * g0) return acc;
    }
    throw std::runtime_error("order-one normalization: Neumann series stalled");
}

} // namespace

double ScalarTraj::eval(double t) const {
    int M = grid.M;
    if (static_cast<int>(v.size()) != M + 1)
        throw std::invalid_argument("ScalarTraj: sample count mismatch");
    double dt = grid.dt();
    double tc = std::min(std::max(t, 0.0), grid.T);
    int i0 = std::min(std::max(static_cast<int>(std::floor(tc / dt)) - 1, 0), M - 3);
    double acc = 0.0;
    for (int j = 0; j < 4; ++j) {
        double tj = grid.node(i0 + j);
        double w = 1.0;
        for (int i = 0; i < 4; ++i) {
            if (i == j) continue;
            w *= (tc - grid.node(i0 + i)) / (tj - grid.node(i0 + i));
        }
        acc += w * v[static_cast<size_t>(i0 + j)];
    }
    return acc;
}

SpaceDiffeo step1_space_diffeo(const SpaceTimeField& a3) {
    SpaceDiffeo out;
    int N = a3.n_max();
    int M = a3.grid.M;
    int p = wide_grid(N);
    out.b.grid = a3.grid;
    out.b.v.resize(static_cast<size_t>(M) + 1);
    out.beta.grid = out.beta_tilde.grid = a3.grid;
    for (int k = 0; k <= M; ++k) {
        std::vector<cplx> s = grid_eval(a3.at(k), p);
        for (const cplx& z : s)
            if (1.0 + z.real() <= 0.5)
                throw std::domain_error("space diffeomorphism: 1 + a3 degenerates");
        // w = (1+a3)^{-1/3}; b = mean(w)^{-3}; beta_x = b^{1/3} w - 1 is then
        // mean-free by construction
        PeriodicField w = pointwise({&a3.at(k)}, [](const std::vector<double>& z, double) {
            return std::pow(1.0 + z[0], -1.0 / 3.0);
        }, N, p);
        double mw = mean(w).real();
        out.b.v[static_cast<size_t>(k)] = 1.0 / (mw * mw * mw);
        PeriodicField rho0 = scale(w, 1.0 / mw);
        rho0.mode(0) -= 1.0;
        out.beta.snaps.push_back(dx_inverse(rho0));
        out.beta_tilde.snaps.push_back(invert_diffeo(out.beta.snaps.back()));
    }
    return out;
}

TimeReparam step2_time_reparam(const ScalarTraj& b) {
    TimeReparam out;
    int M = b.grid.M;
    double T = b.grid.T;
    std::vector<double> raw = cumulative_integral(b.v, b.grid.dt());
    out.m = raw[static_cast<size_t>(M)] / T;
    out.psi.grid = out.rho.grid = b.grid;
    out.psi.v.resize(raw.size());
    for (size_t k = 0; k < raw.size(); ++k) out.psi.v[k] = raw[k] / out.m;
    out.rho.v.resize(raw.size());
    for (int k = 0; k <= M; ++k) {
        double t = invert_psi(out.psi, b, out.m, b.grid.node(k));
        out.rho.v[static_cast<size_t>(k)] = b.eval(t) / out.m; // psi' o psi^{-1}
    }
    return out;
}

SpaceTimeField step3_multiplication(const SpaceTimeField& a8, double m) {
    int N = a8.n_max();
    int p = wide_grid(N);
    SpaceTimeField q;
    q.grid = a8.grid;
    for (int k = 0; k <= a8.grid.M; ++k) {
        double scale_norm = std::max(1.0, sobolev_norm(a8.at(k), 0.0));
        if (std::abs(mean(a8.at(k))) > 1e-8 * scale_norm)
            throw std::domain_error("second-order elimination: coefficient has nonzero mean");
        PeriodicField prim = scale(dx_inverse(a8.at(k)), -1.0 / (3.0 * m));
        q.snaps.push_back(pointwise({&prim}, [](const std::vector<double>& z, double) {
            return std::exp(z[0]);
        }, N, p));
    }
    return q;
}

ScalarTraj step4_translation(const SpaceTimeField& a12) {
    ScalarTraj p;
    p.grid = a12.grid;
    std::vector<double> means(static_cast<size_t>(a12.grid.M) + 1);
    for (int k = 0; k <= a12.grid.M; ++k) means[static_cast<size_t>(k)] = mean(a12.at(k)).real();
    std::vector<double> cum = cumulative_integral(means, a12.grid.dt());
    p.v.resize(cum.size());
    for (size_t k = 0; k < cum.size(); ++k) p.v[k] = -cum[k];
    return p;
}

OrderOne step5_order_one(const SpaceTimeField& a14, const SpaceTimeField& a15, double m) {
    require_same_grid(a14, a15);
    OrderOne out;
    out.gamma.grid = a14.grid;
    for (int k = 0; k <= a14.grid.M; ++k)
        out.gamma.snaps.push_back(scale(dx_inverse(a14.at(k)), -1.0 / (3.0 * m)));
    SpaceTimeField gt = dt_field(out.gamma);
    out.c17.grid = out.a18.grid = a14.grid;
    double worst = 0.0;
    int p = padded_size(a14.n_max());
    for (int k = 0; k <= a14.grid.M; ++k) {
        const PeriodicField& g = out.gamma.at(k);
        out.c17.snaps.push_back(
            axpy(scale(dx(g, 2), 3.0 * m), multiply(a14.at(k), g), 1.0));
        PeriodicField a18k = axpy(gt.at(k), dx(g, 3), m);
        a18k = add(a18k, multiply(a14.at(k), dx(g)));
        a18k = add(a18k, multiply(a15.at(k), g));
        out.a18.snaps.push_back(a18k);
        for (const cplx& z : grid_eval(g, p)) worst = std::max(worst, std::abs(z.real()));
    }
    out.neumann_estimate = worst;
    return out;
}

namespace {

// snapshot-wise composition h(t, x + disp(t,x))
SpaceTimeField compose_st(const SpaceTimeField& h, const SpaceTimeField& disp) {
    SpaceTimeField r;
    r.grid = h.grid;
    r.snaps.reserve(h.snaps.size());
    for (size_t k = 0; k < h.snaps.size(); ++k)
        r.snaps.push_back(compose_with_diffeo(h.snaps[k], disp.snaps[k]));
    return r;
}

} // namespace

ReductionChain build_chain(const LinearizedCoefficients& coeffs) {
    check_grids(coeffs);
    ReductionChain ch;
    ch.grid = coeffs.a3.grid;
    ch.n_max = coeffs.a3.n_max();
    ch.coeffs = coeffs;
    if (traj_norm(coeffs.a3, 3.0) > 0.1)
        throw std::domain_error("reduction: leading coefficient too large (||a3||_{T,3} > 0.1)");

    SpaceDiffeo s1 = step1_space_diffeo(coeffs.a3);
    ch.beta = s1.beta;
    ch.beta_tilde = s1.beta_tilde;
    ch.b = s1.b;

    // coefficients of the conjugated operator in the new space variable
    SpaceTimeField bx = st_dx(ch.beta), bxx = st_dx(ch.beta, 2), bxxx = st_dx(ch.beta, 3);
    SpaceTimeField bt = dt_field(ch.beta);
    SpaceTimeField g5, g6;
    g5.grid = g6.grid = ch.grid;
    for (int k = 0; k <= ch.grid.M; ++k) {
        // a2 (1+beta_x)^2 + 3 (1+a3) beta_xx (1+beta_x), one alias-free pass
        g5.snaps.push_back(pointwise(
            {&coeffs.a2.at(k), &coeffs.a3.at(k), &bxx.at(k), &bx.at(k)},
            [](const std::vector<double>& z, double) {
                double j = 1.0 + z[3];
                return z[0] * j * j + 3.0 * (1.0 + z[1]) * z[2] * j;
            }, ch.n_max));
        // beta_t + (1+a3) beta_xxx + a2 beta_xx + a1 (1+beta_x)
        g6.snaps.push_back(pointwise(
            {&bt.at(k), &coeffs.a3.at(k), &bxxx.at(k), &coeffs.a2.at(k), &bxx.at(k),
             &coeffs.a1.at(k), &bx.at(k)},
            [](const std::vector<double>& z, double) {
                return z[0] + (1.0 + z[1]) * z[2] + z[3] * z[4] + z[5] * (1.0 + z[6]);
            }, ch.n_max));
    }
    ch.a5 = compose_st(g5, ch.beta_tilde);
    ch.a6 = compose_st(g6, ch.beta_tilde);
    ch.a7 = compose_st(coeffs.a0, ch.beta_tilde);

    TimeReparam s2 = step2_time_reparam(ch.b);
    ch.m = s2.m;
    ch.psi = s2.psi;
    ch.rho = s2.rho;

    // re-sample onto the new time variable and divide by rho; zero space
    // means survive both operations exactly
    auto to_tau = [&](const SpaceTimeField& f) {
        SpaceTimeField r;
        r.grid = ch.grid;
        for (int k = 0; k <= ch.grid.M; ++k) {
            double t = invert_psi(ch.psi, ch.b, ch.m, ch.grid.node(k));
            r.snaps.push_back(scale(snapshot_at(f, t), 1.0 / ch.rho.v[static_cast<size_t>(k)]));
        }
        return r;
    };
    ch.a8 = to_tau(ch.a5);
    ch.a9 = to_tau(ch.a6);
    ch.a10 = to_tau(ch.a7);

    ch.q = step3_multiplication(ch.a8, ch.m);
    ch.q_inv.grid = ch.grid;
    int wp = wide_grid(ch.n_max);
    for (int k = 0; k <= ch.grid.M; ++k) {
        for (const cplx& z : grid_eval(ch.q.at(k), wp))
            if (z.real() <= 0.0) throw std::domain_error("multiplier q lost positivity");
        ch.q_inv.snaps.push_back(pointwise({&ch.q.at(k)}, [](const std::vector<double>& z, double) {
            return 1.0 / z[0];
        }, ch.n_max, wp));
    }
    SpaceTimeField qt = dt_field(ch.q);
    ch.a12.grid = ch.a13.grid = ch.grid;
    for (int k = 0; k <= ch.grid.M; ++k) {
        const PeriodicField& qk = ch.q.at(k);
        PeriodicField qy = dx(qk), qyy = dx(qk, 2);
        // a9 + (2 a8 q_y + 3 m q_yy) / q
        PeriodicField num = axpy(scale(multiply(ch.a8.at(k), qy), 2.0), qyy, 3.0 * ch.m);
        ch.a12.snaps.push_back(add(ch.a9.at(k),
            pointwise({&num, &qk}, [](const std::vector<double>& z, double) {
                return z[0] / z[1];
            }, ch.n_max, wp)));
        // (q_t + m q_yyy + a8 q_yy + a9 q_y + a10 q) / q
        PeriodicField lq = axpy(qt.at(k), dx(qk, 3), ch.m);
        lq = add(lq, multiply(ch.a8.at(k), qyy));
        lq = add(lq, multiply(ch.a9.at(k), qy));
        lq = add(lq, multiply(ch.a10.at(k), qk));
        ch.a13.snaps.push_back(pointwise({&lq, &qk}, [](const std::vector<double>& z, double) {
            return z[0] / z[1];
        }, ch.n_max, wp));
    }

    ch.p = step4_translation(ch.a12);
    ch.a14.grid = ch.a15.grid = ch.grid;
    for (int k = 0; k <= ch.grid.M; ++k) {
        double pk = ch.p.v[static_cast<size_t>(k)];
        auto translate_back = [&](const PeriodicField& f) {
            PeriodicField r = f;
            for (int n = -r.n_max; n <= r.n_max; ++n)
                r.mode(n) *= std::polar(1.0, -double(n) * pk);
            return r;
        };
        PeriodicField a14k = translate_back(ch.a12.at(k));
        a14k.mode(0) += -mean(ch.a12.at(k)); // p'(tau_k), analytically
        ch.a14.snaps.push_back(a14k);
        ch.a15.snaps.push_back(translate_back(ch.a13.at(k)));
    }

    OrderOne s5 = step5_order_one(ch.a14, ch.a15, ch.m);
    ch.gamma = s5.gamma;
    ch.c17 = s5.c17;
    ch.a18 = s5.a18;
    ch.neumann_estimate = s5.neumann_estimate;
    if (ch.neumann_estimate >= 0.5)
        throw std::domain_error("reduction: order-one normalization not contractive");
    return ch;
}

// ---------------------------------------------------------------------------

SpaceTimeField apply_A(const SpaceTimeField& h, const ReductionChain& chain, Variant v) {
    SpaceTimeField r;
    r.grid = h.grid;
    r.snaps.reserve(h.snaps.size());
    for (size_t k = 0; k < h.snaps.size(); ++k) {
        const PeriodicField& disp =
            (v == Variant::plain || v == Variant::inverse_transpose) ? chain.beta.snaps[k]
                                                                     : chain.beta_tilde.snaps[k];
        PeriodicField moved = compose_with_diffeo(h.snaps[k], disp);
        if (v == Variant::transpose || v == Variant::inverse_transpose)
            moved = truncate(add(moved, multiply(dx(disp), moved)), h.snaps[k].n_max);
        r.snaps.push_back(moved);
    }
    return r;
}

SpaceTimeField apply_B(const SpaceTimeField& h, const ReductionChain& chain, Variant v) {
    if (v == Variant::transpose || v == Variant::inverse_transpose)
        throw std::invalid_argument("time resampling: transpose variants undefined");
    SpaceTimeField r;
    r.grid = h.grid;
    for (int k = 0; k <= h.grid.M; ++k) {
        double t = h.grid.node(k);
        double s = (v == Variant::plain) ? chain.psi.eval(t)
                                         : invert_psi(chain.psi, chain.b, chain.m, t);
        r.snaps.push_back(snapshot_at(h, s));
    }
    return r;
}

SpaceTimeField apply_rho(const SpaceTimeField& h, const ReductionChain& chain, Variant v) {
    SpaceTimeField r;
    r.grid = h.grid;
    bool inv = (v == Variant::inverse || v == Variant::inverse_transpose);
    for (int k = 0; k <= h.grid.M; ++k) {
        double f = chain.rho.v[static_cast<size_t>(k)];
        r.snaps.push_back(scale(h.snaps[static_cast<size_t>(k)], inv ? 1.0 / f : f));
    }
    return r;
}

SpaceTimeField apply_M(const SpaceTimeField& h, const ReductionChain& chain, Variant v) {
    bool inv = (v == Variant::inverse || v == Variant::inverse_transpose);
    const SpaceTimeField& mult = inv ? chain.q_inv : chain.q;
    SpaceTimeField r;
    r.grid = h.grid;
    for (size_t k = 0; k < h.snaps.size(); ++k)
        r.snaps.push_back(truncate(multiply(mult.snaps[k], h.snaps[k]), h.snaps[k].n_max));
    return r;
}

SpaceTimeField apply_T(const SpaceTimeField& h, const ReductionChain& chain, Variant v) {
    bool fwd = (v == Variant::plain || v == Variant::inverse_transpose);
    SpaceTimeField r = h;
    for (int k = 0; k <= h.grid.M; ++k) {
        double pk = chain.p.v[static_cast<size_t>(k)] * (fwd ? 1.0 : -1.0);
        PeriodicField& s = r.snaps[static_cast<size_t>(k)];
        for (int n = -s.n_max; n <= s.n_max; ++n) s.mode(n) *= std::polar(1.0, double(n) * pk);
    }
    return r;
}

PeriodicField apply_S_snapshot(const PeriodicField& h, const ReductionChain& chain, int k,
                               Variant v) {
    const PeriodicField& g = chain.gamma.snaps[static_cast<size_t>(k)];
    if (v == Variant::plain)
        return truncate(add(h, multiply(g, dx_inverse(h))), h.n_max);
    if (v == Variant::inverse) return sinv_snapshot(h, g);
    throw std::invalid_argument("order-one normalization: transpose variants undefined");
}

SpaceTimeField apply_S(const SpaceTimeField& h, const ReductionChain& chain, Variant v) {
    SpaceTimeField r;
    r.grid = h.grid;
    for (int k = 0; k <= h.grid.M; ++k)
        r.snaps.push_back(apply_S_snapshot(h.snaps[static_cast<size_t>(k)], chain, k, v));
    return r;
}

PeriodicField apply_R_snapshot(const PeriodicField& h, const ReductionChain& chain, int k) {
    size_t i = static_cast<size_t>(k);
    PeriodicField g = multiply(chain.a15.snaps[i], h);
    g = add(g, multiply(chain.c17.snaps[i], pi0(h)));
    g = add(g, multiply(chain.a18.snaps[i], dx_inverse(h)));
    return sinv_snapshot(truncate(g, h.n_max), chain.gamma.snaps[i]);
}

SpaceTimeField apply_R(const SpaceTimeField& h, const ReductionChain& chain) {
    SpaceTimeField r;
    r.grid = h.grid;
    for (int k = 0; k <= h.grid.M; ++k)
        r.snaps.push_back(apply_R_snapshot(h.snaps[static_cast<size_t>(k)], chain, k));
    return r;
}

// ---------------------------------------------------------------------------

SpaceTimeField apply_L0(const SpaceTimeField& h, const ReductionChain& chain) {
    return apply_linearized(chain.coeffs, h);
}

SpaceTimeField apply_L1(const SpaceTimeField& h, const ReductionChain& chain) {
    SpaceTimeField r = dt_field(h);
    for (int k = 0; k <= h.grid.M; ++k) {
        size_t i = static_cast<size_t>(k);
        PeriodicField acc = axpy(r.snaps[i], dx(h.snaps[i], 3), chain.b.v[i]);
        acc = add(acc, multiply(chain.a5.snaps[i], dx(h.snaps[i], 2)));
        acc = add(acc, multiply(chain.a6.snaps[i], dx(h.snaps[i])));
        acc = add(acc, multiply(chain.a7.snaps[i], h.snaps[i]));
        r.snaps[i] = acc;
    }
    return r;
}

SpaceTimeField apply_L2(const SpaceTimeField& h, const ReductionChain& chain) {
    SpaceTimeField r = st_axpy(dt_field(h), st_dx(h, 3), chain.m);
    for (int k = 0; k <= h.grid.M; ++k) {
        size_t i = static_cast<size_t>(k);
        PeriodicField acc = add(r.snaps[i], multiply(chain.a8.snaps[i], dx(h.snaps[i], 2)));
        acc = add(acc, multiply(chain.a9.snaps[i], dx(h.snaps[i])));
        acc = add(acc, multiply(chain.a10.snaps[i], h.snaps[i]));
        r.snaps[i] = acc;
    }
    return r;
}

SpaceTimeField apply_L3(const SpaceTimeField& h, const ReductionChain& chain) {
    SpaceTimeField r = st_axpy(dt_field(h), st_dx(h, 3), chain.m);
    for (int k = 0; k <= h.grid.M; ++k) {
        size_t i = static_cast<size_t>(k);
        PeriodicField acc = add(r.snaps[i], multiply(chain.a12.snaps[i], dx(h.snaps[i])));
        acc = add(acc, multiply(chain.a13.snaps[i], h.snaps[i]));
        r.snaps[i] = acc;
    }
    return r;
}

SpaceTimeField apply_L4(const SpaceTimeField& h, const ReductionChain& chain) {
    SpaceTimeField r = st_axpy(dt_field(h), st_dx(h, 3), chain.m);
    for (int k = 0; k <= h.grid.M; ++k) {
        size_t i = static_cast<size_t>(k);
        PeriodicField acc = add(r.snaps[i], multiply(chain.a14.snaps[i], dx(h.snaps[i])));
        acc = add(acc, multiply(chain.a15.snaps[i], h.snaps[i]));
        r.snaps[i] = acc;
    }
    return r;
}

SpaceTimeField apply_airy(const SpaceTimeField& h, double m) {
    return st_axpy(dt_field(h), st_dx(h, 3), m);
}

SpaceTimeField apply_L5(const SpaceTimeField& h, const ReductionChain& chain) {
    return st_add(apply_airy(h, chain.m), apply_R(h, chain));
}

LinearizedCoefficients adjoint_coefficients(const LinearizedCoefficients& c) {
    check_grids(c);
    LinearizedCoefficients r;
    r.a3 = c.a3;
    r.a2 = st_axpy(st_scale(c.a2, -1.0), st_dx(c.a3), 3.0);
    r.a1 = st_axpy(st_axpy(c.a1, st_dx(c.a2), -2.0), st_dx(c.a3, 2), 3.0);
    r.a0 = st_axpy(st_axpy(st_axpy(st_scale(c.a0, -1.0), st_dx(c.a1), 1.0), st_dx(c.a2, 2), -1.0),
                   st_dx(c.a3, 3), 1.0);
    return r;
}

} // namespace kdvq
