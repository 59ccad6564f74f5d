#include "kdvq/nonlinearity.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace kdvq {

namespace {

// One monomial coef * F_{x^i z0^j z1^k}(x,u,u_x) * z1^p1 z2^p2 z3^p3 of the
// expansion of N1 in z = (u, u_x, u_xx, u_xxx).
struct Term {
    double coef;
    int i, j, k;
    int p1, p2, p3;
};

std::vector<Term> n1_terms() {
    return {
        {+1.0, 1, 1, 0, 0, 0, 0}, {+1.0, 0, 2, 0, 1, 0, 0}, {-1.0, 2, 0, 1, 0, 0, 0},
        {-2.0, 1, 1, 1, 1, 0, 0}, {-2.0, 1, 0, 2, 0, 1, 0}, {-1.0, 0, 2, 1, 2, 0, 0},
        {-2.0, 0, 1, 2, 1, 1, 0}, {-1.0, 0, 0, 3, 0, 2, 0}, {-1.0, 0, 0, 2, 0, 0, 1},
    };
}

// Formal d/dz_m. The F-factor depends on z0, z1 through its last two
// arguments; the monomial carries the z1, z2, z3 powers.
std::vector<Term> d_dz(const std::vector<Term>& ts, int m) {
    std::vector<Term> out;
    for (const Term& t : ts) {
        switch (m) {
            case 0:
                out.push_back({t.coef, t.i, t.j + 1, t.k, t.p1, t.p2, t.p3});
                break;
            case 1:
                out.push_back({t.coef, t.i, t.j, t.k + 1, t.p1, t.p2, t.p3});
                if (t.p1 > 0) out.push_back({t.coef * t.p1, t.i, t.j, t.k, t.p1 - 1, t.p2, t.p3});
                break;
            case 2:
                if (t.p2 > 0) out.push_back({t.coef * t.p2, t.i, t.j, t.k, t.p1, t.p2 - 1, t.p3});
                break;
            case 3:
                if (t.p3 > 0) out.push_back({t.coef * t.p3, t.i, t.j, t.k, t.p1, t.p2, t.p3 - 1});
                break;
            default:
                throw std::logic_error("d_dz: bad index");
        }
    }
    return out;
}

double eval_terms(const std::vector<Term>& ts, const NonlinearitySpec& spec, double x,
                  double z0, double z1, double z2, double z3) {
    double acc = 0.0;
    for (const Term& t : ts) {
        double v = t.coef * spec.F(t.i, t.j, t.k, x, z0, z1);
        for (int r = 0; r < t.p1; ++r) v *= z1;
        for (int r = 0; r < t.p2; ++r) v *= z2;
        for (int r = 0; r < t.p3; ++r) v *= z3;
        acc += v;
    }
    return acc;
}

struct GridData {
    int p;
    std::vector<std::vector<cplx>> z; // samples of dx^m u, m = 0..3
};

GridData sample_derivatives(const PeriodicField& u, int p) {
    GridData g;
    g.p = p;
    g.z.reserve(4);
    for (int m = 0; m < 4; ++m) g.z.push_back(grid_eval(dx(u, m), p));
    return g;
}

void check_amplitude(const GridData& g, const NonlinearitySpec& spec) {
    for (const cplx& v : g.z[0])
        if (std::abs(v.real()) > spec.quadraticity_radius)
            throw std::domain_error("nonlinearity: amplitude outside quadraticity radius");
}

void require_real(const PeriodicField& u, const char* who) {
    if (!u.is_real) throw std::invalid_argument(std::string(who) + ": real fields only");
}

const double kTwoPi = 6.283185307179586476925286766559;

PeriodicField assemble(const GridData& g, int n_max_out,
                       const std::function<double(double, size_t)>& f) {
    std::vector<cplx> out(static_cast<size_t>(g.p));
    for (int idx = 0; idx < g.p; ++idx) {
        double x = kTwoPi * idx / g.p;
        out[static_cast<size_t>(idx)] = f(x, static_cast<size_t>(idx));
    }
    return field_from_samples(out, n_max_out, true);
}

} // namespace

NonlinearitySpec make_nonlinearity(const std::string& name, double coeff) {
    NonlinearitySpec s;
    s.name = name;
    if (name == "zero") return s;
    if (name == "kdv") {
        // F = -z0^3/6: only pure-z0 partials survive
        s.has_density = true;
        s.F = [coeff](int i, int j, int k, double, double z0, double) {
            if (i != 0 || k != 0) return 0.0;
            switch (j) {
                case 0: return -coeff * z0 * z0 * z0 / 6.0;
                case 1: return -coeff * z0 * z0 / 2.0;
                case 2: return -coeff * z0;
                case 3: return -coeff;
                default: return 0.0;
            }
        };
        return s;
    }
    if (name == "quasilinear") {
        // F = c z0 z1^2
        s.has_density = true;
        s.F = [coeff](int i, int j, int k, double, double z0, double z1) {
            if (i != 0 || j > 1 || k > 2) return 0.0;
            double v = coeff;
            v *= (j == 0) ? z0 : 1.0;
            if (k == 0) v *= z1 * z1;
            if (k == 1) v *= 2.0 * z1;
            if (k == 2) v *= 2.0;
            return v;
        };
        return s;
    }
    if (name == "lower_order") {
        // N0 = c z0 z1
        s.has_lower_order = true;
        s.N0 = [coeff](int j, int k, double, double z0, double z1) {
            if (j == 0 && k == 0) return coeff * z0 * z1;
            if (j == 1 && k == 0) return coeff * z1;
            if (j == 0 && k == 1) return coeff * z0;
            if (j == 1 && k == 1) return coeff;
            return 0.0;
        };
        return s;
    }
    throw std::invalid_argument("make_nonlinearity: unknown spec '" + name + "'");
}

PeriodicField eval_N_snapshot(const PeriodicField& u, const NonlinearitySpec& spec) {
    require_real(u, "eval_N");
    if (!spec.has_density && !spec.has_lower_order) return zero_like(u);
    GridData g = sample_derivatives(u, padded_size(u.n_max));
    check_amplitude(g, spec);
    static const std::vector<Term> terms = n1_terms();
    return assemble(g, u.n_max, [&](double x, size_t idx) {
        double z0 = g.z[0][idx].real(), z1 = g.z[1][idx].real();
        double z2 = g.z[2][idx].real(), z3 = g.z[3][idx].real();
        double v = 0.0;
        if (spec.has_density) v += eval_terms(terms, spec, x, z0, z1, z2, z3);
        if (spec.has_lower_order) v += spec.N0(0, 0, x, z0, z1);
        return v;
    });
}

SpaceTimeField eval_N(const SpaceTimeField& u, const NonlinearitySpec& spec) {
    return st_map(u, [&](const PeriodicField& s) { return eval_N_snapshot(s, spec); });
}

SpaceTimeField eval_P(const SpaceTimeField& u, const NonlinearitySpec& spec) {
    return st_add(st_add(dt_field(u), st_dx(u, 3)), eval_N(u, spec));
}

std::array<PeriodicField, 4> coefficient_snapshot(const PeriodicField& u,
                                                  const NonlinearitySpec& spec) {
    require_real(u, "linearized_coefficients");
    static const std::array<std::vector<Term>, 4> grad = {
        d_dz(n1_terms(), 0), d_dz(n1_terms(), 1), d_dz(n1_terms(), 2), d_dz(n1_terms(), 3)};
    std::array<PeriodicField, 4> a;
    if (!spec.has_density && !spec.has_lower_order) {
        for (int m = 0; m < 4; ++m) a[static_cast<size_t>(m)] = zero_like(u);
        return a;
    }
    GridData g = sample_derivatives(u, padded_size(u.n_max));
    check_amplitude(g, spec);
    for (int m = 0; m < 4; ++m) {
        a[static_cast<size_t>(m)] = assemble(g, u.n_max, [&](double x, size_t idx) {
            double z0 = g.z[0][idx].real(), z1 = g.z[1][idx].real();
            double z2 = g.z[2][idx].real(), z3 = g.z[3][idx].real();
            double v = 0.0;
            if (spec.has_density)
                v += eval_terms(grad[static_cast<size_t>(m)], spec, x, z0, z1, z2, z3);
            if (spec.has_lower_order && m <= 1)
                v += spec.N0(m == 0 ? 1 : 0, m == 1 ? 1 : 0, x, z0, z1);
            return v;
        });
    }
    return a;
}

LinearizedCoefficients linearized_coefficients(const SpaceTimeField& u,
                                               const NonlinearitySpec& spec) {
    LinearizedCoefficients c;
    c.a0.grid = c.a1.grid = c.a2.grid = c.a3.grid = u.grid;
    for (const PeriodicField& s : u.snaps) {
        std::array<PeriodicField, 4> a = coefficient_snapshot(s, spec);
        c.a0.snaps.push_back(a[0]);
        c.a1.snaps.push_back(a[1]);
        c.a2.snaps.push_back(a[2]);
        c.a3.snaps.push_back(a[3]);
    }
    return c;
}

SpaceTimeField apply_linearized(const LinearizedCoefficients& c, const SpaceTimeField& h) {
    SpaceTimeField r = st_add(dt_field(h), st_dx(h, 3));
    for (size_t k = 0; k < r.snaps.size(); ++k) {
        PeriodicField acc = r.snaps[k];
        acc = add(acc, multiply(c.a3.snaps[k], dx(h.snaps[k], 3)));
        acc = add(acc, multiply(c.a2.snaps[k], dx(h.snaps[k], 2)));
        acc = add(acc, multiply(c.a1.snaps[k], dx(h.snaps[k], 1)));
        acc = add(acc, multiply(c.a0.snaps[k], h.snaps[k]));
        r.snaps[k] = acc;
    }
    return r;
}

SpaceTimeField apply_P_prime(const SpaceTimeField& u, const SpaceTimeField& h,
                             const NonlinearitySpec& spec) {
    require_same_grid(u, h);
    return apply_linearized(linearized_coefficients(u, spec), h);
}

PeriodicField hessian_snapshot(const PeriodicField& u, const PeriodicField& h1,
                               const PeriodicField& h2, const NonlinearitySpec& spec) {
    require_real(u, "apply_P_second");
    int nm = std::max({u.n_max, h1.n_max, h2.n_max});
    if (!spec.has_density && !spec.has_lower_order) return PeriodicField(nm, true);
    static const auto hess = [] {
        std::array<std::array<std::vector<Term>, 4>, 4> hh;
        for (int m = 0; m < 4; ++m) {
            std::vector<Term> gm = d_dz(n1_terms(), m);
            for (int l = 0; l < 4; ++l)
                hh[static_cast<size_t>(m)][static_cast<size_t>(l)] = d_dz(gm, l);
        }
        return hh;
    }();
    int p = padded_size(nm);
    GridData g = sample_derivatives(u, p);
    check_amplitude(g, spec);
    GridData d1 = sample_derivatives(h1, p), d2 = sample_derivatives(h2, p);
    return assemble(g, nm, [&](double x, size_t idx) {
        double z0 = g.z[0][idx].real(), z1 = g.z[1][idx].real();
        double z2 = g.z[2][idx].real(), z3 = g.z[3][idx].real();
        double v = 0.0;
        for (int m = 0; m < 4; ++m) {
            for (int l = 0; l < 4; ++l) {
                double w = 0.0;
                if (spec.has_density) {
                    const std::vector<Term>& ts = hess[static_cast<size_t>(m)][static_cast<size_t>(l)];
                    if (!ts.empty()) w += eval_terms(ts, spec, x, z0, z1, z2, z3);
                }
                if (spec.has_lower_order && m <= 1 && l <= 1) {
                    int j = (m == 0 ? 1 : 0) + (l == 0 ? 1 : 0);
                    int k = (m == 1 ? 1 : 0) + (l == 1 ? 1 : 0);
                    w += spec.N0(j, k, x, z0, z1);
                }
                if (w != 0.0)
                    v += w * d1.z[static_cast<size_t>(m)][idx].real() *
                         d2.z[static_cast<size_t>(l)][idx].real();
            }
        }
        return v;
    });
}

SpaceTimeField apply_P_second(const SpaceTimeField& u, const SpaceTimeField& h1,
                              const SpaceTimeField& h2, const NonlinearitySpec& spec) {
    require_same_grid(u, h1);
    require_same_grid(u, h2);
    SpaceTimeField r;
    r.grid = u.grid;
    r.snaps.reserve(u.snaps.size());
    for (size_t k = 0; k < u.snaps.size(); ++k)
        r.snaps.push_back(hessian_snapshot(u.snaps[k], h1.snaps[k], h2.snaps[k], spec));
    return r;
}

double quadraticity_defect(const NonlinearitySpec& spec, int samples) {
    PeriodicField zero(2, true);
    PeriodicField n = eval_N_snapshot(zero, spec);
    std::array<PeriodicField, 4> a = coefficient_snapshot(zero, spec);
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        double x = kTwoPi * i / samples;
        double v = std::abs(eval_at(n, x).real());
        for (const PeriodicField& am : a) v += std::abs(eval_at(am, x).real());
        worst = std::max(worst, v);
    }
    return worst;
}

} // namespace kdvq
