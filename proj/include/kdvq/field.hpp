#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "kdvq/rng.hpp"

namespace kdvq {

using cplx = std::complex<double>;

inline double jb(double n) { return std::sqrt(1.0 + n * n); } // <n> = (1+n^2)^(1/2)

// Truncated Fourier series u(x) = sum_{|n|<=n_max} c_n e^{inx}.
// Storage index j corresponds to mode n = j - n_max.
struct PeriodicField {
    int n_max = 0;
    bool is_real = true;
    std::vector<cplx> c;

    PeriodicField() : c(1, cplx{0.0, 0.0}) {}
    PeriodicField(int nm, bool real_flag)
        : n_max(nm), is_real(real_flag), c(2 * static_cast<size_t>(nm) + 1, cplx{0.0, 0.0}) {}

    cplx& mode(int n) { return c[static_cast<size_t>(n + n_max)]; }
    const cplx& mode(int n) const { return c[static_cast<size_t>(n + n_max)]; }
    int size() const { return 2 * n_max + 1; }
};

// Validate invariants: finite coefficients, Hermitian symmetry when is_real.
void validate(const PeriodicField& u);

PeriodicField zero_like(const PeriodicField& u);
PeriodicField add(const PeriodicField& u, const PeriodicField& v);
PeriodicField sub(const PeriodicField& u, const PeriodicField& v);
PeriodicField scale(const PeriodicField& u, cplx s);
// u + s*v, fields may differ in n_max (result takes the larger).
PeriodicField axpy(const PeriodicField& u, const PeriodicField& v, cplx s);

// l^2 mode inner product sum_n u_n conj(v_n) (Parseval pairing).
cplx inner(const PeriodicField& u, const PeriodicField& v);

double sobolev_norm(const PeriodicField& u, double s);
PeriodicField dx(const PeriodicField& u, int order = 1);
PeriodicField dx_inverse(const PeriodicField& u); // zero-mean primitive; mean mode dropped
PeriodicField pi0(const PeriodicField& u);        // remove the x-average
PeriodicField lambda_s(const PeriodicField& u, double s);
inline cplx mean(const PeriodicField& u) { return u.mode(0); }
PeriodicField truncate(const PeriodicField& u, int n_max);

// Collocation values at x_i = 2 pi i / p, exact for p >= 2 n_max + 1.
std::vector<cplx> grid_eval(const PeriodicField& u, int p);
// Trigonometric interpolation of samples, truncated to n_max.
PeriodicField field_from_samples(const std::vector<cplx>& samples, int n_max, bool is_real);
// Direct series evaluation at one point.
cplx eval_at(const PeriodicField& u, double x);

// Default padded grid size for pointwise (cubic-degree) work at truncation nm.
int padded_size(int nm);

// Pointwise product on a padded grid, truncated back to max(n_max).
PeriodicField multiply(const PeriodicField& u, const PeriodicField& v);
// Pointwise map of several fields evaluated on a shared padded grid.
PeriodicField pointwise(const std::vector<const PeriodicField*>& args,
                        const std::function<double(const std::vector<double>&, double)>& f,
                        int n_max_out, int grid_p = 0);

// h(x + beta(x)) re-interpolated on the collocation grid. Requires |beta_x| <= 1/2.
PeriodicField compose_with_diffeo(const PeriodicField& h, const PeriodicField& beta);
// beta_tilde with beta_tilde(y) + beta(y + beta_tilde(y)) = 0 (damped fixed point).
// beta_tilde is not band-limited at beta.n_max; by default the result keeps
// 2 n_max + 8 modes so the quadratic part of the inverse survives truncation.
PeriodicField invert_diffeo(const PeriodicField& beta, int n_max_out = 0);

struct TameReport {
    double ratio = 0.0;
    double threshold = 0.0;
    bool flagged = false;
};
// ||uv||_s / (||u||_s ||v||_{s0} + ||u||_{s0} ||v||_s), s >= s0 > 1/2.
TameReport verify_tame_product(const PeriodicField& u, const PeriodicField& v, double s, double s0);

PeriodicField random_real_field(Rng& rng, int n_max, double decay);
PeriodicField random_complex_field(Rng& rng, int n_max, double decay);

// ---------------------------------------------------------------------------

struct TimeGrid {
    double T = 1.0;
    int M = 1; // number of steps; M+1 nodes
    double dt() const { return T / M; }
    double node(int k) const { return T * k / M; }
    bool operator==(const TimeGrid& o) const { return T == o.T && M == o.M; }
};

// One PeriodicField per time node, shared truncation.
struct SpaceTimeField {
    TimeGrid grid;
    std::vector<PeriodicField> snaps;

    SpaceTimeField() = default;
    SpaceTimeField(const TimeGrid& g, int n_max, bool is_real)
        : grid(g), snaps(static_cast<size_t>(g.M) + 1, PeriodicField(n_max, is_real)) {}
    PeriodicField& at(int k) { return snaps[static_cast<size_t>(k)]; }
    const PeriodicField& at(int k) const { return snaps[static_cast<size_t>(k)]; }
    int n_max() const { return snaps.empty() ? 0 : snaps[0].n_max; }
};

void require_same_grid(const SpaceTimeField& u, const SpaceTimeField& v);

double traj_norm(const SpaceTimeField& u, double s); // max over nodes of sobolev_norm

SpaceTimeField st_add(const SpaceTimeField& u, const SpaceTimeField& v);
SpaceTimeField st_sub(const SpaceTimeField& u, const SpaceTimeField& v);
SpaceTimeField st_scale(const SpaceTimeField& u, cplx s);
SpaceTimeField st_axpy(const SpaceTimeField& u, const SpaceTimeField& v, cplx s);
SpaceTimeField st_map(const SpaceTimeField& u,
                      const std::function<PeriodicField(const PeriodicField&)>& f);
SpaceTimeField st_multiply(const SpaceTimeField& u, const SpaceTimeField& v);
SpaceTimeField st_dx(const SpaceTimeField& u, int order = 1);

// Cubic Lagrange interpolation in time on the 4 nearest nodes (clamped at the
// ends); exact at the nodes, zero-mean snapshots stay zero-mean.
PeriodicField snapshot_at(const SpaceTimeField& u, double t);

// 4th-order finite difference in t: 5-point centered stencil, one-sided closures.
SpaceTimeField dt_field(const SpaceTimeField& u);
std::vector<double> dt_samples(const std::vector<double>& f, double dt);

// Cumulative integral of node samples, exact on cubics (per-cell 4-point rule).
std::vector<double> cumulative_integral(const std::vector<double>& f, double dt);

// L^2(0,T) node quadrature weights of the same 4-point rule (all positive,
// summing to T exactly).
std::vector<double> quad_weights(int M, double dt);

SpaceTimeField random_st_field(Rng& rng, const TimeGrid& g, int n_max, double decay,
                               double t_freq);

} // namespace kdvq
