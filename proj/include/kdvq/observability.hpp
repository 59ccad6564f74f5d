#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdvq/cauchy.hpp"
#include "kdvq/field.hpp"
#include "kdvq/nonlinearity.hpp"
#include "kdvq/reduction.hpp"

namespace kdvq {

// Control window: finite union of pairwise disjoint open arcs on the circle.
struct Arc {
    double start = 0.0;  // radians
    double length = 0.0; // radians, in (0, 2 pi]
};

struct Window {
    std::vector<Arc> arcs;
    double measure() const;
};

// Disjointness (mod 2 pi) and positive lengths; throws invalid_argument.
void validate_window(const Window& w);

// int_omega e^{ipx} dx in closed form (sum of arc increments).
cplx window_moment(const Window& w, int p);

// int_omega |v(x)|^2 dx, exact for the truncated series (Toeplitz form in the
// window moments).
double window_energy(const PeriodicField& v, const Window& w);

// Smooth cutoff: one bump per arc, C-infinity edges of width length/4 built
// from the e^{-1/t} step, plateau exactly 1 on the middle half. Sampled on a
// fine grid and truncated to n_max; resolve generously (n_max well above the
// working truncation) so the stored field keeps 0 <= chi <= 1 and the support
// confinement to spectral-tail accuracy.
PeriodicField make_cutoff(const Window& w, int n_max);

// ---------------------------------------------------------------------------
// Ingham diagnostics

struct InghamReport {
    std::vector<int> modes;
    std::vector<cplx> gram; // row-major, size modes.size()^2
    double lambda_min = 0.0;
};

// G_{jl} = int_0^T e^{i m (n_j^3 - n_l^3) t} dt in closed form; lambda_min of
// the Hermitian matrix is the finite-section observability constant for the
// Airy group on the window of time [0,T]. Requires m >= 1/2.
InghamReport ingham_gram(const std::vector<int>& modes, double m, double T);

// C1 = lambda_min over |n| <= n_cap, then the chain of window/perturbation
// losses C2 = C1 |omega|, C3 = C2 / 4, C4 = C3 / 16.
struct CascadeConstants {
    double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
};
CascadeConstants cascade_constants(int n_cap, double m, double T, const Window& w);

// ---------------------------------------------------------------------------
// Observability ratio

// Solve the backward problem v(T) = vT for the tagged operator (adjoint
// variant when requested) and return
//   int_0^T int_omega |v|^2 dx dt / ||vT||_0^2,
// node quadrature in t, exact arc moments in x.
double observability_ratio(OpTag tag, bool adjoint_op, const ReductionChain& chain,
                           const PeriodicField& vT, const Window& w);

// ---------------------------------------------------------------------------
// HUM control

// Snapshot applicators for N' = a3 dxxx + a2 dxx + a1 dx + a0 (no d_t part)
// and its formal transpose N'^T v = a0 v - dx(a1 v) + dxx(a2 v) - dxxx(a3 v).
// The transpose is exact against the plain mode pairing up to product roundoff.
RemainderFn linearized_remainder(const LinearizedCoefficients& c);
RemainderFn linearized_remainder_transpose(const LinearizedCoefficients& c);

struct ControlProblem {
    TimeGrid grid;
    Window window;
    PeriodicField chi; // cutoff, usually make_cutoff(window, 64)
    SpaceTimeField g1; // interior data (may be the zero field on grid)
    // Interior data already in time-integrated form: added to the Duhamel
    // seed as is, so the solved equation reads L0 h = g1 + chi phi with the
    // extra inhomogeneity h -= g1_mild carried through the trajectory. Its
    // snapshots must vanish at the initial node.
    std::optional<SpaceTimeField> g1_mild;
    PeriodicField g2;  // initial state
    PeriodicField g3;  // target state
    // Linearization point; empty means the free Airy operator m = 1.
    std::optional<LinearizedCoefficients> coeffs;
    // Working truncation; 0 infers max over the data fields.
    int n_max = 0;
};

struct HumSettings {
    double cg_tol = 1e-8;     // relative residual on the Gramian system
    int max_cg = 500;
    double series_tol = 1e-15; // Duhamel series tail (T ||N'||)^K / K!
    int max_terms = 400;       // refuse coefficients needing a longer series
    std::optional<PeriodicField> cg_start; // default zero
};

struct HumReport {
    int cg_iterations = 0;  // Gramian applications, CG plus the assembly pass
    double cg_residual = 0.0; // final relative residual
    double final_gap = 0.0;   // ||h(T) - g3||_0
    double ritz_min = 0.0;    // smallest Ritz value of the Gramian seen by CG
    double control_norm = 0.0; // ||phi||_{T,0}
    int series_terms = 1;      // K
    // Duhamel-form residual of the returned pair: how far the truncated
    // series is from the exact mild fixed point (the series tail, in norm).
    double mild_defect = 0.0;
};

struct HumResult {
    SpaceTimeField phi; // control trajectory (discrete backward adjoint flow)
    SpaceTimeField h;   // controlled state
    HumReport report;
};

// CG failed to reach the tolerance: the window/horizon pair observes the
// operator too weakly at this truncation.
struct ObservabilityFailure : std::runtime_error {
    double ritz_min;
    ObservabilityFailure(const std::string& msg, double rm)
        : std::runtime_error(msg), ritz_min(rm) {}
};

// Controllability: find phi with L0 h = g1 + chi phi, h(0) = g2, h(T) = g3.
// The Gramian G = B Chi Q^{-1} B^T is assembled from the fixed-length Duhamel
// series of the mild operator (principal part dxxx, coefficients folded into
// the bounded remainder) and the literal transpose of its endpoint map, so G
// is symmetric positive semidefinite to roundoff by construction and
// h(T) - g3 equals the CG residual exactly. CG solves G phi1 = g3 - eta(T)
// with eta the free (phi = 0) solution; phi is the weighted transpose
// trajectory Q^{-1} B^T phi1. The chain certifies the coefficient smallness
// thresholds (pass the chain built from the same coefficients, or null for
// data already known small). Throws ObservabilityFailure on CG stagnation.
HumResult hum_solve(const ControlProblem& pb, const ReductionChain* chain,
                    const HumSettings& st = {});

// ---------------------------------------------------------------------------
// Graded norms and higher regularity

// ||u||_{X_s} = ||u||_{T,s+6} + ||d_t u||_{T,s+3} + ||d_tt u||_{T,s}
// (time derivatives by the 4th-order stencil).
double x_norm(const SpaceTimeField& u, double s);
// ||g||_{F_s} = ||g1||_{T,s+6} + ||d_t g1||_{T,s} + ||g2||_{s+6} + ||g3||_{s+6}.
double f_norm(const SpaceTimeField& g1, const PeriodicField& g2, const PeriodicField& g3,
              double s);

struct GradedNormPack {
    double s = 0.0;
    double xs_u = 0.0, xs_f = 0.0;
    double es = 0.0; // xs_u + xs_f
    double fs = 0.0;
};
GradedNormPack graded_norms(const SpaceTimeField& u, const SpaceTimeField& f,
                            const SpaceTimeField& g1, const PeriodicField& g2,
                            const PeriodicField& g3, double s);

struct RegularityReport {
    double tame_ratio = 0.0;       // ||phi,h||_{T,s} / (||g||_{T,s} + delta_s ||g||_{T,0})
    double delta_s = 0.0;          // coefficient size sum_{k<=2,i} ||d_t^k a_i||_{T,s+3}
    double commutator_slope = 0.0; // log-log growth of ||[Lambda^s, cos x] e_n||_0, ~ s-1
};
RegularityReport higher_regularity_check(const SpaceTimeField& phi, const SpaceTimeField& h,
                                         const ControlProblem& pb, double s);

// ---------------------------------------------------------------------------
// Right inverse of the linearized control operator

struct PsiResult {
    SpaceTimeField h, phi;
    HumReport report;
    double mild_defect = 0.0; // Duhamel-form residual of L0 h = g1 + chi phi; asserted small
    double fd_defect = 0.0;   // stencil-form residual of the same equation; reported only
};

// Linearize the nonlinearity at u, certify smallness by building the
// reduction chain, then hum_solve for (h, phi) with
//   P'(u) h - chi_omega phi = g1, h(0) = g2, h(T) = g3.
// The second argument of the linearization point is carried for the (u,f)
// pair semantics; the linearized coefficients do not depend on f.
PsiResult right_inverse_psi(const SpaceTimeField& u, const SpaceTimeField& f,
                            const SpaceTimeField& g1, const PeriodicField& g2,
                            const PeriodicField& g3, const NonlinearitySpec& nl,
                            const Window& w, const HumSettings& st = {});

} // namespace kdvq
