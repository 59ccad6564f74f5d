#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "kdvq/field.hpp"
#include "kdvq/reduction.hpp"

namespace kdvq {

// Oscillatory moments m_l = int_0^dt s^l e^{i omega s} ds, l = 0..3. Exact
// integration-by-parts recurrence once |omega dt| >= 1/2, power series below
// (the recurrence cancels catastrophically near omega = 0).
std::array<cplx, 4> osc_moments(double omega, double dt);

// Quadrature tables for the variation-of-constants integral. Per mode n the
// kernel e^{i m n^3 (t - tau)} is integrated exactly against the cubic
// through the four nodes nearest each cell [t_i, t_{i+1}] (left stencil on
// the first cell, right on the last). Everything downstream that claims to
// be a time integral goes through these tables, so adjoints are exact
// transposes of the forward sweeps.
struct FilonTable {
    TimeGrid grid;
    double m = 1.0;
    int n_max = 0;
    struct Mode {
        std::array<cplx, 4> wL, wC, wR; // stencil weights, one cell each kind
        std::vector<cplx> phase;        // e^{i omega t_k}, k = 0..M
    };
    std::vector<Mode> modes;      // index n + n_max
    std::array<cplx, 4> zL, zC, zR; // omega = 0 weights, shared by every mode
};
FilonTable make_filon_table(const TimeGrid& g, double m, int n_max);

// (A f)_n(t_k) = int_0^{t_k} e^{i m n^3 (t_k - tau)} f_n(tau) dtau: one
// prefix sweep of cell contributions per mode, O(M). Interpolates f itself,
// so it is exact for cubic-in-t forcings and accurate whenever f is smooth
// as sampled (external data). Feeding it a field that carries the free-flow
// oscillation loses (m n^3 dt)^4; that is what the peeled variant is for.
SpaceTimeField filon_cumulative(const SpaceTimeField& f, const FilonTable& tab);
// Exact conjugate transpose of filon_cumulative in the plain node pairing
// sum_k sum_n u_n(t_k) conj(v_n(t_k)) (no quadrature weights; those appear
// explicitly where a time integral is meant).
SpaceTimeField filon_cumulative_adjoint(const SpaceTimeField& r, const FilonTable& tab);

// Same integral, but interpolating the envelope e^{-i m n^3 tau} g_n(tau)
// instead of g itself. Exact when g is (free flow) x (cubic); this is the
// right rule for solution-feedback terms like R u, whose dominant time
// dependence is the flow phase. For rough external forcings it is the wrong
// rule: the envelope then oscillates and the plain variant must be used.
SpaceTimeField filon_cumulative_peeled(const SpaceTimeField& g, const FilonTable& tab);
// Exact conjugate transpose of filon_cumulative_peeled, same pairing.
SpaceTimeField filon_cumulative_peeled_adjoint(const SpaceTimeField& r, const FilonTable& tab);

// Endpoint weights W with sum_k W_k f(t_k) ~ int_0^T e^{i omega (T - tau)} f(tau) dtau,
// the k = M row of the cumulative operator. At omega = 0 this reproduces
// quad_weights exactly.
std::vector<cplx> filon_endpoint_weights(double omega, const TimeGrid& g);

// Free flow u_n(t_k) = e^{i m n^3 t_k} alpha_n.
SpaceTimeField airy_flow(const PeriodicField& alpha, const TimeGrid& g, double m);

// Duhamel integral with zero initial datum, and its exact transpose.
SpaceTimeField airy_duhamel(const SpaceTimeField& f, double m);
SpaceTimeField airy_duhamel_adjoint(const SpaceTimeField& r, double m);

// Bounded remainder applied to the snapshot at node k. Must preserve real
// (Hermitian-symmetric) fields when fed them.
using RemainderFn = std::function<PeriodicField(const PeriodicField&, int)>;

// Spectral-norm proxy: 20 power iterations on random snapshots at a handful
// of nodes; returns the largest amplification seen. Deterministic (fixed
// internal stream).
double estimate_remainder_norm(const RemainderFn& R, int n_max, const TimeGrid& g);

// PDE residual on the de-oscillated envelopes,
//   || d/dt(e^{-t Lambda} u) - e^{-t Lambda} (f - R u) ||_{T,0},
// with the 5-node time stencil. Finite differences straight on u would be
// meaningless once m n^3 dt > 1; peeling the phases first keeps the check
// fourth order at every mode. R may be empty.
double pde_residual(const SpaceTimeField& u, const SpaceTimeField& f, double m,
                    const RemainderFn& R);

struct CauchySettings {
    double picard_tol = 1e-15;  // relative sweep-increment floor
    int max_picard = 80;        // per sub-interval, and for the global polish
    bool check_residual = true; // de-oscillated PDE residual after the solve
    double residual_tol = 1e-3; // relative to the data scale
    // Seeds the L5-frame Picard iteration (default: the free flow of the
    // datum). Exposes the uniqueness check: distinct seeds, same fixed point.
    std::optional<SpaceTimeField> initial_guess;
};

// d_t u + m dxxx u + R u = f, u(0) = alpha. Picard iteration on the Duhamel
// fixed point u = e^{t Lambda} alpha + A f - A[R u], with the plain rule on
// the external forcing and the peeled rule on the feedback (whose envelope,
// not itself, is smooth). When T ||R|| > 1/2 the interval splits into
// N = ceil(2 T ||R||) sub-intervals swept in order (contraction on each
// piece), followed by whole-interval polish sweeps so the returned
// trajectory satisfies the single global quadrature identity. Stagnation
// doubles N once before failing.
SpaceTimeField solve_L5(const PeriodicField& alpha, const SpaceTimeField& f, double m,
                        const RemainderFn& R, const CauchySettings& settings = {});

enum class OpTag { L0, L1, L2, L3, L4, L5 };

struct CauchyProblem {
    OpTag tag = OpTag::L5;
    bool adjoint = false;  // starred operator of the duality pairing
    bool backward = false; // datum at t = T
    PeriodicField datum;
    SpaceTimeField forcing;
    const ReductionChain* chain = nullptr;
    CauchySettings settings;
};

// Conjugates the problem down the transformation chain to the L5 normal
// form, solves there, transforms back. Backward problems are solved by time
// reversal at the L5 level (m -> -m, remainder and forcing reversed and
// negated). Adjoint tags below L5 re-reduce the starred coefficients with a
// fresh chain; the L5 adjoint keeps the closed form R* = K*(S*)^{-1} built
// from the same chain data.
SpaceTimeField solve(const CauchyProblem& problem);

// Starred coefficients of the rung operator: L1 has leading b(t), L2..L4
// lead with the constant m; each is an L0-class operator in its own time
// variable, so the adjoint solve re-enters the chain machinery at the top.
LinearizedCoefficients rung_coefficients(const ReductionChain& chain, OpTag tag);

} // namespace kdvq
