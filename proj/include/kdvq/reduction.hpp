#pragma once

#include <vector>

#include "kdvq/field.hpp"
#include "kdvq/nonlinearity.hpp"

namespace kdvq {

// Five successive conjugations turn the variable-coefficient operator
//   L0 = d_t + (1 + a3) dxxx + a2 dxx + a1 dx + a0
// into L5 = d_t + m dxxx + R with constant leading part and a bounded,
// order -1 remainder R:
//   step 1  space diffeomorphism x -> x + beta(t,x): leading coefficient
//           becomes the x-independent b(t)
//   step 2  time reparametrization psi with psi' = b/m: leading coefficient
//           becomes the constant m, at the price of a scalar factor rho(tau)
//   step 3  multiplication by q(tau,y): kills the second-order term
//   step 4  translation y -> y + p(tau): makes the first-order coefficient
//           mean-free in space
//   step 5  S = I + gamma dx^{-1}: removes the first-order term entirely
// Composite identity: L0 = A B rho M T S L5 S^{-1} T^{-1} M^{-1} B^{-1} A^{-1}.

enum class Variant { plain, inverse, transpose, inverse_transpose };

// Scalar function of time sampled on the grid; cubic Lagrange evaluation.
struct ScalarTraj {
    TimeGrid grid;
    std::vector<double> v;
    double eval(double t) const;
};

struct ReductionChain {
    TimeGrid grid;
    int n_max = 0;
    LinearizedCoefficients coeffs; // the operator being reduced

    SpaceTimeField beta, beta_tilde; // step 1
    ScalarTraj b;
    double m = 1.0; // step 2
    ScalarTraj psi, rho;
    SpaceTimeField q, q_inv; // step 3
    ScalarTraj p;            // step 4
    SpaceTimeField gamma;    // step 5
    double neumann_estimate = 0.0;

    // coefficient ladder (a4 == b, a11 == 0 and a16 == 0 by construction)
    SpaceTimeField a5, a6, a7;   // after step 1, t variable
    SpaceTimeField a8, a9, a10;  // after step 2, tau variable
    SpaceTimeField a12, a13;     // after step 3
    SpaceTimeField a14, a15;     // after step 4
    SpaceTimeField c17, a18;     // remainder data: a17 = a15 + c17 pi0
};

// ---------------------------------------------------------------------------
// Individual steps, exposed for diagnostics. build_chain runs them in order.

struct SpaceDiffeo {
    SpaceTimeField beta, beta_tilde;
    ScalarTraj b;
};
// b(t) = (mean_x (1+a3)^{-1/3})^{-3}; beta_x = b^{1/3}(1+a3)^{-1/3} - 1.
// Throws domain_error if 1 + a3 <= 1/2 somewhere on the sampling grid.
SpaceDiffeo step1_space_diffeo(const SpaceTimeField& a3);

struct TimeReparam {
    double m = 1.0;
    ScalarTraj psi, rho;
};
// m = (1/T) int_0^T b; psi = (1/m) int_0^t b with psi(T) = T exactly;
// rho(tau) = psi'(psi^{-1}(tau)) = b(psi^{-1}(tau))/m.
TimeReparam step2_time_reparam(const ScalarTraj& b);

// q = exp(-(1/3m) dx^{-1} a8) > 0; requires mean_x a8 = 0 at every node.
SpaceTimeField step3_multiplication(const SpaceTimeField& a8, double m);

// p(tau) = -(1/2pi) int_0^tau int a12 dy ds, sampled on the grid.
ScalarTraj step4_translation(const SpaceTimeField& a12);

struct OrderOne {
    SpaceTimeField gamma, c17, a18;
    double neumann_estimate = 0.0;
};
// gamma = -(1/3m) dx^{-1} a14 (cancels the first-order term exactly);
// c17 = 3m gamma_xx + a14 gamma; a18 = gamma_t + m gamma_xxx + a14 gamma_x
// + a15 gamma. neumann_estimate = sup |gamma|, the contraction bound for S^{-1}.
OrderOne step5_order_one(const SpaceTimeField& a14, const SpaceTimeField& a15, double m);

// Runs steps 1-5. Refuses (domain_error) when ||a3||_{T,3} > 0.1, when 1 + a3
// degenerates, or when the S^{-1} contraction estimate reaches 1/2.
ReductionChain build_chain(const LinearizedCoefficients& coeffs);

// ---------------------------------------------------------------------------
// Transformations. All preserve the input truncation and grid.

// (A h)(t,x) = h(t, x + beta); inverse uses beta_tilde; the transposes carry
// the Jacobian: (A^T v) = (1 + beta_tilde_y) v(t, y + beta_tilde),
// (A^{-T} h) = (1 + beta_x) h(t, x + beta).
SpaceTimeField apply_A(const SpaceTimeField& h, const ReductionChain& chain, Variant v);
// (B h)(t,y) = h(psi(t), y); inverse samples at psi^{-1}. Time interpolation
// is cubic Lagrange; only plain/inverse are defined.
SpaceTimeField apply_B(const SpaceTimeField& h, const ReductionChain& chain, Variant v);
// multiplication by the scalar rho(tau): plain/inverse (self-transpose).
SpaceTimeField apply_rho(const SpaceTimeField& h, const ReductionChain& chain, Variant v);
// multiplication by q: transpose = plain, inverse_transpose = inverse.
SpaceTimeField apply_M(const SpaceTimeField& h, const ReductionChain& chain, Variant v);
// translation by p(tau) as exact mode phases; transpose = inverse.
SpaceTimeField apply_T(const SpaceTimeField& h, const ReductionChain& chain, Variant v);
// S = I + gamma dx^{-1}; inverse by Neumann series to machine tolerance.
SpaceTimeField apply_S(const SpaceTimeField& h, const ReductionChain& chain, Variant v);
PeriodicField apply_S_snapshot(const PeriodicField& h, const ReductionChain& chain, int k,
                               Variant v);

// R h = S^{-1}( a15 h + c17 pi0 h + a18 dx^{-1} h ), order -1 and bounded.
PeriodicField apply_R_snapshot(const PeriodicField& h, const ReductionChain& chain, int k);
SpaceTimeField apply_R(const SpaceTimeField& h, const ReductionChain& chain);

// ---------------------------------------------------------------------------
// The operator ladder.

SpaceTimeField apply_L0(const SpaceTimeField& h, const ReductionChain& chain);
SpaceTimeField apply_L1(const SpaceTimeField& h, const ReductionChain& chain);
SpaceTimeField apply_L2(const SpaceTimeField& h, const ReductionChain& chain);
SpaceTimeField apply_L3(const SpaceTimeField& h, const ReductionChain& chain);
SpaceTimeField apply_L4(const SpaceTimeField& h, const ReductionChain& chain);
SpaceTimeField apply_L5(const SpaceTimeField& h, const ReductionChain& chain);
// d_t + m dxxx alone (the constant-coefficient part of L5).
SpaceTimeField apply_airy(const SpaceTimeField& h, double m);

// a3* = a3, a2* = 3 dx a3 - a2, a1* = 3 dxx a3 - 2 dx a2 + a1,
// a0* = dxxx a3 - dxx a2 + dx a1 - a0. If a2 = c dx a3 on input, the output
// satisfies a2* = (3 - c) dx a3*.
LinearizedCoefficients adjoint_coefficients(const LinearizedCoefficients& c);

} // namespace kdvq
