#pragma once

#include <functional>
#include <limits>
#include <string>

#include "kdvq/field.hpp"

namespace kdvq {

// Quasi-linear right-hand side N = N1 + N0. The principal part derives from a
// density F(x, z0, z1) along z0 = u, z1 = u_x:
//
//   N1 = d/dx{ F_z0 } - (d/dx)^2{ F_z1 }
//      = F_xz0 + F_z0z0 u_x - F_xxz1 - 2 F_xz0z1 u_x - 2 F_xz1z1 u_xx
//        - F_z0z0z1 u_x^2 - 2 F_z0z1z1 u_x u_xx - F_z1z1z1 u_xx^2 - F_z1z1 u_xxx,
//
// and N0(x, u, u_x) is a first-order remainder. The variational origin of N1
// forces a2 = 2 d/dx a3 for the linearized coefficients.
struct NonlinearitySpec {
    std::string name = "zero";
    bool has_density = false;
    bool has_lower_order = false;
    // Mixed partial d^i_x d^j_z0 d^k_z1 F at (x, z0, z1). The coefficient and
    // Hessian assemblies differentiate the expansion of N1 up to twice more,
    // so closures must cover i <= 3, j + k <= 5 (trivial for polynomial F).
    std::function<double(int, int, int, double, double, double)> F;
    // Mixed partial d^j_z0 d^k_z1 N0 at (x, z0, z1), j + k <= 2.
    std::function<double(int, int, double, double, double)> N0;
    // Pointwise amplitude |u| beyond which evaluation refuses to proceed.
    double quadraticity_radius = std::numeric_limits<double>::infinity();
};

// Built-ins: "zero"; "kdv" F = -z0^3/6 (N = -u u_x); "quasilinear"
// F = c z0 z1^2 (N = -2u u_xxx - 4u_x u_xx at c = 1, third order);
// "lower_order" N0 = c z0 z1. Unknown name -> invalid_argument.
NonlinearitySpec make_nonlinearity(const std::string& name, double coeff = 1.0);

struct LinearizedCoefficients {
    SpaceTimeField a0, a1, a2, a3;
};

// N(x, u, u_x, u_xx, u_xxx) snapshot-wise; exact through cubic densities on
// the padded grid. Throws domain_error if max_x |u| exceeds the radius.
PeriodicField eval_N_snapshot(const PeriodicField& u, const NonlinearitySpec& spec);
SpaceTimeField eval_N(const SpaceTimeField& u, const NonlinearitySpec& spec);

// P(u) = u_t + u_xxx + N(x, u, ..., u_xxx); u_t by the 5-node stencil.
SpaceTimeField eval_P(const SpaceTimeField& u, const NonlinearitySpec& spec);

// a_i = (d N / d z_i)(x, u, u_x, u_xx, u_xxx), i = 0..3.
std::array<PeriodicField, 4> coefficient_snapshot(const PeriodicField& u,
                                                  const NonlinearitySpec& spec);
LinearizedCoefficients linearized_coefficients(const SpaceTimeField& u,
                                               const NonlinearitySpec& spec);

// P'(u)h = h_t + (1 + a3) h_xxx + a2 h_xx + a1 h_x + a0 h.
SpaceTimeField apply_P_prime(const SpaceTimeField& u, const SpaceTimeField& h,
                             const NonlinearitySpec& spec);
// Same with precomputed coefficients (shared across many applications).
SpaceTimeField apply_linearized(const LinearizedCoefficients& c, const SpaceTimeField& h);

// Second derivative: P''(u)[h1, h2] = sum_{m,l} N_{z_m z_l}(u) h1^{(m)} h2^{(l)},
// symmetric bilinear, no time-derivative part.
PeriodicField hessian_snapshot(const PeriodicField& u, const PeriodicField& h1,
                               const PeriodicField& h2, const NonlinearitySpec& spec);
SpaceTimeField apply_P_second(const SpaceTimeField& u, const SpaceTimeField& h1,
                              const SpaceTimeField& h2, const NonlinearitySpec& spec);

// max over sampled x of |N(x,0)| + sum_i |(dN/dz_i)(x,0)|; zero for a spec
// that is genuinely at-least-quadratic near the origin.
double quadraticity_defect(const NonlinearitySpec& spec, int samples = 64);

} // namespace kdvq
