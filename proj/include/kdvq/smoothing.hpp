#pragma once

#include <functional>

#include "kdvq/field.hpp"

namespace kdvq {

// Frequency cutoff profile: phi = 1 on [0,1], 0 on [2,inf), smooth monotone
// in between. phi_prime is its derivative (used for the theta-derivative of
// the smoothing family).
struct SmoothingConfig {
    std::function<double(double)> phi;
    std::function<double(double)> phi_prime;
    SmoothingConfig();
};

const SmoothingConfig& default_smoothing();

// S_theta: mode n scaled by phi(n/theta). Requires theta >= 1.
PeriodicField smooth(const PeriodicField& h, double theta, const SmoothingConfig& cfg = default_smoothing());
SpaceTimeField st_smooth(const SpaceTimeField& h, double theta, const SmoothingConfig& cfg = default_smoothing());

// d/dtheta S_theta: mode n scaled by -(n/theta^2) phi'(n/theta).
PeriodicField smooth_dtheta(const PeriodicField& h, double theta, const SmoothingConfig& cfg = default_smoothing());

// R_j = (S_{theta_{j+1}} - S_{theta_j}) / (theta_{j+1} - theta_j); R_0 = S_{theta_1} / Delta_0.
PeriodicField smoothing_block(const PeriodicField& h, int j,
                              const std::function<double(int)>& theta,
                              const SmoothingConfig& cfg = default_smoothing());

} // namespace kdvq
