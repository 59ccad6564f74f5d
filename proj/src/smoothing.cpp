#include "kdvq/smoothing.hpp"

#include <cmath>
#include <stdexcept>

namespace kdvq {

namespace {
double bump(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
double bump_prime(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }
} // namespace

SmoothingConfig::SmoothingConfig() {
    phi = [](double xi) {
        double a = std::abs(xi);
        if (a <= 1.0) return 1.0;
        if (a >= 2.0) return 0.0;
        double r1 = bump(2.0 - a), r2 = bump(a - 1.0);
        return r1 / (r1 + r2);
    };
    phi_prime = [](double xi) {
        double a = std::abs(xi);
        if (a <= 1.0 || a >= 2.0) return 0.0;
        double r1 = bump(2.0 - a), r2 = bump(a - 1.0);
        double d = (-bump_prime(2.0 - a) * r2 - r1 * bump_prime(a - 1.0)) / ((r1 + r2) * (r1 + r2));
        return xi < 0.0 ? -d : d;
    };
}

const SmoothingConfig& default_smoothing() {
    static const SmoothingConfig cfg;
    return cfg;
}

PeriodicField smooth(const PeriodicField& h, double theta, const SmoothingConfig& cfg) {
    if (theta < 1.0) throw std::invalid_argument("smooth: theta >= 1 required");
    PeriodicField r = h;
    for (int n = -h.n_max; n <= h.n_max; ++n) r.mode(n) = h.mode(n) * cfg.phi(n / theta);
    return r;
}

SpaceTimeField st_smooth(const SpaceTimeField& h, double theta, const SmoothingConfig& cfg) {
    return st_map(h, [&](const PeriodicField& f) { return smooth(f, theta, cfg); });
}

PeriodicField smooth_dtheta(const PeriodicField& h, double theta, const SmoothingConfig& cfg) {
    if (theta < 1.0) throw std::invalid_argument("smooth_dtheta: theta >= 1 required");
    PeriodicField r = h;
    for (int n = -h.n_max; n <= h.n_max; ++n)
        r.mode(n) = h.mode(n) * (-(double(n) / (theta * theta)) * cfg.phi_prime(n / theta));
    return r;
}

PeriodicField smoothing_block(const PeriodicField& h, int j,
                              const std::function<double(int)>& theta, const SmoothingConfig& cfg) {
    double tj1 = theta(j + 1);
    double dj = tj1 - theta(j);
    if (j == 0) return scale(smooth(h, tj1, cfg), 1.0 / dj);
    return scale(sub(smooth(h, tj1, cfg), smooth(h, theta(j), cfg)), 1.0 / dj);
}

} // namespace kdvq
