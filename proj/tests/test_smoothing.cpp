#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "kdvq/field.hpp"
#include "kdvq/smoothing.hpp"

using namespace kdvq;

TEST_CASE("cutoff profile: plateau, support, interior values") {
    const SmoothingConfig& cfg = default_smoothing();
    CHECK(cfg.phi(0.0) == 1.0);
    CHECK(cfg.phi(0.999) == 1.0);
    CHECK(cfg.phi(-0.5) == 1.0);
    CHECK(cfg.phi(2.0) == 0.0);
    CHECK(cfg.phi(5.0) == 0.0);
    // Midpoint is exactly 1/2 by the symmetry of the two bump factors.
    CHECK(cfg.phi(1.5) == doctest::Approx(0.5).epsilon(1e-15));
    // phi(4/3) = 1/(1 + e^{-3/2}), frozen from the closed form.
    CHECK(cfg.phi(4.0 / 3.0) == doctest::Approx(0.81757447619364366).epsilon(1e-14));
    CHECK(cfg.phi(1.2) > cfg.phi(1.5));
    CHECK(cfg.phi(1.5) > cfg.phi(1.8));
    // derivative: centered difference agreement away from the plateau edges
    for (double xi : {1.2, 1.5, 1.75}) {
        double h = 1e-6;
        double fd = (cfg.phi(xi + h) - cfg.phi(xi - h)) / (2.0 * h);
        CHECK(cfg.phi_prime(xi) == doctest::Approx(fd).epsilon(1e-7));
    }
    CHECK(cfg.phi_prime(0.5) == 0.0);
    CHECK(cfg.phi_prime(3.0) == 0.0);
}

TEST_CASE("frequency cutoff acts mode by mode") {
    Rng r(13);
    PeriodicField u = random_real_field(r, 32, 0.0);
    PeriodicField s4 = smooth(u, 4.0);
    const SmoothingConfig& cfg = default_smoothing();
    for (int n = -32; n <= 32; ++n) {
        cplx expect = u.mode(n) * cfg.phi(std::abs(double(n)) / 4.0);
        CHECK(std::abs(s4.mode(n) - expect) < 1e-15);
    }
    // identity once theta covers the full truncation
    CHECK(sobolev_norm(sub(smooth(u, 32.0), u), 5.0) == 0.0);
    // low-pass: everything above 2 theta is annihilated
    for (int n = 9; n <= 32; ++n) CHECK(std::abs(s4.mode(n)) == 0.0);
    CHECK_THROWS_AS(smooth(u, 0.5), std::invalid_argument);
}

TEST_CASE("smoothing estimates hold with moderate constants") {
    Rng r(29);
    PeriodicField u = random_real_field(r, 64, 0.0);
    // ||S_theta u||_b <= C theta^{b-a} ||u||_a for b >= a
    for (double theta : {2.0, 4.0, 8.0}) {
        double lhs = sobolev_norm(smooth(u, theta), 3.0);
        double rhs = std::pow(2.0 * theta, 3.0 - 1.0) * sobolev_norm(u, 1.0);
        CHECK(lhs <= 1.5 * rhs);
    }
    // ||(I - S_theta) u||_a <= C theta^{a-b} ||u||_b for b >= a
    for (double theta : {2.0, 4.0, 8.0}) {
        PeriodicField rem = sub(u, smooth(u, theta));
        double lhs = sobolev_norm(rem, 1.0);
        double rhs = std::pow(theta, 1.0 - 3.0) * sobolev_norm(u, 3.0);
        CHECK(lhs <= 1.5 * rhs);
    }
}

TEST_CASE("theta-derivative of the family matches finite differences") {
    Rng r(17);
    PeriodicField u = random_real_field(r, 24, 0.5);
    double theta = 5.0, h = 1e-5;
    PeriodicField fd = scale(sub(smooth(u, theta + h), smooth(u, theta - h)), 1.0 / (2.0 * h));
    PeriodicField an = smooth_dtheta(u, theta);
    CHECK(sobolev_norm(sub(fd, an), 0.0) < 1e-8 * std::max(1.0, sobolev_norm(an, 0.0)));
}

TEST_CASE("dyadic-style blocks telescope back to the cutoff") {
    auto theta = [](int j) { return double(j + 1); };
    Rng r(41);
    PeriodicField u = random_complex_field(r, 40, 0.0);
    PeriodicField acc(40, false);
    int J = 12;
    for (int j = 0; j <= J; ++j) {
        // Delta_j = theta_{j+1} - theta_j = 1 for the linear ladder
        PeriodicField rj = smoothing_block(u, j, theta);
        acc = axpy(acc, rj, theta(j + 1) - theta(j));
    }
    PeriodicField target = smooth(u, theta(J + 1));
    CHECK(sobolev_norm(sub(acc, target), 0.0) < 1e-13 * sobolev_norm(u, 0.0));
}
