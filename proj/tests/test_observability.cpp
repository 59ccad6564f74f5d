#include <doctest.h>

#include <cmath>
#include <complex>
#include <stdexcept>

#include "kdvq/observability.hpp"
#include "kdvq/rng.hpp"

using namespace kdvq;

namespace {

const double kPi = 3.141592653589793238462643383279;

PeriodicField pf_pair(int nm, int n, cplx cplus) {
    PeriodicField out(nm, true);
    out.mode(n) = cplus;
    out.mode(-n) = std::conj(cplus);
    return out;
}

LinearizedCoefficients sample_coeffs(std::uint64_t seed, const TimeGrid& g, int nm, double amp) {
    Rng r(seed);
    LinearizedCoefficients c;
    c.a3 = st_scale(random_st_field(r, g, nm, 4.0, 1.0), amp);
    c.a2 = st_scale(st_dx(c.a3), 2.0);
    c.a1 = st_scale(random_st_field(r, g, nm, 4.0, 1.0), amp);
    c.a0 = st_scale(random_st_field(r, g, nm, 4.0, 1.0), amp);
    return c;
}

} // namespace

TEST_CASE("observability: window moments and energy") {
    Window full{{{0.3, 2.0 * kPi}}};
    CHECK(full.measure() == doctest::Approx(2.0 * kPi).epsilon(1e-15));
    CHECK(std::abs(window_moment(full, 0) - cplx{2.0 * kPi, 0.0}) < 1e-15);
    for (int p : {1, -1, 2, 7}) CHECK(std::abs(window_moment(full, p)) < 1e-13);

    Window half{{{0.0, kPi}}};
    CHECK(std::abs(window_moment(half, 0) - cplx{kPi, 0.0}) < 1e-15);
    // (e^{i p pi} - 1)/(i p): -2/(i p) odd, 0 even
    CHECK(std::abs(window_moment(half, 1) - cplx{0.0, 2.0}) < 1e-14);
    CHECK(std::abs(window_moment(half, 2)) < 1e-14);
    CHECK(std::abs(window_moment(half, -3) - cplx{0.0, -2.0 / 3.0}) < 1e-14);

    // full-circle energy is Parseval: 2 pi sum |v_n|^2
    Rng r(5);
    PeriodicField v = random_real_field(r, 12, 1.0);
    double e = window_energy(v, full);
    double pars = 2.0 * kPi * sobolev_norm(v, 0.0) * sobolev_norm(v, 0.0);
    CHECK(e == doctest::Approx(pars).epsilon(1e-12));

    // int_0^pi |1 + e^{ix}|^2 = int 2 + 2 cos = 2 pi
    PeriodicField u(1, false);
    u.mode(0) = 1.0;
    u.mode(1) = 1.0;
    CHECK(window_energy(u, half) == doctest::Approx(2.0 * kPi).epsilon(1e-13));

    // validation: overlap, wrap overlap, bad length
    CHECK_THROWS_AS(validate_window(Window{{{0.0, 1.0}, {0.5, 1.0}}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_window(Window{{{6.0, 1.0}, {0.1, 1.0}}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_window(Window{{{0.0, 0.0}}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_window(Window{}), std::invalid_argument);
    CHECK_NOTHROW(validate_window(Window{{{5.5, 1.5}, {1.0, 1.0}}})); // disjoint across wrap
}

TEST_CASE("observability: cutoff shape") {
    Window w{{{1.0, kPi}}};
    PeriodicField chi = make_cutoff(w, 64);
    CHECK(chi.is_real);

    double lo = 1e9, hi = -1e9, plateau = 0.0, outside = 0.0;
    for (int i = 0; i < 4096; ++i) {
        double x = 2.0 * kPi * i / 4096;
        double c = eval_at(chi, x).real();
        lo = std::min(lo, c);
        hi = std::max(hi, c);
        double d = std::fmod(x - 1.0 + 2.0 * kPi, 2.0 * kPi);
        if (d >= kPi / 4.0 && d <= 3.0 * kPi / 4.0) plateau = std::max(plateau, std::abs(c - 1.0));
        if (d >= kPi + 0.05 || (d > 0 && d <= -0.05 + 2.0 * kPi && d >= kPi + 0.05))
            outside = std::max(outside, std::abs(c));
    }
    // truncation ripple of the smooth edges: lo -3.1e-5, hi-1 3.3e-5,
    // plateau dev 3.3e-5, outside 3.1e-5 measured at n_max 64
    CHECK(lo > -1e-4);
    CHECK(hi < 1.0 + 1e-4);
    CHECK(plateau < 1e-4);
    CHECK(outside < 1e-4);

    // symmetry about the arc midpoint
    double asym = 0.0;
    for (double d = 0.1; d < kPi / 2.0; d += 0.13) {
        double mid = 1.0 + kPi / 2.0;
        asym = std::max(asym, std::abs(eval_at(chi, mid + d).real() - eval_at(chi, mid - d).real()));
    }
    CHECK(asym < 1e-9);

    PeriodicField chi128 = make_cutoff(w, 128);
    double out128 = 0.0;
    for (int i = 0; i < 4096; ++i) {
        double x = 2.0 * kPi * i / 4096;
        double d = std::fmod(x - 1.0 + 2.0 * kPi, 2.0 * kPi);
        if (d >= kPi + 0.05) out128 = std::max(out128, std::abs(eval_at(chi128, x).real()));
    }
    CHECK(out128 < 3e-6); // measured 2.791e-07: the tail decays fast in n_max
}

TEST_CASE("observability: Ingham gram closed forms") {
    InghamReport one = ingham_gram({5}, 1.0, 0.7);
    CHECK(one.lambda_min == doctest::Approx(0.7).epsilon(1e-14));

    // two modes: lambda_min = T - |(e^{i delta T} - 1)/delta|
    InghamReport two = ingham_gram({0, 1}, 1.0, 1.0);
    double g01 = 2.0 * std::sin(0.5);
    CHECK(two.lambda_min == doctest::Approx(1.0 - g01).epsilon(1e-12));
    CHECK(std::abs(two.gram[1] - std::conj(two.gram[2])) < 1e-15);
    CHECK(std::abs(two.gram[0] - cplx{1.0, 0.0}) < 1e-15);

    std::vector<int> band;
    for (int n = -16; n <= 16; ++n) band.push_back(n);
    InghamReport b16 = ingham_gram(band, 1.0, 1.0);
    std::vector<int> wide;
    for (int n = -24; n <= 24; ++n) wide.push_back(n);
    InghamReport b24 = ingham_gram(wide, 1.0, 1.0);
    // measured 2.190059e-04 vs 2.190051e-04: the band edge barely matters
    CHECK(b16.lambda_min > 0.0);
    CHECK(b24.lambda_min > 0.0);
    CHECK(std::abs(b16.lambda_min - b24.lambda_min) < 0.1 * b16.lambda_min);

    CHECK_THROWS_AS(ingham_gram({0, 1}, 0.4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ingham_gram({}, 1.0, 1.0), std::invalid_argument);

    Window w{{{0.2, kPi / 2.0}}};
    CascadeConstants cc = cascade_constants(4, 1.0, 1.0, w);
    CHECK(cc.c2 == doctest::Approx(cc.c1 * kPi / 2.0).epsilon(1e-14));
    CHECK(cc.c3 == doctest::Approx(cc.c2 / 4.0).epsilon(1e-14));
    CHECK(cc.c4 == doctest::Approx(cc.c3 / 16.0).epsilon(1e-14));
    CHECK(cc.c1 > 0.0);
}

TEST_CASE("observability: free flow ratio is T times the window measure") {
    TimeGrid g{1.0, 48};
    LinearizedCoefficients zc = sample_coeffs(1, g, 8, 0.0);
    ReductionChain chain = build_chain(zc);
    Window full{{{0.0, 2.0 * kPi}}};
    PeriodicField vT = pf_pair(8, 2, cplx{0.4, 0.7});

    double ratio = observability_ratio(OpTag::L0, false, chain, vT, full);
    // measured 6.283185307179585, one ulp off 2 pi
    CHECK(ratio == doctest::Approx(2.0 * kPi).epsilon(1e-10));

    double ratio_adj = observability_ratio(OpTag::L0, true, chain, vT, full);
    CHECK(ratio_adj == doctest::Approx(2.0 * kPi).epsilon(1e-10));

    CHECK_THROWS_AS(observability_ratio(OpTag::L0, false, chain, PeriodicField(8, true), full),
                    std::invalid_argument);
}

TEST_CASE("observability: ratio survives small perturbations") {
    TimeGrid g{1.0, 40};
    Window w{{{0.5, kPi}}};
    LinearizedCoefficients pert = sample_coeffs(17, g, 6, 1e-2);
    LinearizedCoefficients triv = sample_coeffs(17, g, 6, 0.0);
    ReductionChain cp = build_chain(pert);
    ReductionChain ct = build_chain(triv);

    Rng r(202);
    double min_p = 1e300, min_t = 1e300;
    for (int trial = 0; trial < 200; ++trial) {
        PeriodicField vT = random_real_field(r, 32, 0.0);
        double nn = sobolev_norm(vT, 0.0);
        vT = scale(vT, cplx{1.0 / nn, 0.0});
        min_t = std::min(min_t, observability_ratio(OpTag::L0, false, ct, vT, w));
        min_p = std::min(min_p, observability_ratio(OpTag::L0, false, cp, vT, w));
    }
    // measured minima 2.746680 (unperturbed) and 2.619331 (perturbed)
    CHECK(min_t > 0.0);
    CHECK(min_p >= 0.5 * min_t);
}

TEST_CASE("observability: remainder transpose pairing") {
    TimeGrid g{1.0, 16};
    LinearizedCoefficients c = sample_coeffs(7, g, 8, 0.1);
    RemainderFn N = linearized_remainder(c);
    RemainderFn Nt = linearized_remainder_transpose(c);

    Rng r(71);
    double worst = 0.0;
    for (int k : {0, 5, 16}) {
        PeriodicField h = random_complex_field(r, 12, 0.5);
        PeriodicField v = random_complex_field(r, 12, 0.5);
        cplx lhs = inner(truncate(N(h, k), 12), v);
        cplx rhs = inner(h, truncate(Nt(v, k), 12));
        worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
    }
    // measured 1.694e-15
    CHECK(worst < 1e-12);
}

TEST_CASE("observability: free steering on the Airy flow") {
    TimeGrid g{1.0, 64};
    Window w{{{0.7, kPi}}};
    ControlProblem pb;
    pb.grid = g;
    pb.window = w;
    pb.chi = make_cutoff(w, 64);
    pb.g1 = SpaceTimeField(g, 8, true);
    pb.g2 = pf_pair(8, 1, cplx{0.5, 0.0}); // cos x
    pb.g3 = PeriodicField(8, true);
    pb.n_max = 8;

    HumSettings st;
    st.cg_tol = 1e-10;
    HumResult a = hum_solve(pb, nullptr, st);
    // measured: 21 applies, residual 1.344e-11, gap 9.503e-12, ritz 3.083e-04,
    // control norm 19.55
    CHECK(a.report.final_gap < 1e-6);
    CHECK(a.report.cg_iterations <= 300);
    CHECK(a.report.ritz_min > 0.0);
    CHECK(a.report.series_terms == 1);
    CHECK(a.report.mild_defect < 1e-15);
    CHECK(sobolev_norm(sub(a.h.at(0), pb.g2), 0.0) < 1e-15);
    CHECK(sobolev_norm(sub(a.h.at(g.M), pb.g3), 0.0) < 1e-9);

    // same control from a different CG start
    HumSettings st2 = st;
    Rng r(99);
    st2.cg_start = random_real_field(r, 8, 1.0);
    HumResult b = hum_solve(pb, nullptr, st2);
    double gap = traj_norm(st_sub(a.phi, b.phi), 0.0) / a.report.control_norm;
    // measured 6.881e-11
    CHECK(gap < 1e-8);
}

TEST_CASE("observability: hum with zero data returns zero") {
    TimeGrid g{1.0, 32};
    Window w{{{0.0, kPi}}};
    ControlProblem pb;
    pb.grid = g;
    pb.window = w;
    pb.chi = make_cutoff(w, 64);
    pb.g1 = SpaceTimeField(g, 6, true);
    pb.g2 = PeriodicField(6, true);
    pb.g3 = PeriodicField(6, true);
    pb.coeffs = sample_coeffs(13, g, 6, 1e-2);
    pb.n_max = 6;

    HumResult z = hum_solve(pb, nullptr, {});
    CHECK(traj_norm(z.phi, 0.0) == 0.0);
    CHECK(traj_norm(z.h, 0.0) == 0.0);
    CHECK(z.report.final_gap == 0.0);
    CHECK(z.report.cg_iterations == 1); // assembly pass only
    CHECK(z.report.series_terms > 1);
}

TEST_CASE("observability: steering with coefficients matches the Picard solver") {
    TimeGrid g{1.0, 64};
    Window w{{{0.3, kPi}}};
    ControlProblem pb;
    pb.grid = g;
    pb.window = w;
    pb.chi = make_cutoff(w, 64);
    pb.g1 = SpaceTimeField(g, 10, true);
    Rng r(41);
    pb.g2 = random_real_field(r, 6, 3.0);
    pb.g3 = scale(random_real_field(r, 6, 3.0), cplx{0.5, 0.0});
    pb.coeffs = sample_coeffs(31, g, 6, 1e-2);
    pb.n_max = 10;

    ReductionChain chain = build_chain(*pb.coeffs);
    HumResult hr = hum_solve(pb, &chain, {});
    // measured: 34 applies, K = 61 (a3 couples at n^3), gap 2.755e-09,
    // ritz 1.410e-04, defect 4.088e-16
    CHECK(hr.report.final_gap < 1e-6);
    CHECK(hr.report.mild_defect < 1e-12);
    CHECK(hr.report.ritz_min > 0.0);

    // independent check: Picard fixed point under the forcing hum built
    SpaceTimeField forcing(g, 10, true);
    for (int k = 0; k <= g.M; ++k)
        forcing.at(k) = truncate(multiply(pb.chi, hr.phi.at(k)), 10);
    RemainderFn N = linearized_remainder(*pb.coeffs);
    // the control forcing oscillates at the flow frequencies, meaningless for
    // the pointwise residual gate at this M; the discrete fixed point is what
    // the comparison certifies
    CauchySettings cs;
    cs.check_residual = false;
    SpaceTimeField u5 = solve_L5(truncate(pb.g2, 10), forcing, 1.0, N, cs);
    double diff = traj_norm(st_sub(u5, hr.h), 0.0);
    double endg = sobolev_norm(sub(u5.at(g.M), truncate(pb.g3, 10)), 0.0);
    // measured 7.630e-16 and 2.755e-09: the series and the Picard iteration
    // land on the same discrete fixed point
    CHECK(diff < 1e-13);
    CHECK(endg < 1e-6);
}

TEST_CASE("observability: graded norm offsets") {
    TimeGrid g{1.0, 32};
    // constant-in-time single pair: time derivatives vanish, offsets show raw
    SpaceTimeField u(g, 4, true);
    for (int k = 0; k <= g.M; ++k) u.at(k) = pf_pair(4, 2, cplx{0.3, 0.1});
    double ref6 = sobolev_norm(u.at(0), 2.0 + 6.0);
    CHECK(x_norm(u, 2.0) == doctest::Approx(ref6).epsilon(1e-10));

    SpaceTimeField f(g, 4, true);
    GradedNormPack pk = graded_norms(u, f, f, PeriodicField(4, true), u.at(0), 2.0);
    CHECK(pk.es == doctest::Approx(pk.xs_u + pk.xs_f).epsilon(1e-15));
    CHECK(pk.fs == doctest::Approx(sobolev_norm(u.at(0), 8.0)).epsilon(1e-10));

    // monotone in s
    Rng r(3);
    SpaceTimeField v = random_st_field(r, g, 8, 2.0, 1.0);
    CHECK(x_norm(v, 0.0) <= x_norm(v, 1.5));
    CHECK(f_norm(v, PeriodicField(4, true), PeriodicField(4, true), 0.0) <=
          f_norm(v, PeriodicField(4, true), PeriodicField(4, true), 1.5));
}

TEST_CASE("observability: commutator slope and tame ratio") {
    TimeGrid g{1.0, 16};
    ControlProblem pb;
    pb.grid = g;
    pb.window = Window{{{0.0, kPi}}};
    pb.chi = make_cutoff(pb.window, 32);
    pb.g1 = SpaceTimeField(g, 4, true);
    pb.g2 = pf_pair(4, 1, cplx{0.5, 0.0});
    pb.g3 = PeriodicField(4, true);
    pb.coeffs = sample_coeffs(5, g, 4, 1e-2);

    SpaceTimeField zero(g, 4, true);
    RegularityReport r2 = higher_regularity_check(zero, zero, pb, 2.0);
    // measured slope 0.9991, delta 1.710
    CHECK(r2.commutator_slope == doctest::Approx(1.0).epsilon(0.2));
    CHECK(r2.tame_ratio == 0.0);
    CHECK(r2.delta_s > 0.0);

    RegularityReport r25 = higher_regularity_check(zero, zero, pb, 2.5);
    CHECK(r25.commutator_slope == doctest::Approx(1.5).epsilon(0.15));
}

TEST_CASE("observability: right inverse at the flat state is Airy steering") {
    TimeGrid g{1.0, 64};
    Window w{{{0.7, kPi}}};
    NonlinearitySpec kdv = make_nonlinearity("kdv");
    SpaceTimeField u0(g, 8, true), f0(g, 8, true);
    SpaceTimeField g1(g, 8, true);
    PeriodicField g2 = scale(pf_pair(8, 1, cplx{0.5, 0.0}), cplx{1e-3, 0.0});
    PeriodicField g3 = scale(pf_pair(8, 2, cplx{0.0, -0.5}), cplx{1e-3, 0.0}); // sin 2x

    PsiResult a = right_inverse_psi(u0, f0, g1, g2, g3, kdv, w);
    // measured: gap 1.370e-13, mild 5.4e-20, fd 1.77e-03 (stencil noise at
    // this M, reported only), 20 applies
    CHECK(a.report.final_gap < 1e-8);
    CHECK(a.mild_defect < 1e-12);
    CHECK(sobolev_norm(sub(a.h.at(0), g2), 0.0) < 1e-15);

    // the pair argument is carried only for semantics
    Rng r(8);
    SpaceTimeField f1 = random_st_field(r, g, 8, 2.0, 1.0);
    PsiResult b = right_inverse_psi(u0, f1, g1, g2, g3, kdv, w);
    CHECK(traj_norm(st_sub(a.phi, b.phi), 0.0) == 0.0);

    // linearization at a small state stays well posed and steers
    SpaceTimeField us = st_scale(random_st_field(r, g, 6, 3.0, 1.0), 1e-3);
    PsiResult c = right_inverse_psi(us, f0, g1, g2, g3, kdv, w);
    // measured: gap 5.788e-13, mild 2.6e-19, K = 7
    CHECK(c.report.final_gap < 1e-8);
    CHECK(c.mild_defect < 1e-10);

    SpaceTimeField forcing(g, 8, true);
    PeriodicField chi = make_cutoff(w, 64);
    for (int k = 0; k <= g.M; ++k) forcing.at(k) = truncate(multiply(chi, c.phi.at(k)), 8);
    RemainderFn N = linearized_remainder(linearized_coefficients(us, kdv));
    CauchySettings cs;
    cs.check_residual = false; // oscillatory forcing, same note as above
    SpaceTimeField u5 = solve_L5(truncate(g2, 8), forcing, 1.0, N, cs);
    double endg = sobolev_norm(sub(u5.at(g.M), truncate(g3, 8)), 0.0);
    // measured 5.788e-13
    CHECK(endg < 1e-8);
}

TEST_CASE("observability: failure paths") {
    TimeGrid g{1.0, 32};
    Window w{{{0.0, kPi}}};
    ControlProblem pb;
    pb.grid = g;
    pb.window = w;
    pb.chi = make_cutoff(w, 64);
    pb.g1 = SpaceTimeField(g, 12, true);
    pb.g2 = pf_pair(12, 1, cplx{0.5, 0.0});
    pb.g3 = pf_pair(12, 11, cplx{0.0, 0.5});
    pb.n_max = 12;

    // starved CG budget must surface as an observability failure with a Ritz value
    HumSettings st;
    st.cg_tol = 1e-12;
    st.max_cg = 4;
    bool threw = false;
    try {
        hum_solve(pb, nullptr, st);
    } catch (const ObservabilityFailure& e) {
        threw = true;
        // measured ritz 1.544e-03
        CHECK(e.ritz_min >= 0.0);
        CHECK(std::isfinite(e.ritz_min));
    }
    CHECK(threw);

    // cutoff out of range
    ControlProblem bad = pb;
    bad.chi = PeriodicField(4, true);
    bad.chi.mode(0) = 2.0;
    CHECK_THROWS_AS(hum_solve(bad, nullptr, {}), std::invalid_argument);

    // window validation propagates
    ControlProblem bw = pb;
    bw.window = Window{};
    CHECK_THROWS_AS(hum_solve(bw, nullptr, {}), std::invalid_argument);

    // coefficients too large for the fixed series
    ControlProblem huge = pb;
    huge.coeffs = sample_coeffs(3, g, 6, 50.0);
    CHECK_THROWS_AS(hum_solve(huge, nullptr, {}), std::invalid_argument);
}
