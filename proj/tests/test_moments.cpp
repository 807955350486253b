#include <catch2/catch_amalgamated.hpp>

#include "oux/moments.hpp"

#include <cmath>
#include <random>

using Catch::Approx;
using namespace oux;

TEST_CASE("unconstrained moments on the benchmark", "[moments]") {
    for (double th : {kPi / 6.0, kPi / 3.0, kPi / 2.0, kPi, 0.4}) {
        ModelParams mp;
        mp.theta = th;
        const MomentSet ms = unconstrained_moments(mp, 1.0);
        REQUIRE(ms.m11 == Approx(0.4 * std::exp(-1.0)).margin(1e-14));
        REQUIRE(ms.m11 == Approx(0.147152).margin(5e-7));
        REQUIRE(ms.m22 == Approx(ms.m11).margin(1e-15));
        REQUIRE(ms.m12 == Approx(0.0).margin(1e-15));
        REQUIRE(ms.vstar == Approx(0.294304).margin(5e-7));
        REQUIRE(ms.vstar == Approx(ms.m11 + ms.m22 - 2.0 * ms.m12).margin(1e-15));
        REQUIRE(ms.m11sq >= ms.m11 * ms.m11);
        REQUIRE(ms.m22sq >= ms.m22 * ms.m22);
        REQUIRE(ms.m12sq >= ms.m12 * ms.m12);
        // Var v+ = sum of weighted factor variances: (2 + theta_1^2 + theta_2^2) w
        const double w = -d_integral_I_at_zero({1.0, 5.0, 1.0, 1.0}, 2).real();
        const Pair tw = mp.weights();
        REQUIRE(ms.vplus_var_terms == Approx((2.0 + tw[0] * tw[0] + tw[1] * tw[1]) * w).epsilon(1e-12));
    }
}

TEST_CASE("moments vanish as the horizon shrinks", "[moments]") {
    const ModelParams mp;
    const MomentSet ms = unconstrained_moments(mp, 1e-6);
    REQUIRE(ms.vstar < 1e-12);
    REQUIRE(ms.vplus_var_terms < 1e-18);
    REQUIRE(ms.m11sq < 1e-12);
}

TEST_CASE("initial levels shift the means", "[moments]") {
    ModelParams mp;
    mp.F0 = {0.04, 0.0};
    const MomentSet ms = unconstrained_moments(mp, 1.0);
    REQUIRE(ms.m11 == Approx(0.4 * std::exp(-1.0) + 0.04 * (1.0 - std::exp(-1.0))).margin(1e-14));
    REQUIRE(ms.m22 == Approx(0.4 * std::exp(-1.0)).margin(1e-14));
}

TEST_CASE("indicator transform", "[moments]") {
    REQUIRE(indicator_transform(1.0, 3.0, 0.0) == Complex(2.0, 0.0));
    const double y = 0.7;
    const Complex direct = (std::exp(kI * 3.0 * y) - std::exp(kI * 1.0 * y)) / (kI * y);
    REQUIRE(std::abs(indicator_transform(1.0, 3.0, y) - direct) < 1e-14);
}

TEST_CASE("constrained characteristic function", "[moments]") {
    const ModelParams mp;
    REQUIRE(constrained_cf(mp, 1.0, 0.3, 2.0, 2.0) == Complex{});
    const Complex mass = constrained_cf(mp, 1.0, 0.0, 0.0, 5.0);
    REQUIRE(mass.real() >= 0.998);
    REQUIRE(mass.real() <= 1.0 + 1e-9);
    REQUIRE(std::abs(mass.imag()) < 1e-10);
    REQUIRE(constrained_cf(mp, 1.0, 0.0, -50.0, 50.0).real() == Approx(1.0).margin(1e-4));

    // the whole-line limit recovers the unconstrained CF
    const ConstrainedTransform tr(mp, 1.0, 1, 50.0);
    for (double u : {0.5, 2.0, -3.0}) REQUIRE(std::abs(tr.cf(u, -50.0, 50.0) - cf_vplus(mp, 1.0, u)) < 1e-6);

    // m(1) = -i d/du phi(u, a, b) at 0
    const double h = 1e-4;
    const Complex dphi = (tr.cf(h, 0.0, 0.5) - tr.cf(-h, 0.0, 0.5)) / (2.0 * h);
    REQUIRE((-kI * dphi).real() == Approx(tr.raw(0.0, 0.5)[1]).margin(1e-8));
}

TEST_CASE("raw constrained moments", "[moments]") {
    const ModelParams mp;
    const MomentSet ms = unconstrained_moments(mp, 1.0);
    const std::vector<double> m = constrained_raw_moments(mp, 1.0, 0.0, 5.0, 3);
    REQUIRE(m[0] >= 0.998);
    REQUIRE(m[0] <= 1.0 + 1e-9);
    REQUIRE(m[1] == Approx(ms.vstar).margin(2e-3));
    REQUIRE(m[2] == Approx(ms.vstar * ms.vstar + ms.vplus_var_terms).epsilon(0.01));
    REQUIRE(constrained_raw_moments(mp, 1.0, 1.0, 1.0, 2) == std::vector<double>{0.0, 0.0, 0.0});
    ModelParams init = mp;
    init.V0 = {0.01, 0.0};
    REQUIRE_THROWS_AS(constrained_raw_moments(init, 1.0, 0.0, 5.0, 3), NotSupportedError);
}

TEST_CASE("window additivity and monotone mass", "[moments][property]") {
    const ModelParams mp;
    const ConstrainedTransform tr(mp, 1.0, 3, 5.0);
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (int i = 0; i < 30; ++i) {
        double x[3] = {u(gen), u(gen), u(gen)};
        std::sort(x, x + 3);
        const auto ac = tr.raw(x[0], x[2]);
        const auto ab = tr.raw(x[0], x[1]);
        const auto bc = tr.raw(x[1], x[2]);
        for (int k = 0; k <= 3; ++k) REQUIRE(ac[k] == Approx(ab[k] + bc[k]).margin(1e-8));
    }
    double prev = 0.0;
    for (int i = 1; i <= 100; ++i) {
        const double m = tr.raw(0.0, 0.02 * i)[0];
        REQUIRE(m >= prev - 1e-10);
        prev = m;
    }
}

TEST_CASE("centering round trip", "[moments][property]") {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> raw{u(gen), u(gen), u(gen), u(gen)};
        const double c = u(gen);
        const std::vector<double> back = uncenter_moments(center_moments(raw, c), c);
        for (int k = 0; k < 4; ++k) REQUIRE(back[k] == Approx(raw[k]).margin(1e-10));
        REQUIRE(center_moments(raw, c)[0] == raw[0]);
        REQUIRE(center_moments(raw, 0.0) == raw);
    }
}

TEST_CASE("density by FFT inversion", "[moments]") {
    const ModelParams mp;
    const DensityGrid g = pdf_fft(mp, 1.0, 0.0, 5.0, 4096);
    REQUIRE(g.x.size() == 4096);
    REQUIRE(g.eta == Approx(5.0 / 4096));
    REQUIRE(g.delta == Approx(2.0 * kPi / 5.0));
    REQUIRE(g.mass() >= 0.998);
    REQUIRE(g.mass() <= 1.0 + 1e-9);
    REQUIRE(g.min_raw > -1e-6);
    const double mean = grid_raw_moment(g, 1, 0.0, 5.0);
    REQUIRE(mean == Approx(unconstrained_moments(mp, 1.0).vstar).epsilon(0.01));
    const auto mode = std::max_element(g.pdf.begin(), g.pdf.end()) - g.pdf.begin();
    REQUIRE(g.x[mode] < 0.5);
    REQUIRE(grid_skewness(g) > 0.0);

    REQUIRE_THROWS_AS(pdf_fft(mp, 1.0, 0.0, 5.0, 1000), std::invalid_argument);
    // a window far inside the support aliases the tail back in
    REQUIRE_THROWS_AS(pdf_fft(mp, 1.0, 0.0, 0.05, 1024), std::runtime_error);
    REQUIRE_THROWS_AS(pdf_fft(mp, 1.0, 0.0, 0.01, 4096), std::runtime_error);
    for (double th : {kPi / 3.0, kPi / 2.0, kPi}) {
        ModelParams m = mp;
        m.theta = th;
        REQUIRE_NOTHROW(pdf_fft(m, 1.0, 0.0, 5.0, 4096));
        REQUIRE_NOTHROW(pdf_fft(m, 1.0, 0.0, 2.0, 1024));
    }
}

TEST_CASE("convolution and density routes agree", "[moments][oracle]") {
    const ModelParams mp;
    const DensityGrid g = pdf_fft(mp, 1.0, 0.0, 5.0, 4096);
    const std::vector<double> knots = uniform_knots(0.0, 5.0, 64);
    const ConstrainedMoments conv = constrained_moments_table(mp, 1.0, knots);
    const ConstrainedMoments grid = constrained_moments_table(g, knots);
    REQUIRE(conv.centered_per_knot.size() == 64);
    double total = 0.0;
    for (std::size_t j = 0; j < 64; ++j) {
        for (int l = 0; l < 4; ++l) REQUIRE(conv.centered_per_knot[j][l] == Approx(grid.centered_per_knot[j][l]).margin(1e-4));
        REQUIRE(conv.centered_per_knot[j][0] >= -1e-10);
        total += conv.centered_per_knot[j][0];
    }
    REQUIRE(total == Approx(constrained_raw_moments(mp, 1.0, 0.0, 5.0, 0)[0]).margin(1e-8));
    for (int k = 0; k < 4; ++k) REQUIRE(conv.raw[k] == Approx(grid.raw[k]).margin(1e-4));
}

TEST_CASE("density export", "[moments]") {
    const DensityGrid g = pdf_fft(ModelParams{}, 1.0, 0.0, 5.0, 256);
    std::ostringstream os;
    write_density(g, os);
    const std::string s = os.str();
    REQUIRE(s.rfind("x,pdf\n", 0) == 0);
    REQUIRE(std::count(s.begin(), s.end(), '\n') == 257);
}
