#include <catch2/catch_amalgamated.hpp>

#include "oux/charfn.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>

using Catch::Approx;
using namespace oux;

namespace {

// Independent oracle: the defining integral int_0^{lambda t} Psi(x (1 - e^{-lambda t + s}) / lambda) ds
// with Psi(z) = -a (sqrt(b^2 - 2iz) - b) rationalized,
// real and imaginary parts integrated separately.
Complex integral_I_oracle(const IGParams& p, Complex x) {
    using boost::math::quadrature::gauss_kronrod;
    const double L = p.lambda * p.t;
    auto psi = [&](double s) {
        const Complex z = x * (-std::expm1(-L + s)) / p.lambda;
        return 2.0 * kI * p.a * z / (std::sqrt(p.b * p.b - 2.0 * kI * z) + p.b);
    };
    const double re = gauss_kronrod<double, 61>::integrate([&](double s) { return psi(s).real(); }, 0.0, L, 15, 1e-14);
    const double im = gauss_kronrod<double, 61>::integrate([&](double s) { return psi(s).imag(); }, 0.0, L, 15, 1e-14);
    return {re, im};
}

double rel_err(Complex a, Complex b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// int_0^V v^n / (1 - v) dv by quadrature, and the binomial form
// lambda t + sum_k C(n,k) (-1)^k (1 - e^{-k lambda t}) / k, which cancels badly
// for small lambda t.
double power_log_quadrature(int n, double V) {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 61>::integrate([n](double v) { return std::pow(v, n) / (1.0 - v); }, 0.0, V, 10, 1e-14);
}

double binomial_form(int n, double lt) {
    double s = lt;
    double c = 1.0;
    for (int k = 1; k <= n; ++k) {
        c = c * (n - k + 1) / k;
        s += c * ((k % 2) ? -1.0 : 1.0) * (-std::expm1(-k * lt)) / k;
    }
    return s;
}

}  // namespace

TEST_CASE("IG characteristic exponent", "[charfn]") {
    REQUIRE(std::abs(ig_exponent(1.0, 5.0, 0.0)) == 0.0);
    const Complex z1 = ig_exponent(1.0, 5.0, 1.0);
    REQUIRE(z1.real() == Approx(-0.003992).margin(5e-7));
    REQUIRE(z1.imag() == Approx(0.199840).margin(5e-7));
    const Complex z2 = ig_exponent(1.0, 5.0, Complex(0.0, 2.0));
    REQUIRE(z2.real() == Approx(-0.38516).margin(5e-6));
    REQUIRE(std::abs(z2.imag()) < 1e-15);
}

TEST_CASE("closed-form I matches quadrature of its defining integral", "[charfn][oracle]") {
    const IGParams p{1.0, 5.0, 1.0, 1.0};
    REQUIRE(integral_I(p, 0.0) == Complex{});
    REQUIRE(rel_err(integral_I(p, -0.5), integral_I_oracle(p, -0.5)) < 1e-8);
    REQUIRE(rel_err(integral_I(p, Complex(0.0, -5.0)), integral_I_oracle(p, Complex(0.0, -5.0))) < 1e-8);

    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> ua(0.2, 3.0), ub(0.5, 10.0), ul(0.1, 5.0), ut(0.1, 5.0);
    std::uniform_real_distribution<double> radius(0.0, 10.0), phase(0.0, kPi);
    for (int i = 0; i < 100; ++i) {
        const IGParams q{ua(gen), ub(gen), ul(gen), ut(gen)};
        const Complex x = std::polar(radius(gen), phase(gen));
        INFO("a=" << q.a << " b=" << q.b << " lambda=" << q.lambda << " t=" << q.t << " x=" << x);
        REQUIRE(rel_err(integral_I(q, x), integral_I_oracle(q, x)) < 1e-8);
    }
}

TEST_CASE("I keeps its relative accuracy near zero and for long horizons", "[charfn]") {
    const IGParams p{1.0, 5.0, 1.0, 1.0};
    for (double x : {1e-11, 1e-8, 1e-6, 1e-4, 1e-2}) {
        REQUIRE(rel_err(integral_I(p, x), integral_I_oracle(p, x)) < 1e-12);
        REQUIRE(rel_err(integral_I(p, -x), integral_I_oracle(p, -x)) < 1e-12);
        REQUIRE(rel_err(integral_I(p, Complex(0.0, x)), integral_I_oracle(p, Complex(0.0, x))) < 1e-12);
    }
    // exp(-lambda t) = 1.4e-11
    const IGParams slow{1.0, 1.0, 5.0, 5.0};
    for (Complex x : {Complex(3.0, 0.0), Complex(0.0, 3.0), Complex(-3.0, 0.1)})
        REQUIRE(rel_err(integral_I(slow, x), integral_I_oracle(slow, x)) < 1e-12);
}

TEST_CASE("derivatives of I at zero", "[charfn]") {
    const IGParams p{1.0, 5.0, 1.0, 1.0};
    const Complex d1 = d_integral_I_at_zero(p, 1);
    REQUIRE(d1.real() == Approx(0.0).margin(1e-16));
    REQUIRE(d1.imag() == Approx(0.2 * std::exp(-1.0)).margin(1e-12));
    REQUIRE(d1.imag() == Approx(0.073576).margin(5e-7));
    const Complex d2 = d_integral_I_at_zero(p, 2);
    const double expected = -(1.0 - 2.0 * (1.0 - std::exp(-1.0)) + 0.5 * (1.0 - std::exp(-2.0))) / 125.0;
    REQUIRE(d2.real() == Approx(expected).margin(1e-14));
    REQUIRE(d2.real() == Approx(-0.00134474).margin(5e-9));

    // second-order central difference of I with step 1e-4
    const double h = 1e-4;
    const Complex fd2 = (integral_I(p, h) - 2.0 * integral_I(p, 0.0) + integral_I(p, -h)) / (h * h);
    REQUIRE(std::abs(fd2 - d2) < 1e-6);
}

TEST_CASE("power-log integral", "[charfn]") {
    for (double lt : {0.05, 0.3, 1.0, 2.5}) {
        const double V = -std::expm1(-lt);
        for (int n = 1; n <= 6; ++n) {
            REQUIRE(detail::power_log_integral(n, V, lt) == Approx(power_log_quadrature(n, V)).epsilon(1e-12));
            if (lt >= 1.0) REQUIRE(detail::power_log_integral(n, V, lt) == Approx(binomial_form(n, lt)).epsilon(1e-12));
        }
    }
}

TEST_CASE("derivatives of I match finite differences", "[charfn][oracle]") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> ux(-5.0, -0.01);
    const IGParams p{1.0, 5.0, 1.0, 1.0};
    for (int i = 0; i < 25; ++i) {
        const double x = ux(gen);
        const double h = 1e-3 * std::max(1.0, std::abs(x));
        const Complex fd1 = (integral_I(p, x + h) - integral_I(p, x - h)) / (2.0 * h);
        const Complex fd2 = (integral_I(p, x + h) - 2.0 * integral_I(p, x) + integral_I(p, x - h)) / (h * h);
        REQUIRE(rel_err(d_integral_I(p, 1, x), fd1) < 1e-6);
        REQUIRE(rel_err(d_integral_I(p, 2, x), fd2) < 1e-5);
    }
    // higher orders chain through lower ones
    const double x = -1.3;
    const double h = 1e-4;
    for (int n = 2; n <= 4; ++n) {
        const Complex fd = (d_integral_I(p, n - 1, x + h) - d_integral_I(p, n - 1, x - h)) / (2.0 * h);
        REQUIRE(rel_err(d_integral_I(p, n, x), fd) < 1e-5);
    }
}

TEST_CASE("quadrature derivatives converge to the closed forms at zero", "[charfn]") {
    const IGParams p{1.0, 5.0, 1.0, 1.0};
    for (int n = 1; n <= 8; ++n) {
        const Complex at0 = d_integral_I_at_zero(p, n);
        for (double x : {1e-8, -1e-8}) {
            const DerivativeSet d = integral_I_derivatives(p, x, n);
            REQUIRE(std::abs(d[n - 1] - at0) < 1e-6);
        }
    }
    REQUIRE_THROWS_AS(d_integral_I(p, 9, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(d_integral_I(p, 3, 0.5, 2), std::invalid_argument);
}

TEST_CASE("characteristic function of the integrated covariance", "[charfn]") {
    ModelParams mp;
    const CFEvaluation zero = cf_integrated_cov(mp, 1.0, {});
    REQUIRE(zero.value == Complex(1.0, 0.0));
    REQUIRE(cf_vplus(mp, 1.0, 0.0) == Complex(1.0, 0.0));
    REQUIRE(cf_vplus(mp, 1.0, 1.0) == cf_integrated_cov(mp, 1.0, ComplexMatrixArg::scaled_m(1.0)).value);

    // zero initial levels: only the I terms remain, with weights theta_l
    const Pair w = mp.weights();
    const double u = 1.7;
    Complex k{};
    for (int l = 0; l < 2; ++l) {
        k += integral_I(factor_F(mp, l, 1.0), u);
        k += integral_I(factor_V(mp, l, 1.0), w[l] * u);
    }
    REQUIRE(std::abs(cf_vplus(mp, 1.0, u) - std::exp(k)) < 1e-13);

    const CFEvaluation e = cf_integrated_cov(mp, 1.0, ComplexMatrixArg::logprice(0.3, -0.8));
    REQUIRE(std::abs(e.value - std::exp(e.k1 + e.k2)) < 1e-15);
}

TEST_CASE("initial levels enter linearly", "[charfn]") {
    ModelParams mp;
    mp.F0 = {0.02, 0.03};
    mp.V0 = {0.01, 0.04};
    ModelParams z = mp;
    z.F0 = z.V0 = {0.0, 0.0};
    const double u = 2.0;
    const Pair w = mp.weights();
    double lin = 0.0;
    for (int l = 0; l < 2; ++l) {
        lin += initial_level_weight(mp.lambdaF[l], 1.0) * mp.F0[l];
        lin += w[l] * initial_level_weight(mp.lambdaV[l], 1.0) * mp.V0[l];
    }
    REQUIRE(std::abs(cf_vplus(mp, 1.0, u) - cf_vplus(z, 1.0, u) * std::exp(kI * u * lin)) < 1e-14);
}

TEST_CASE("CF of v+ is Hermitian and bounded", "[charfn][property]") {
    ModelParams mp;
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> uu(-200.0, 200.0), ut(-kPi, kPi);
    for (int i = 0; i < 200; ++i) {
        mp.theta = ut(gen);
        const double u = uu(gen);
        const Complex p = cf_vplus(mp, 1.0, u);
        const Complex m = cf_vplus(mp, 1.0, -u);
        REQUIRE(std::abs(m - std::conj(p)) < 1e-12);
        REQUIRE(std::abs(p) <= 1.0 + 1e-9);
    }
}

TEST_CASE("log-price CF has unit modulus bound on marginals", "[charfn]") {
    ModelParams mp;
    ContractParams cp;
    REQUIRE(cf_logprices(mp, cp, 0.0, 0.0) == Complex(1.0, 0.0));
    for (double u : {0.1, 1.0, 3.0, 10.0, -4.0}) REQUIRE(std::abs(cf_logprices(mp, cp, u, 0.0)) <= 1.0 + 1e-12);
    // martingale check: E exp(Y1) = exp((r - q1) T)
    const Complex m = cf_logprices(mp, cp, Complex(0.0, -1.0), 0.0);
    REQUIRE(m.real() == Approx(std::exp(cp.r * cp.T)).epsilon(1e-12));
}

TEST_CASE("principal branches stay continuous along rays", "[charfn][property]") {
    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> ent(-60.0, 60.0), ang(-kPi, kPi);
    for (int r = 0; r < 100; ++r) {
        ModelParams mp;
        mp.theta = ang(gen);
        const ComplexMatrixArg th{ent(gen), ent(gen), ent(gen), ent(gen)};
        Complex prev = 1.0;
        for (int s = 1; s <= 1000; ++s) {
            const double f = s / 1000.0;
            const ComplexMatrixArg ts{th.t11 * f, th.t22 * f, th.t12 * f, th.t21 * f};
            const Complex v = cf_integrated_cov(mp, 1.0, ts).value;
            REQUIRE(std::abs(std::arg(v / prev)) < 0.5);
            prev = v;
        }
    }
}
