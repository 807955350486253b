#pragma once

// Characteristic exponents of the Inverse Gaussian subordinators and the
// characteristic function of the integrated covariance Sigma+_t.
//
// For one factor with IG parameters (a, b), rate lambda and horizon t,
//
//     I(lambda t, x) = int_0^{lambda t} Psi(x / lambda * (1 - exp(-lambda t + s))) ds
//
// is the log characteristic function of its integrated OU level (zero start).
// It is evaluated in closed form with principal-branch square roots and
// logarithm; its x-derivatives use the substitution v = 1 - exp(-lambda t + s),
// which turns the integral into a smooth one over [0, 1 - exp(-lambda t)].

#include "oux/model.hpp"
#include "oux/quadrature.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace oux {

inline constexpr int kMaxDerivativeOrder = 8;

/// Removable singularity of I at x = 0.
inline constexpr double kZeroArgument = 1e-12;

inline constexpr double kDerivativeAbsTol = 1e-10;

struct IGParams {
    double a = 1.0;
    double b = 5.0;
    double lambda = 1.0;
    double t = 1.0;

    void validate() const {
        if (!(a > 0.0) || !(b > 0.0) || !(lambda > 0.0) || !(t > 0.0))
            throw std::invalid_argument("IGParams: a, b, lambda and t must be positive");
    }
    /// 1 - exp(-lambda t), the upper limit of the substituted integral.
    double decay() const { return -std::expm1(-lambda * t); }
};

/// Psi(z) = -a (sqrt(-2 i z + b^2) - b), principal square root, evaluated as
/// 2 i a z / (sqrt(-2 i z + b^2) + b) to keep small |z| accurate.
inline Complex ig_exponent(double a, double b, Complex z) {
    return 2.0 * kI * a * z / (std::sqrt(-2.0 * kI * z + b * b) + b);
}

namespace detail {

/// J_n = int_0^V v^n / (1 - v) dv with V = 1 - exp(-lambda t); equals
/// lambda t + sum_{k=1}^n C(n,k) (-1)^k (1 - exp(-k lambda t)) / k.
inline double power_log_integral(int n, double V, double lambda_t) {
    if (V < 0.5) {
        // sum_{m > n} V^m / m, geometric convergence
        double term = std::pow(V, n + 1);
        double sum = 0.0;
        for (int m = n + 1; m < 2000; ++m) {
            const double add = term / m;
            sum += add;
            if (add < 1e-18 * sum) break;
            term *= V;
        }
        return sum;
    }
    double J = lambda_t;
    double Vk = 1.0;
    for (int k = 1; k <= n; ++k) {
        Vk *= V;
        J -= Vk / k;
    }
    return J;
}

/// prod_{k=0}^{n-1} (1/2 - k)
inline double half_falling(int n) {
    double p = 1.0;
    for (int k = 0; k < n; ++k) p *= 0.5 - k;
    return p;
}

/// log(1 + w) without losing w when |w| is small.
inline Complex log1p(Complex w) {
    const Complex u = 1.0 + w;
    if (u == Complex(1.0, 0.0)) return w;
    return std::log(u) * (w / (u - 1.0));
}

inline void check_order(int n, int max_order) {
    if (n < 1) throw std::invalid_argument("derivative order must be at least 1");
    if (n > max_order)
        throw std::invalid_argument("derivative order " + std::to_string(n) +
                                    " exceeds configured maximum " + std::to_string(max_order));
}

}  // namespace detail

/// d^n I / dx^n at x = 0:
/// (-1)^n prod_{k=2}^n (2k-3) a / ((i lambda)^n b^{2n-1}) * J_n.
inline Complex d_integral_I_at_zero(const IGParams& p, int n, int max_order = kMaxDerivativeOrder) {
    detail::check_order(n, max_order);
    double odd = 1.0;
    for (int k = 2; k <= n; ++k) odd *= 2.0 * k - 3.0;
    const double J = detail::power_log_integral(n, p.decay(), p.lambda * p.t);
    const Complex i_lambda_n = std::pow(kI * p.lambda, n);
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    return sign * odd * p.a / (i_lambda_n * std::pow(p.b, 2 * n - 1)) * J;
}

/// I(lambda t, x) for complex x. With B = sqrt(i lambda) b,
///   T1 = sqrt(-2x - i lambda b^2),  T2 = sqrt(2x V + i lambda b^2),
/// the textbook closed form is
///   -2a / sqrt(i lambda) [B - T2 + i/2 T1 G] + lambda a b t,
///   G = log(e^{-lambda t} (T1 + iB)^2 / (T1 + i T2)^2).
/// Each difference that vanishes with x (B - T2, T1 + iB, T1 + iT2, and
/// b - i T1 / sqrt(i lambda)) is rewritten as (p^2 - q^2) / (p + q), and
/// G = lambda t + log(R^2) with R = (T1 - iT2) / (T1 - iB) near 1, so the
/// result keeps its relative accuracy for small |x| and large lambda t.
inline Complex integral_I(const IGParams& p, Complex x) {
    if (std::abs(x) < kZeroArgument) return {0.0, 0.0};
    const double lb2 = p.lambda * p.b * p.b;
    const double V = p.decay();
    const Complex sil = std::sqrt(kI * p.lambda);
    const Complex B = sil * p.b;
    const Complex T1 = std::sqrt(-2.0 * x - kI * lb2);
    const Complex T2 = std::sqrt(2.0 * x * V + kI * lb2);
    const Complex B_minus_T2 = -2.0 * x * V / (T2 + B);
    const Complex R_minus_1 = kI * B_minus_T2 / (T1 - kI * B);
    const Complex L = detail::log1p(R_minus_1 * (R_minus_1 + 2.0));
    const Complex drift = -2.0 * p.lambda * p.a * p.t * x / (sil * (B + kI * T1));
    return -2.0 * p.a / sil * (B_minus_T2 + 0.5 * kI * T1 * L) + drift;
}

using DerivativeSet = std::array<Complex, kMaxDerivativeOrder>;

/// All derivatives d^n I / dx^n, n = 1..nmax, stored at index n-1. Away from
/// zero they come from one adaptive quadrature of
///   int_0^V (v/lambda)^n Psi^{(n)}(x v / lambda) / (1 - v) dv,
///   Psi^{(n)}(z) = -a prod_{k<n}(1/2 - k) (-2i)^n (b^2 - 2 i z)^{1/2 - n}.
inline DerivativeSet integral_I_derivatives(const IGParams& p, Complex x, int nmax,
                                            int max_order = kMaxDerivativeOrder) {
    detail::check_order(nmax, std::min(max_order, kMaxDerivativeOrder));
    DerivativeSet out{};
    if (std::abs(x) < kZeroArgument) {
        for (int n = 1; n <= nmax; ++n) out[n - 1] = d_integral_I_at_zero(p, n, max_order);
        return out;
    }
    std::array<Complex, kMaxDerivativeOrder> prefactor{};
    Complex minus_2i_n{1.0, 0.0};
    for (int n = 1; n <= nmax; ++n) {
        minus_2i_n *= -2.0 * kI;
        prefactor[n - 1] = -p.a * detail::half_falling(n) * minus_2i_n / std::pow(p.lambda, n);
    }
    const Complex slope = -2.0 * kI * x / p.lambda;
    const double b2 = p.b * p.b;
    auto integrand = [&](double v) {
        DerivativeSet f{};
        const Complex w = b2 + slope * v;
        const Complex ratio = v / w;
        Complex term = std::sqrt(w) / (1.0 - v);
        for (int n = 1; n <= nmax; ++n) {
            term *= ratio;
            f[n - 1] = prefactor[n - 1] * term;
        }
        return f;
    };
    return quad::integrate_adaptive<DerivativeSet>(integrand, 0.0, p.decay(), kDerivativeAbsTol).value;
}

/// d^n I / dx^n at x.
inline Complex d_integral_I(const IGParams& p, int n, Complex x, int max_order = kMaxDerivativeOrder) {
    detail::check_order(n, max_order);
    if (std::abs(x) < kZeroArgument) return d_integral_I_at_zero(p, n, max_order);
    return integral_I_derivatives(p, x, n, max_order)[n - 1];
}

struct CFEvaluation {
    Complex value;
    Complex k1;  // idiosyncratic factors
    Complex k2;  // common factors
};

inline IGParams factor_F(const ModelParams& mp, int l, double t) {
    return {mp.aF[l], mp.bF[l], mp.lambdaF[l], t};
}
inline IGParams factor_V(const ModelParams& mp, int l, double t) {
    return {mp.aV[l], mp.bV[l], mp.lambdaV[l], t};
}

/// lambda^{-1} (1 - exp(-lambda t)): weight of an initial level in the integral.
inline double initial_level_weight(double lambda, double t) { return -std::expm1(-lambda * t) / lambda; }

/// phi_{Sigma+_t}(theta) = exp(K1 + K2).
inline CFEvaluation cf_integrated_cov(const ModelParams& mp, double t, const ComplexMatrixArg& theta) {
    if (!(t > 0.0)) throw std::invalid_argument("cf_integrated_cov: horizon must be positive");
    const Mat2 A = mp.loading();
    const std::array<Complex, 2> diag{theta.t11, theta.t22};
    CFEvaluation out{};
    for (int l = 0; l < 2; ++l) {
        out.k1 += kI * diag[l] * initial_level_weight(mp.lambdaF[l], t) * mp.F0[l];
        out.k1 += integral_I(factor_F(mp, l, t), diag[l]);
        const Complex tr = trace_loading(theta, A, l);
        out.k2 += kI * tr * initial_level_weight(mp.lambdaV[l], t) * mp.V0[l];
        out.k2 += integral_I(factor_V(mp, l, t), tr);
    }
    out.value = std::exp(out.k1 + out.k2);
    return out;
}

/// Characteristic function of v+_T = tr(M Sigma+_T): phi_{Sigma+}(u M).
inline Complex cf_vplus(const ModelParams& mp, double T, Complex u) {
    return cf_integrated_cov(mp, T, ComplexMatrixArg::scaled_m(u)).value;
}

/// Joint characteristic function of the log-returns Y_T:
/// exp(i u.(r - q) T) phi_{Sigma+}(-theta(u)/2).
inline Complex cf_logprices(const ModelParams& mp, const ContractParams& cp, Complex u1, Complex u2) {
    const Complex drift = kI * (u1 * (cp.r - cp.q[0]) + u2 * (cp.r - cp.q[1])) * cp.T;
    return std::exp(drift) * cf_integrated_cov(mp, cp.T, ComplexMatrixArg::logprice(u1, u2)).value;
}

/// K(x) = log phi_{v+}(x) and K^{(n)}(x) for n = 1..nmax (nmax may be 0), at index n.
/// Common factor l enters through I_V(theta_l x), so its n-th derivative
/// carries theta_l^n.
inline std::array<Complex, kMaxDerivativeOrder + 1> vplus_log_cf_derivatives(const ModelParams& mp, double T,
                                                                             double x, int nmax) {
    std::array<Complex, kMaxDerivativeOrder + 1> K{};
    const Pair w = mp.weights();
    // identical idiosyncratic factors share one evaluation
    const bool twin = mp.aF[0] == mp.aF[1] && mp.bF[0] == mp.bF[1] && mp.lambdaF[0] == mp.lambdaF[1];
    Complex i_prev{};
    DerivativeSet d_prev{};
    for (int l = 0; l < 2; ++l) {
        const IGParams pf = factor_F(mp, l, T);
        const double lf = initial_level_weight(mp.lambdaF[l], T) * mp.F0[l];
        if (l == 0 || !twin) i_prev = integral_I(pf, x);
        K[0] += kI * x * lf + i_prev;
        if (nmax > 0) {
            K[1] += kI * lf;
            if (l == 0 || !twin) d_prev = integral_I_derivatives(pf, x, nmax);
            for (int n = 1; n <= nmax; ++n) K[n] += d_prev[n - 1];
        }

        if (w[l] == 0.0) continue;
        const IGParams pv = factor_V(mp, l, T);
        const double lv = initial_level_weight(mp.lambdaV[l], T) * mp.V0[l];
        K[0] += kI * w[l] * x * lv + integral_I(pv, w[l] * x);
        if (nmax == 0) continue;
        K[1] += kI * w[l] * lv;
        const DerivativeSet dV = integral_I_derivatives(pv, w[l] * x, nmax);
        double wn = 1.0;
        for (int n = 1; n <= nmax; ++n) {
            wn *= w[l];
            K[n] += wn * dV[n - 1];
        }
    }
    return K;
}

}  // namespace oux
