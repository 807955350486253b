#pragma once

// Conditional exchange-option price given the total variance v of the log
// price ratio, and its derivatives in the annualized variance w = v / T.

#include "oux/model.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oux {

inline constexpr int kMaxMargrabeOrder = 6;
inline constexpr double kMinExpansionVariance = 1e-10;

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 * 0.5); }
inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

struct MargrabeShorthand {
    double M1 = 0.0;  // discounted first leg
    double M2 = 0.0;  // discounted second leg
    double M3 = 0.0;  // log-moneyness, equal to log(M1 / M2)
};

inline MargrabeShorthand shorthand(const ContractParams& cp) {
    MargrabeShorthand s;
    const double lm = std::log(cp.c * cp.s0[0] / (cp.m * cp.s0[1]));
    if (cp.discounting == DiscountConvention::carry) {
        s.M1 = cp.c * std::exp(-(cp.r - cp.q[0]) * cp.T) * cp.s0[0];
        s.M2 = cp.m * std::exp(-(cp.r - cp.q[1]) * cp.T) * cp.s0[1];
        s.M3 = lm + (cp.q[0] - cp.q[1]) * cp.T;
    } else {
        s.M1 = cp.c * std::exp(-cp.q[0] * cp.T) * cp.s0[0];
        s.M2 = cp.m * std::exp(-cp.q[1] * cp.T) * cp.s0[1];
        s.M3 = lm + (cp.q[1] - cp.q[0]) * cp.T;
    }
    return s;
}

/// C_MT(v) = M1 N(d1) - M2 N(d2), d1 = (M3 + v/2)/sqrt(v), d2 = d1 - sqrt(v).
inline double margrabe_price(const ContractParams& cp, double v) {
    if (!(v >= 0.0)) throw std::domain_error("margrabe_price: variance must be nonnegative");
    const MargrabeShorthand s = shorthand(cp);
    if (v == 0.0) return std::max(s.M1 - s.M2, 0.0);
    if (std::isinf(v)) return s.M1;
    const double sv = std::sqrt(v);
    const double d1 = (s.M3 + 0.5 * v) / sv;
    return s.M1 * normal_cdf(d1) - s.M2 * normal_cdf(d1 - sv);
}

/// k-th derivative of w -> C_MT(w T). With the identity M1 f(d1) = M2 f(d2),
///   D C = M1 s(w) h(w),  s = sqrt(T) / (2 sqrt(w)),  h = f(d1(w)),
/// and log h = -M3^2 / (2 T w) - T w / 8 + const, so every derivative of h
/// follows from the same exponential recursion used for cumulants.
inline double d_margrabe(const ContractParams& cp, double w, int k) {
    if (k < 1 || k > kMaxMargrabeOrder)
        throw std::invalid_argument("d_margrabe: order must be in 1.." + std::to_string(kMaxMargrabeOrder));
    if (!(w > kMinExpansionVariance))
        throw std::domain_error("d_margrabe: variance too close to the singularity at zero");
    const MargrabeShorthand s = shorthand(cp);
    const double T = cp.T;
    const double A = s.M3 * s.M3 / (2.0 * T);

    std::array<double, kMaxMargrabeOrder> L{};  // L[n] = D^n log h, n >= 1
    for (int n = 1; n < k; ++n) {
        double fact = 1.0;
        for (int i = 2; i <= n; ++i) fact *= i;
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        L[n] = -A * sign * fact / std::pow(w, n + 1);
    }
    L[1] -= T / 8.0;

    std::array<double, kMaxMargrabeOrder> h{};
    const double d1 = (s.M3 + 0.5 * w * T) / std::sqrt(w * T);
    h[0] = normal_pdf(d1);
    for (int n = 1; n < k; ++n) {
        double acc = 0.0;
        double binom = 1.0;  // C(n-1, j)
        for (int j = 0; j < n; ++j) {
            acc += binom * L[j + 1] * h[n - 1 - j];
            binom = binom * (n - 1 - j) / (j + 1);
        }
        h[n] = acc;
    }

    std::array<double, kMaxMargrabeOrder> sd{};
    double coef = 0.5 * std::sqrt(T);
    for (int n = 0; n < k; ++n) {
        sd[n] = coef * std::pow(w, -0.5 - n);
        coef *= -0.5 - n;
    }

    double out = 0.0;
    double binom = 1.0;  // C(k-1, j)
    for (int j = 0; j < k; ++j) {
        out += binom * sd[k - 1 - j] * h[j];
        binom = binom * (k - 1 - j) / (j + 1);
    }
    return s.M1 * out;
}

/// dC_MT / dS0^(j), j in {1, 2}.
inline double delta(const ContractParams& cp, double v, int asset) {
    if (asset != 1 && asset != 2) throw std::invalid_argument("delta: asset must be 1 or 2");
    if (!(v >= 0.0)) throw std::domain_error("delta: variance must be nonnegative");
    const MargrabeShorthand s = shorthand(cp);
    double n1 = 0.0;
    double n2 = 0.0;
    if (v == 0.0) {
        n1 = n2 = s.M3 > 0.0 ? 1.0 : 0.0;
    } else {
        const double sv = std::sqrt(v);
        const double d1 = (s.M3 + 0.5 * v) / sv;
        n1 = normal_cdf(d1);
        n2 = normal_cdf(d1 - sv);
    }
    if (asset == 1) return s.M1 / cp.s0[0] * n1;
    return -s.M2 / cp.s0[1] * n2;
}

}  // namespace oux
