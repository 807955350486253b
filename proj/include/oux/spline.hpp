#pragma once

// Cubic splines stored per interval in the shifted basis
//   S(v) = sum_l alpha[j][l] (v - v_j)^l,  v in [v_j, v_{j+1}),
// which pairs directly with moments centered at the left knot.

#include "oux/margrabe.hpp"
#include "oux/model.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace oux {

enum class SplineBoundary { clamped, natural };

/// End condition: a prescribed first derivative, or zero second derivative.
struct EndCondition {
    std::optional<double> slope;
    static EndCondition natural() { return {}; }
    static EndCondition clamped(double s) { return {s}; }
};

struct SplineCoefficients {
    std::vector<double> knots;
    std::vector<std::array<double, 4>> alpha;

    std::size_t interval_of(double v) const {
        auto it = std::upper_bound(knots.begin(), knots.end(), v);
        std::size_t j = it == knots.begin() ? 0 : static_cast<std::size_t>(it - knots.begin()) - 1;
        return std::min(j, alpha.size() - 1);
    }

    double operator()(double v) const { return derivative(v, 0); }

    /// order-th derivative, order in 0..3, from the interval containing v
    /// (extrapolating the end pieces).
    double derivative(double v, int order) const {
        const std::size_t j = interval_of(v);
        const auto& a = alpha[j];
        const double d = v - knots[j];
        switch (order) {
            case 0: return a[0] + d * (a[1] + d * (a[2] + d * a[3]));
            case 1: return a[1] + d * (2.0 * a[2] + 3.0 * d * a[3]);
            case 2: return 2.0 * a[2] + 6.0 * d * a[3];
            case 3: return 6.0 * a[3];
            default: throw std::invalid_argument("spline derivative order must be in 0..3");
        }
    }
};

/// Interpolating cubic spline through (knots, values). Second derivatives at
/// the knots solve a tridiagonal system (Thomas algorithm).
inline SplineCoefficients build_cubic_spline(const std::vector<double>& knots, const std::vector<double>& y,
                                             EndCondition left, EndCondition right) {
    const std::size_t n = knots.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("spline: need matching knots and values");
    for (std::size_t j = 1; j < n; ++j)
        if (!(knots[j] > knots[j - 1])) throw std::invalid_argument("spline: knots must be strictly increasing");

    std::vector<double> h(n - 1), slope(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        h[j] = knots[j + 1] - knots[j];
        slope[j] = (y[j + 1] - y[j]) / h[j];
    }
    // rows: sub[j] M_{j-1} + diag[j] M_j + sup[j] M_{j+1} = rhs[j]
    std::vector<double> sub(n, 0.0), diag(n, 1.0), sup(n, 0.0), rhs(n, 0.0);
    for (std::size_t j = 1; j + 1 < n; ++j) {
        sub[j] = h[j - 1];
        diag[j] = 2.0 * (h[j - 1] + h[j]);
        sup[j] = h[j];
        rhs[j] = 6.0 * (slope[j] - slope[j - 1]);
    }
    if (left.slope) {
        diag[0] = 2.0 * h[0];
        sup[0] = h[0];
        rhs[0] = 6.0 * (slope[0] - *left.slope);
    }
    if (right.slope) {
        sub[n - 1] = h[n - 2];
        diag[n - 1] = 2.0 * h[n - 2];
        rhs[n - 1] = 6.0 * (*right.slope - slope[n - 2]);
    }
    for (std::size_t j = 1; j < n; ++j) {
        const double f = sub[j] / diag[j - 1];
        diag[j] -= f * sup[j - 1];
        rhs[j] -= f * rhs[j - 1];
    }
    std::vector<double> M(n);
    M[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t j = n - 1; j-- > 0;) M[j] = (rhs[j] - sup[j] * M[j + 1]) / diag[j];

    SplineCoefficients s;
    s.knots = knots;
    s.alpha.resize(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        s.alpha[j] = {y[j], slope[j] - h[j] * (2.0 * M[j] + M[j + 1]) / 6.0, 0.5 * M[j],
                      (M[j + 1] - M[j]) / (6.0 * h[j])};
    }
    return s;
}

/// Spline of v -> C_MT(v) in total variance. Clamped ends take the analytic
/// slope; a knot at v = 0 falls back to the natural condition on that side.
inline SplineCoefficients build_spline(const ContractParams& cp, const std::vector<double>& knots,
                                       SplineBoundary boundary = SplineBoundary::clamped) {
    if (knots.size() < 4) throw std::invalid_argument("spline: need at least 4 knots");
    if (knots.front() < 0.0) throw std::invalid_argument("spline: knots must be nonnegative");
    std::vector<double> y(knots.size());
    for (std::size_t j = 0; j < knots.size(); ++j) y[j] = margrabe_price(cp, knots[j]);
    EndCondition left = EndCondition::natural();
    EndCondition right = EndCondition::natural();
    if (boundary == SplineBoundary::clamped) {
        if (knots.front() != 0.0) left = EndCondition::clamped(d_margrabe(cp, knots.front() / cp.T, 1) / cp.T);
        right = EndCondition::clamped(d_margrabe(cp, knots.back() / cp.T, 1) / cp.T);
    }
    return build_cubic_spline(knots, y, left, right);
}

}  // namespace oux
