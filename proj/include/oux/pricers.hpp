#pragma once

// Unconditional exchange-option prices E[C_MT(v+_T)] by Taylor expansion,
// cubic spline against constrained moments, and FFT density quadrature.

#include "oux/margrabe.hpp"
#include "oux/model.hpp"
#include "oux/moments.hpp"
#include "oux/spline.hpp"

#include <chrono>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace oux {

enum class Method { taylor1, taylor2, spline, fft, mc };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::taylor1: return "taylor1";
        case Method::taylor2: return "taylor2";
        case Method::spline: return "spline";
        case Method::fft: return "fft";
        case Method::mc: return "mc";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    for (Method m : {Method::taylor1, Method::taylor2, Method::spline, Method::fft, Method::mc})
        if (to_string(m) == s) return m;
    throw ParameterError("methods", "unknown method '" + s + "'");
}

struct PriceReport {
    Method method = Method::fft;
    double price = 0.0;
    std::optional<std::pair<double, double>> ci;
    double runtime_seconds = 0.0;
    std::map<std::string, double> config_echo;
};

namespace detail {
using Clock = std::chrono::steady_clock;
inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}
}  // namespace detail

/// C^(n) = sum_{l<=n} D^l C_MT(v*) / l! * E(v+/T - v*)^l, derivatives in the
/// annualized variance.
inline PriceReport price_taylor(const ModelParams& mp, const ContractParams& cp, int order,
                                std::optional<double> vstar_override = std::nullopt) {
    if (order != 1 && order != 2) throw std::invalid_argument("price_taylor: order must be 1 or 2");
    const auto t0 = detail::Clock::now();
    mp.validate();
    cp.validate();
    const MomentSet ms = unconstrained_moments(mp, cp.T);
    const double mean = ms.vstar / cp.T;
    const double var = ms.vplus_var_terms / (cp.T * cp.T);
    const double v0 = vstar_override.value_or(mean);
    const double e1 = mean - v0;
    const double e2 = var + e1 * e1;

    PriceReport r;
    r.method = order == 1 ? Method::taylor1 : Method::taylor2;
    r.price = margrabe_price(cp, v0 * cp.T);
    if (e1 != 0.0 || order == 2) {
        const double c1 = d_margrabe(cp, v0, 1);
        r.price += c1 * e1;
        if (order == 2) r.price += 0.5 * d_margrabe(cp, v0, 2) * e2;
    }
    r.runtime_seconds = detail::seconds_since(t0);
    r.config_echo = {{"order", order}, {"vstar", v0}, {"T", cp.T}};
    return r;
}

/// sum_j sum_l alpha_{l,j} m~(l, v_j, v_{j+1}).
inline double contract_spline(const SplineCoefficients& s, const ConstrainedMoments& cm) {
    if (cm.centered_per_knot.size() != s.alpha.size())
        throw std::invalid_argument("spline and moment tables have different knot grids");
    double price = 0.0;
    for (std::size_t j = 0; j < s.alpha.size(); ++j)
        for (int l = 0; l < 4; ++l) price += s.alpha[j][l] * cm.centered_per_knot[j][l];
    return price;
}

/// `intervals` equal subintervals of [a, b), i.e. intervals + 1 knots.
inline PriceReport price_spline(const ModelParams& mp, const ContractParams& cp, std::pair<double, double> window,
                                int intervals, SplineBoundary boundary = SplineBoundary::clamped) {
    if (intervals < 3) throw std::invalid_argument("price_spline: need at least 4 knots");
    const auto t0 = detail::Clock::now();
    mp.validate();
    cp.validate();
    const std::vector<double> knots = uniform_knots(window.first, window.second, intervals);
    const SplineCoefficients s = build_spline(cp, knots, boundary);
    const ConstrainedMoments cm = constrained_moments_table(mp, cp.T, knots);
    PriceReport r;
    r.method = Method::spline;
    r.price = contract_spline(s, cm);
    r.runtime_seconds = detail::seconds_since(t0);
    r.config_echo = {{"a", window.first},
                     {"b", window.second},
                     {"knots", intervals},
                     {"mass", cm.raw[0]}};
    return r;
}

/// sum_j C_MT(x_j) f(x_j) eta over a density grid.
inline double price_on_grid(const ContractParams& cp, const DensityGrid& g) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.x.size(); ++j)
        if (g.pdf[j] > 0.0) s += margrabe_price(cp, g.x[j]) * g.pdf[j];
    return s * g.eta;
}

inline PriceReport price_fft(const ModelParams& mp, const ContractParams& cp, std::pair<double, double> window,
                             int n) {
    const auto t0 = detail::Clock::now();
    mp.validate();
    cp.validate();
    if (window.first < 0.0) throw std::invalid_argument("price_fft: variance window must be nonnegative");
    const DensityGrid g = pdf_fft(mp, cp.T, window.first, window.second, n);
    PriceReport r;
    r.method = Method::fft;
    r.price = price_on_grid(cp, g);
    r.runtime_seconds = detail::seconds_since(t0);
    r.config_echo = {{"a", window.first}, {"b", window.second}, {"n", n}, {"mass", g.mass()}};
    return r;
}

}  // namespace oux
