#pragma once

// Gauss-Kronrod (7/15) quadrature for complex scalar and small complex-vector
// integrands: an adaptive driver for smooth finite-interval integrals and a
// fixed composite rule for integrals that are evaluated once and reused.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oux::quad {

using Complex = std::complex<double>;

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for Kronrod nodes 1, 3, 5 and the centre.
inline constexpr std::array<double, 4> kGaussWeights{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double magnitude(const Complex& z) { return std::abs(z); }
inline double magnitude(double x) { return std::abs(x); }
template <std::size_t N>
double magnitude(const std::array<Complex, N>& v) {
    double m = 0.0;
    for (const auto& z : v) m = std::max(m, std::abs(z));
    return m;
}

template <class V>
void accumulate(V& acc, double w, const V& x) {
    acc += w * x;
}
template <std::size_t N>
void accumulate(std::array<Complex, N>& acc, double w, const std::array<Complex, N>& x) {
    for (std::size_t i = 0; i < N; ++i) acc[i] += w * x[i];
}

template <class V>
V scaled(const V& x, double s) {
    return x * s;
}
template <std::size_t N>
std::array<Complex, N> scaled(std::array<Complex, N> x, double s) {
    for (auto& z : x) z *= s;
    return x;
}

template <class V>
V difference(const V& x, const V& y) {
    return x - y;
}
template <std::size_t N>
std::array<Complex, N> difference(std::array<Complex, N> x, const std::array<Complex, N>& y) {
    for (std::size_t i = 0; i < N; ++i) x[i] -= y[i];
    return x;
}

}  // namespace detail

template <class V>
struct Estimate {
    V value{};
    double error = 0.0;
};

/// One 15-point Kronrod panel with the embedded 7-point Gauss error estimate.
template <class V, class F>
Estimate<V> kronrod_panel(F&& f, double a, double b) {
    using namespace detail;
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    V kronrod{};
    V gauss{};
    const V fc = f(centre);
    accumulate(kronrod, kKronrodWeights[7], fc);
    accumulate(gauss, kGaussWeights[3], fc);
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kKronrodNodes[i];
        const V lo = f(centre - dx);
        const V hi = f(centre + dx);
        accumulate(kronrod, kKronrodWeights[i], lo);
        accumulate(kronrod, kKronrodWeights[i], hi);
        if (i % 2 == 1) {
            accumulate(gauss, kGaussWeights[i / 2], lo);
            accumulate(gauss, kGaussWeights[i / 2], hi);
        }
    }
    Estimate<V> out;
    out.value = scaled(kronrod, half);
    out.error = magnitude(difference(out.value, scaled(gauss, half)));
    return out;
}

/// Adaptive bisection on [a, b] until each panel meets its share of
/// max(abs_tol, rel_tol * |I|). Throws QuadratureError past `max_depth`.
template <class V, class F>
Estimate<V> integrate_adaptive(F&& f, double a, double b, double abs_tol, double rel_tol = 0.0,
                               int max_depth = 40) {
    struct Recurse {
        F& f;
        double rel_tol;
        int max_depth;

        Estimate<V> run(double lo, double hi, const Estimate<V>& whole, double tol, int depth) {
            if (whole.error <= std::max(tol, rel_tol * detail::magnitude(whole.value))) return whole;
            if (depth >= max_depth)
                throw QuadratureError("adaptive Gauss-Kronrod did not converge");
            const double mid = 0.5 * (lo + hi);
            const Estimate<V> left = kronrod_panel<V>(f, lo, mid);
            const Estimate<V> right = kronrod_panel<V>(f, mid, hi);
            const Estimate<V> l = run(lo, mid, left, 0.5 * tol, depth + 1);
            const Estimate<V> r = run(mid, hi, right, 0.5 * tol, depth + 1);
            Estimate<V> out = l;
            detail::accumulate(out.value, 1.0, r.value);
            out.error = l.error + r.error;
            return out;
        }
    };
    Recurse rec{f, rel_tol, max_depth};
    return rec.run(a, b, kronrod_panel<V>(f, a, b), abs_tol, 0);
}

/// Nodes and weights of a composite 15-point Kronrod rule over consecutive
/// panels [edges[i], edges[i+1]].
struct CompositeRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    static CompositeRule over(const std::vector<double>& edges) {
        using namespace detail;
        CompositeRule rule;
        if (edges.size() < 2) return rule;
        rule.nodes.reserve(15 * (edges.size() - 1));
        rule.weights.reserve(15 * (edges.size() - 1));
        for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
            const double centre = 0.5 * (edges[p] + edges[p + 1]);
            const double half = 0.5 * (edges[p + 1] - edges[p]);
            for (int i = 0; i < 7; ++i) {
                rule.nodes.push_back(centre - half * kKronrodNodes[i]);
                rule.weights.push_back(half * kKronrodWeights[i]);
                rule.nodes.push_back(centre + half * kKronrodNodes[i]);
                rule.weights.push_back(half * kKronrodWeights[i]);
            }
            rule.nodes.push_back(centre);
            rule.weights.push_back(half * kKronrodWeights[7]);
        }
        return rule;
    }
};

}  // namespace oux::quad
