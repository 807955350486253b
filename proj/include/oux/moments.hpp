#pragma once

// Moments of the integrated covariance and of v+ = tr(M Sigma+):
//  - unconstrained first and second moments from the cumulants of each factor,
//  - constrained moments E[v^k 1{a <= v < b}] through Parseval's identity
//    against the Fourier transform of the window indicator,
//  - the density of v+ on a window by trapezoid/FFT inversion of its CF.

#include "oux/charfn.hpp"
#include "oux/model.hpp"
#include "oux/quadrature.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace oux {

class NotSupportedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct MomentSet {
    double m11 = 0.0, m22 = 0.0, m12 = 0.0;
    double m11sq = 0.0, m22sq = 0.0, m12sq = 0.0;
    double m1122 = 0.0, m1112 = 0.0, m2212 = 0.0;
    double vstar = 0.0;            // E v+
    double vplus_var_terms = 0.0;  // E (v+ - vstar)^2
};

/// Mean and variance of one integrated factor, initial level included.
struct FactorMoments {
    double mean = 0.0;
    double var = 0.0;
};

inline FactorMoments factor_moments(const IGParams& p, double level) {
    // K'(0) = i E, K''(0) = -Var
    const Complex d1 = d_integral_I_at_zero(p, 1);
    const Complex d2 = d_integral_I_at_zero(p, 2);
    return {d1.imag() + initial_level_weight(p.lambda, p.t) * level, -d2.real()};
}

inline MomentSet unconstrained_moments(const ModelParams& mp, double T) {
    if (!(T > 0.0)) throw ParameterError("contract.T", "maturity must be positive");
    const Mat2 A = mp.loading();
    // factor order F1, F2, V1, V2
    std::array<FactorMoments, 4> f{factor_moments(factor_F(mp, 0, T), mp.F0[0]),
                                   factor_moments(factor_F(mp, 1, T), mp.F0[1]),
                                   factor_moments(factor_V(mp, 0, T), mp.V0[0]),
                                   factor_moments(factor_V(mp, 1, T), mp.V0[1])};
    using Row = std::array<double, 4>;
    const Row c11{1.0, 0.0, A.a11 * A.a11, A.a12 * A.a12};
    const Row c22{0.0, 1.0, A.a21 * A.a21, A.a22 * A.a22};
    const Row c12{0.0, 0.0, A.a11 * A.a21, A.a12 * A.a22};

    auto mean = [&](const Row& c) {
        double s = 0.0;
        for (int i = 0; i < 4; ++i) s += c[i] * f[i].mean;
        return s;
    };
    auto second = [&](const Row& x, const Row& y) {
        double s = mean(x) * mean(y);
        for (int i = 0; i < 4; ++i) s += x[i] * y[i] * f[i].var;
        return s;
    };

    MomentSet out;
    out.m11 = mean(c11);
    out.m22 = mean(c22);
    out.m12 = mean(c12);
    out.m11sq = second(c11, c11);
    out.m22sq = second(c22, c22);
    out.m12sq = second(c12, c12);
    out.m1122 = second(c11, c22);
    out.m1112 = second(c11, c12);
    out.m2212 = second(c22, c12);
    out.vstar = out.m11 + out.m22 - 2.0 * out.m12;
    const double ev2 = out.m11sq + out.m22sq + 4.0 * out.m12sq + 2.0 * out.m1122 - 4.0 * out.m1112 -
                       4.0 * out.m2212;
    out.vplus_var_terms = std::max(ev2 - out.vstar * out.vstar, 0.0);
    return out;
}

/// int_a^b exp(i y v) dv, stable near y = 0.
inline Complex indicator_transform(double a, double b, double y) {
    const double half = 0.5 * (b - a) * y;
    const double sinc = std::abs(half) < 1e-8 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
    return std::polar((b - a) * sinc, 0.5 * (a + b) * y);
}

inline constexpr int kMaxConstrainedOrder = 6;
inline constexpr double kTailTolerance = 1e-10;
inline constexpr double kMaxFrequency = 1e5;

/// Caches h_k(y) = E[v^k exp(-i y v)] for k = 0..kmax on a composite Kronrod
/// grid over [-Y, Y], then evaluates windowed integrals
///   m(k, a, b) = (1 / 2 pi) int 1^_{[a,b)}(y) h_k(y) dy
/// for any window with |a|, |b| <= reach. Y is where every |h_k| has fallen
/// below kTailTolerance.
class ConstrainedTransform {
public:
    ConstrainedTransform(const ModelParams& mp, double T, int kmax, double reach)
        : kmax_(kmax), reach_(reach) {
        if (kmax < 0 || kmax > kMaxConstrainedOrder)
            throw std::invalid_argument("constrained moments: order must be in 0.." +
                                        std::to_string(kMaxConstrainedOrder));
        if (!mp.zero_initial_levels())
            throw NotSupportedError("constrained moments require zero initial factor levels");
        if (!(T > 0.0)) throw ParameterError("contract.T", "maturity must be positive");
        const double width = std::min(1.0, 5.0 / (reach + 1.0));
        std::vector<double> edges{0.0};
        int quiet = 0;
        while (quiet < 2) {
            const double lo = edges.back();
            const double hi = lo + width;
            if (hi > kMaxFrequency)
                throw quad::QuadratureError("constrained transform: characteristic function tail above tolerance "
                                            "at the frequency cap");
            edges.push_back(hi);
            const quad::CompositeRule panel = quad::CompositeRule::over({lo, hi});
            double peak = 0.0;
            for (std::size_t i = 0; i < panel.nodes.size(); ++i) {
                const double y = panel.nodes[i];
                const auto hp = evaluate(mp, T, y);
                const auto hm = evaluate(mp, T, -y);
                nodes_.push_back(y);
                weights_.push_back(panel.weights[i]);
                for (int k = 0; k <= kmax_; ++k) {
                    peak = std::max({peak, std::abs(hp[k]), std::abs(hm[k])});
                    plus_.push_back(hp[k]);
                    minus_.push_back(hm[k]);
                }
            }
            quiet = peak < kTailTolerance ? quiet + 1 : 0;
        }
        cutoff_ = edges.back();
    }

    int kmax() const { return kmax_; }
    double cutoff() const { return cutoff_; }
    std::size_t size() const { return nodes_.size(); }

    /// m(k, a, b) for k = 0..kmax. The imaginary residue of the two half-line
    /// sums is checked and discarded.
    std::vector<double> raw(double a, double b) const {
        check_window(a, b);
        std::vector<double> out(kmax_ + 1, 0.0);
        if (a == b) return out;
        std::vector<Complex> acc(kmax_ + 1);
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const Complex fp = weights_[i] * indicator_transform(a, b, nodes_[i]);
            const Complex fm = weights_[i] * indicator_transform(a, b, -nodes_[i]);
            const std::size_t base = i * (kmax_ + 1);
            for (int k = 0; k <= kmax_; ++k) acc[k] += fp * plus_[base + k] + fm * minus_[base + k];
        }
        for (int k = 0; k <= kmax_; ++k) {
            const Complex m = acc[k] / (2.0 * kPi);
            if (std::abs(m.imag()) > 1e-6 * std::abs(m.real()) + 1e-10)
                throw quad::QuadratureError("constrained moment " + std::to_string(k) +
                                            " has a non-negligible imaginary part");
            out[k] = m.real();
        }
        return out;
    }

    /// E[exp(i u v) 1{a <= v < b}] = (1 / 2 pi) int 1^_{[a,b)}(x + u) h_0(x) dx.
    Complex cf(double u, double a, double b) const {
        check_window(a, b);
        if (a == b) return {};
        Complex acc{};
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const std::size_t base = i * (kmax_ + 1);
            acc += weights_[i] * (indicator_transform(a, b, nodes_[i] + u) * plus_[base] +
                                  indicator_transform(a, b, -nodes_[i] + u) * minus_[base]);
        }
        return acc / (2.0 * kPi);
    }

private:
    int kmax_;
    double reach_;
    double cutoff_ = 0.0;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<Complex> plus_;   // h_k(+y), row-major by node
    std::vector<Complex> minus_;  // h_k(-y)

    void check_window(double a, double b) const {
        if (!(a <= b)) throw std::invalid_argument("constrained moments: window needs a <= b");
        if (std::max(std::abs(a), std::abs(b)) > reach_ * (1.0 + 1e-12))
            throw std::invalid_argument("constrained moments: window outside the transform's reach");
    }

    /// h_k(y) = i^{-k} g^{(k)}(-y), g = exp(K), using
    /// g^{(n)} = sum_j C(n-1, j) K^{(j+1)} g^{(n-1-j)}.
    std::array<Complex, kMaxConstrainedOrder + 1> evaluate(const ModelParams& mp, double T, double y) const {
        const auto K = vplus_log_cf_derivatives(mp, T, -y, kmax_);
        std::array<Complex, kMaxConstrainedOrder + 1> g{};
        g[0] = std::exp(K[0]);
        for (int n = 1; n <= kmax_; ++n) {
            Complex acc{};
            double binom = 1.0;
            for (int j = 0; j < n; ++j) {
                acc += binom * K[j + 1] * g[n - 1 - j];
                binom = binom * (n - 1 - j) / (j + 1);
            }
            g[n] = acc;
        }
        Complex ik{1.0, 0.0};
        for (int k = 0; k <= kmax_; ++k) {
            g[k] *= ik;
            ik *= -kI;
        }
        return g;
    }
};

inline Complex constrained_cf(const ModelParams& mp, double T, double u, double a, double b) {
    if (a == b) return {};
    const ConstrainedTransform tr(mp, T, 0, std::max(std::abs(a), std::abs(b)));
    return tr.cf(u, a, b);
}

inline std::vector<double> constrained_raw_moments(const ModelParams& mp, double T, double a, double b,
                                                   int kmax) {
    if (a == b) return std::vector<double>(kmax + 1, 0.0);
    const ConstrainedTransform tr(mp, T, kmax, std::max(std::abs(a), std::abs(b)));
    return tr.raw(a, b);
}

/// E[(v - c)^k 1_W] = sum_i C(k, i) (-c)^{k-i} E[v^i 1_W].
inline std::vector<double> center_moments(const std::vector<double>& raw, double c) {
    std::vector<double> out(raw.size(), 0.0);
    for (std::size_t k = 0; k < raw.size(); ++k) {
        double binom = 1.0;
        for (std::size_t i = 0; i <= k; ++i) {
            out[k] += binom * std::pow(-c, static_cast<double>(k - i)) * raw[i];
            binom = binom * (k - i) / (i + 1);
        }
    }
    return out;
}

inline std::vector<double> uncenter_moments(const std::vector<double>& centered, double c) {
    return center_moments(centered, -c);
}

using CenteredRow = std::array<double, 4>;

struct ConstrainedMoments {
    std::array<double, 2> interval{0.0, 0.0};
    std::vector<double> raw;                      // m(k, a, b), k = 0..3
    std::vector<double> knots;                    // v_0 < ... < v_N
    std::vector<CenteredRow> centered_per_knot;   // m~(l, v_j, v_{j+1}), l = 0..3
};

inline void check_knots(const std::vector<double>& knots) {
    if (knots.size() < 2) throw std::invalid_argument("knot grid needs at least two points");
    for (std::size_t j = 1; j < knots.size(); ++j)
        if (!(knots[j] > knots[j - 1])) throw std::invalid_argument("knots must be strictly increasing");
}

inline std::vector<double> uniform_knots(double a, double b, int intervals) {
    if (intervals < 1) throw std::invalid_argument("knot count must be positive");
    std::vector<double> k(intervals + 1);
    for (int j = 0; j <= intervals; ++j) k[j] = a + (b - a) * j / intervals;
    k.back() = b;
    return k;
}

template <class RawFn>
ConstrainedMoments centered_table(const std::vector<double>& knots, RawFn&& raw) {
    check_knots(knots);
    ConstrainedMoments out;
    out.interval = {knots.front(), knots.back()};
    out.knots = knots;
    out.raw.assign(4, 0.0);
    for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
        const std::vector<double> r = raw(knots[j], knots[j + 1]);
        for (int k = 0; k < 4; ++k) out.raw[k] += r[k];
        const std::vector<double> c = center_moments(r, knots[j]);
        out.centered_per_knot.push_back({c[0], c[1], c[2], c[3]});
    }
    return out;
}

/// Centered constrained moments on every knot window via the convolution route.
inline ConstrainedMoments constrained_moments_table(const ModelParams& mp, double T,
                                                    const std::vector<double>& knots) {
    check_knots(knots);
    const ConstrainedTransform tr(mp, T, 3, std::max(std::abs(knots.front()), std::abs(knots.back())));
    return centered_table(knots, [&](double a, double b) { return tr.raw(a, b); });
}

struct DensityGrid {
    std::vector<double> x;
    std::vector<double> pdf;
    double eta = 0.0;
    double delta = 0.0;
    double a = 0.0;
    double b = 0.0;
    double min_raw = 0.0;  // most negative value before clamping

    double mass() const {
        double s = 0.0;
        for (double p : pdf) s += p;
        return s * eta;
    }

    /// Density at x in [a, b], linear between nodes, periodic at b.
    double at(double v) const {
        const double s = (v - a) / eta;
        const auto n = static_cast<std::ptrdiff_t>(pdf.size());
        auto j = static_cast<std::ptrdiff_t>(std::floor(s));
        j = std::clamp<std::ptrdiff_t>(j, 0, n - 1);
        const double t = s - static_cast<double>(j);
        const double lo = pdf[j];
        const double hi = j + 1 < n ? pdf[j + 1] : pdf[0];
        return lo + t * (hi - lo);
    }
};

inline constexpr double kMinDensityMass = 0.9;
inline constexpr double kMaxDensityMass = 1.01;
/// The inversion periodizes the density over b - a, so mass outside the
/// window folds back in and the mass stays near 1 however narrow the window.
/// The grid mean does not: it is compared with E v+.
inline constexpr double kMaxAliasedMeanError = 0.05;

namespace detail {
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

/// In-place forward DFT, sum_k h_k exp(-2 pi i j k / n).
inline void forward_fft(std::vector<Complex>& h) {
    auto* data = reinterpret_cast<fftw_complex*>(h.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(h.size()), data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

/// Density of v+_T on x_j = a + eta j, j < n, by
///   f(x_j) = (1/pi) Re sum_k w_k delta exp(-i a delta k) phi(delta k) exp(-2 pi i j k / n),
/// delta = 2 pi / (b - a), eta = (b - a) / n, half weights at k = 0 and n - 1.
inline DensityGrid pdf_fft(const ModelParams& mp, double T, double a, double b, int n) {
    if (!(a < b)) throw std::invalid_argument("pdf_fft: interval needs a < b");
    if (n < 2 || (n & (n - 1)) != 0) throw std::invalid_argument("pdf_fft: n must be a power of two");
    DensityGrid g;
    g.a = a;
    g.b = b;
    g.eta = (b - a) / n;
    g.delta = 2.0 * kPi / (b - a);
    std::vector<Complex> h(n);
    for (int k = 0; k < n; ++k) {
        const double u = g.delta * k;
        const double w = (k == 0 || k == n - 1) ? 0.5 : 1.0;
        h[k] = w * g.delta * std::polar(1.0, -a * u) * cf_vplus(mp, T, u);
    }
    forward_fft(h);
    g.x.resize(n);
    g.pdf.resize(n);
    for (int j = 0; j < n; ++j) {
        g.x[j] = a + g.eta * j;
        const double p = h[j].real() / kPi;
        g.min_raw = std::min(g.min_raw, p);
        g.pdf[j] = std::max(p, 0.0);
    }
    const double mass = g.mass();
    if (mass < kMinDensityMass || mass > kMaxDensityMass)
        throw std::runtime_error("pdf_fft: density mass " + std::to_string(mass) +
                                 " outside [0.9, 1.01]; widen the truncation interval");
    double first = 0.0;
    for (int j = 0; j < n; ++j) first += g.x[j] * g.pdf[j];
    const double mean = first * g.eta / mass;
    const double expected = unconstrained_moments(mp, T).vstar;
    if (std::abs(mean - expected) > kMaxAliasedMeanError * expected)
        throw std::runtime_error("pdf_fft: grid mean " + std::to_string(mean) + " differs from E v+ = " +
                                 std::to_string(expected) + "; the window aliases mass, widen the truncation interval");
    return g;
}

/// int_lo^hi v^k f(v) dv by the trapezoid rule on the grid nodes inside the
/// window plus linearly interpolated end values.
inline double grid_raw_moment(const DensityGrid& g, int k, double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("grid_raw_moment: window needs lo <= hi");
    lo = std::max(lo, g.a);
    hi = std::min(hi, g.b);
    if (lo >= hi) return 0.0;
    auto q = [&](double v) { return std::pow(v, k) * g.at(v); };
    const auto first = static_cast<std::ptrdiff_t>(std::floor((lo - g.a) / g.eta)) + 1;
    double prev_x = lo;
    double prev_q = q(lo);
    double sum = 0.0;
    const auto n = static_cast<std::ptrdiff_t>(g.pdf.size());
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(first, 0); j <= n; ++j) {
        const double xj = g.a + g.eta * static_cast<double>(j);
        if (xj >= hi) break;
        if (xj <= prev_x) continue;
        const double qj = std::pow(xj, k) * (j < n ? g.pdf[j] : g.pdf[0]);
        sum += 0.5 * (xj - prev_x) * (prev_q + qj);
        prev_x = xj;
        prev_q = qj;
    }
    sum += 0.5 * (hi - prev_x) * (prev_q + q(hi));
    return sum;
}

/// Centered constrained moments on every knot window via the density grid.
inline ConstrainedMoments constrained_moments_table(const DensityGrid& g, const std::vector<double>& knots) {
    return centered_table(knots, [&](double a, double b) {
        std::vector<double> r(4);
        for (int k = 0; k < 4; ++k) r[k] = grid_raw_moment(g, k, a, b);
        return r;
    });
}

/// Sample skewness of the grid distribution.
inline double grid_skewness(const DensityGrid& g) {
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t j = 0; j < g.x.size(); ++j) {
        m0 += g.pdf[j];
        m1 += g.pdf[j] * g.x[j];
    }
    const double mu = m1 / m0;
    double c2 = 0.0, c3 = 0.0;
    for (std::size_t j = 0; j < g.x.size(); ++j) {
        const double d = g.x[j] - mu;
        c2 += g.pdf[j] * d * d;
        c3 += g.pdf[j] * d * d * d;
    }
    c2 /= m0;
    c3 /= m0;
    return c3 / std::pow(c2, 1.5);
}

/// Two-column (x, pdf) text export.
inline void write_density(const DensityGrid& g, std::ostream& os) {
    os << "x,pdf\n";
    os.precision(12);
    for (std::size_t j = 0; j < g.x.size(); ++j) os << g.x[j] << ',' << g.pdf[j] << '\n';
}

}  // namespace oux
