#pragma once

// Partial Monte Carlo: simulate the integrated OU factors only, then average
// the conditional exchange price over draws of v+ = tr(M Sigma+).

#include "oux/margrabe.hpp"
#include "oux/model.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace oux {

/// xoshiro256++ seeded through splitmix64. One generator per path, keyed by
/// (seed, path index), so a path's draws never depend on scheduling.
class PathRng {
public:
    using result_type = std::uint64_t;

    PathRng(std::uint64_t seed, std::uint64_t path) {
        std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (path + 1));
        for (auto& w : s_) w = splitmix(x);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t out = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return out;
    }

private:
    std::array<std::uint64_t, 4> s_{};

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    static std::uint64_t splitmix(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

using Normal = boost::random::normal_distribution<double>;

/// IG increment of a subordinator with exponent -a(sqrt(-2iz + b^2) - b) over
/// subordinator time dt (a_dt = a dt): IG(mean a_dt / b, shape a_dt^2), drawn
/// with the Michael-Schucany-Haas transformation.
template <class Rng>
double sample_ig_increment(double a_dt, double b, Rng& rng, Normal& normal) {
    if (!(a_dt > 0.0)) return 0.0;
    const double mu = a_dt / b;
    const double shape = a_dt * a_dt;
    if (!(shape > 0.0)) return 0.0;  // a_dt below ~1e-154: the increment is below any representable scale
    const double z = normal(rng);
    const double rho = mu * z * z / (2.0 * shape);
    // smaller root of the MSH quadratic, written without cancellation
    const double x = mu / (1.0 + rho + std::sqrt(rho * (rho + 2.0)));
    boost::random::uniform_01<double> unif;
    return unif(rng) * (mu + x) <= mu ? x : mu * mu / x;
}

template <class Rng>
double sample_ig_increment(double a_dt, double b, Rng& rng) {
    Normal normal;
    return sample_ig_increment(a_dt, b, rng, normal);
}

struct SimConfig {
    long npaths = 1000000;
    std::optional<double> delta;  // subordinator-time step; default lambda T / 1000 per factor
    std::uint64_t seed = 20240607;
    std::optional<int> emit_paths;
    int jobs = 1;
    bool keep_samples = false;

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

inline constexpr int kDefaultSteps = 1000;

/// Discretized integrated OU factor: lambda^{-1}[(1 - e^{-lambda T}) X0 +
/// sum_{k=1}^{n} (1 - e^{-(lambda T - k delta)}) dZ_k], n = [lambda T / delta].
struct FactorScheme {
    double a = 1.0, b = 5.0, lambda = 1.0, x0 = 0.0;
    double delta = 0.0;
    double level_term = 0.0;
    std::vector<double> weights;

    FactorScheme(double a_, double b_, double lambda_, double x0_, double T, std::optional<double> step)
        : a(a_), b(b_), lambda(lambda_), x0(x0_) {
        const double horizon = lambda * T;
        delta = step.value_or(horizon / kDefaultSteps);
        if (!(delta > 0.0) || delta > horizon)
            throw ParameterError("mc.delta", "step must be positive and at most lambda T");
        const auto n = static_cast<long>(std::floor(horizon / delta * (1.0 + 1e-12)));
        weights.resize(n);
        for (long k = 1; k <= n; ++k) weights[k - 1] = -std::expm1(-(horizon - k * delta)) / lambda;
        level_term = -std::expm1(-horizon) / lambda * x0;
    }

    template <class Rng>
    double draw(Rng& rng, Normal& normal) const {
        double sum = level_term;
        const double a_dt = a * delta;
        for (double w : weights) sum += w * sample_ig_increment(a_dt, b, rng, normal);
        return sum;
    }
};

struct FactorDraw {
    Pair F{0.0, 0.0};
    Pair V{0.0, 0.0};
};

class FactorSimulator {
public:
    FactorSimulator(const ModelParams& mp, double T, const SimConfig& cfg) {
        mp.validate();
        for (int l = 0; l < 2; ++l) {
            schemes_.emplace_back(mp.aF[l], mp.bF[l], mp.lambdaF[l], mp.F0[l], T, cfg.delta);
        }
        for (int l = 0; l < 2; ++l) {
            schemes_.emplace_back(mp.aV[l], mp.bV[l], mp.lambdaV[l], mp.V0[l], T, cfg.delta);
        }
    }

    template <class Rng>
    FactorDraw draw(Rng& rng) const {
        Normal normal;
        FactorDraw d;
        d.F[0] = schemes_[0].draw(rng, normal);
        d.F[1] = schemes_[1].draw(rng, normal);
        d.V[0] = schemes_[2].draw(rng, normal);
        d.V[1] = schemes_[3].draw(rng, normal);
        return d;
    }

    FactorDraw draw_path(std::uint64_t seed, std::uint64_t path) const {
        PathRng rng(seed, path);
        return draw(rng);
    }

private:
    std::vector<FactorScheme> schemes_;
};

/// One draw of (F+, V+).
template <class Rng>
FactorDraw simulate_integrated_factors(const ModelParams& mp, double T, const SimConfig& cfg, Rng& rng) {
    return FactorSimulator(mp, T, cfg).draw(rng);
}

struct McResult {
    double price = 0.0;
    double std_error = 0.0;
    std::pair<double, double> ci95{0.0, 0.0};
    long npaths = 0;
    std::vector<double> sample_vplus;
    double runtime_seconds = 0.0;
};

/// Pairwise sum; fixed association order for a given length.
inline double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline McResult summarize(const std::vector<double>& values) {
    McResult r;
    const std::size_t n = values.size();
    r.npaths = static_cast<long>(n);
    r.price = pairwise_sum(values.data(), n) / static_cast<double>(n);
    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) dev[i] = (values[i] - r.price) * (values[i] - r.price);
    const double var = n > 1 ? pairwise_sum(dev.data(), n) / static_cast<double>(n - 1) : 0.0;
    r.std_error = std::sqrt(var / static_cast<double>(n));
    r.ci95 = {r.price - 1.96 * r.std_error, r.price + 1.96 * r.std_error};
    return r;
}

/// Runs body(path) for every path, split across `jobs` threads in contiguous
/// blocks. body must write only to per-path slots.
template <class Body>
void for_each_path(long npaths, int jobs, Body&& body) {
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(std::max<long>(npaths, 1))));
    if (jobs == 1) {
        for (long p = 0; p < npaths; ++p) body(p);
        return;
    }
    std::vector<std::thread> pool;
    const long block = (npaths + jobs - 1) / jobs;
    for (int w = 0; w < jobs; ++w) {
        const long lo = w * block;
        const long hi = std::min(npaths, lo + block);
        pool.emplace_back([&, lo, hi] {
            for (long p = lo; p < hi; ++p) body(p);
        });
    }
    for (auto& t : pool) t.join();
}

/// Prices for several loading angles from the same factor draws (the factors
/// do not depend on the angle).
inline std::vector<McResult> price_mc_multi(const ModelParams& mp, const ContractParams& cp, const SimConfig& cfg,
                                            const std::vector<double>& thetas) {
    if (cfg.npaths < 1) throw ParameterError("mc.npaths", "must be positive");
    cp.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const FactorSimulator sim(mp, cp.T, cfg);
    std::vector<Mat2> loadings;
    for (double th : thetas) loadings.push_back(loading_matrix(th));
    const std::size_t nt = thetas.size();
    const auto np = static_cast<std::size_t>(cfg.npaths);
    std::vector<std::vector<double>> prices(nt, std::vector<double>(np));
    std::vector<std::vector<double>> vplus_samples(cfg.keep_samples ? nt : 0, std::vector<double>(np));
    for_each_path(cfg.npaths, cfg.jobs, [&](long p) {
        const FactorDraw d = sim.draw_path(cfg.seed, static_cast<std::uint64_t>(p));
        for (std::size_t t = 0; t < nt; ++t) {
            const double v = vplus(assemble_covariance(d.F, d.V, loadings[t]));
            prices[t][p] = margrabe_price(cp, v);
            if (cfg.keep_samples) vplus_samples[t][p] = v;
        }
    });
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::vector<McResult> out;
    for (std::size_t t = 0; t < nt; ++t) {
        McResult r = summarize(prices[t]);
        if (cfg.keep_samples) r.sample_vplus = std::move(vplus_samples[t]);
        r.runtime_seconds = elapsed;
        out.push_back(std::move(r));
    }
    return out;
}

inline McResult price_mc(const ModelParams& mp, const ContractParams& cp, const SimConfig& cfg) {
    return price_mc_multi(mp, cp, cfg, {mp.theta}).front();
}

enum class TrajectoryKind { subordinator, ou, correlation };

/// Time-indexed paths on t_k = k T / steps. Missing entries are NaN.
struct TrajectoryTable {
    std::vector<double> t;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> values;  // values[column][k]
};

/// Sample paths of the subordinators Z (at subordinator time lambda t), the
/// OU levels X_{t+dt} = e^{-lambda dt} X_t + dZ, or the instantaneous
/// correlation sigma12 / sqrt(sigma11 sigma22).
inline TrajectoryTable export_paths(const ModelParams& mp, double T, const SimConfig& cfg, TrajectoryKind kind,
                                    int steps = kDefaultSteps) {
    if (!cfg.emit_paths || *cfg.emit_paths < 1) throw ParameterError("mc.emit_paths", "set a path count to export");
    mp.validate();
    if (!(T > 0.0) || steps < 1) throw std::invalid_argument("export_paths: need T > 0 and steps >= 1");
    const double dt = T / steps;
    const Mat2 A = mp.loading();
    const std::array<double, 4> a{mp.aF[0], mp.aF[1], mp.aV[0], mp.aV[1]};
    const std::array<double, 4> b{mp.bF[0], mp.bF[1], mp.bV[0], mp.bV[1]};
    const std::array<double, 4> lam{mp.lambdaF[0], mp.lambdaF[1], mp.lambdaV[0], mp.lambdaV[1]};
    const std::array<double, 4> x0{mp.F0[0], mp.F0[1], mp.V0[0], mp.V0[1]};
    const std::array<const char*, 4> names{"F1", "F2", "V1", "V2"};

    TrajectoryTable tab;
    for (int k = 0; k <= steps; ++k) tab.t.push_back(k * dt);
    for (int p = 0; p < *cfg.emit_paths; ++p) {
        PathRng rng(cfg.seed, static_cast<std::uint64_t>(p));
        Normal normal;
        std::array<std::vector<double>, 4> Z, X;
        for (int f = 0; f < 4; ++f) {
            Z[f].assign(steps + 1, 0.0);
            X[f].assign(steps + 1, x0[f]);
        }
        for (int k = 1; k <= steps; ++k) {
            for (int f = 0; f < 4; ++f) {
                const double dz = sample_ig_increment(a[f] * lam[f] * dt, b[f], rng, normal);
                Z[f][k] = Z[f][k - 1] + dz;
                X[f][k] = std::exp(-lam[f] * dt) * X[f][k - 1] + dz;
            }
        }
        const std::string suffix = "_p" + std::to_string(p);
        if (kind == TrajectoryKind::correlation) {
            std::vector<double> rho(steps + 1);
            for (int k = 0; k <= steps; ++k) {
                const IntegratedCovariance s = assemble_covariance({X[0][k], X[1][k]}, {X[2][k], X[3][k]}, A);
                rho[k] = (s.s11 > 0.0 && s.s22 > 0.0) ? s.s12 / std::sqrt(s.s11 * s.s22)
                                                      : std::numeric_limits<double>::quiet_NaN();
            }
            tab.columns.push_back("rho" + suffix);
            tab.values.push_back(std::move(rho));
        } else {
            for (int f = 0; f < 4; ++f) {
                tab.columns.push_back((kind == TrajectoryKind::subordinator ? "Z" : "") + std::string(names[f]) +
                                      suffix);
                tab.values.push_back(kind == TrajectoryKind::subordinator ? Z[f] : X[f]);
            }
        }
    }
    return tab;
}

}  // namespace oux
