#pragma once

// Benchmark table: every (angle, method) cell priced independently, with
// timing kept apart from prices so repeated runs write identical tables.

#include "oux/config.hpp"
#include "oux/mc.hpp"
#include "oux/pricers.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace oux {

struct BenchCell {
    double theta = 0.0;
    Method method = Method::fft;
    std::optional<PriceReport> report;
    std::string error;

    bool ok() const { return report.has_value(); }
};

struct BenchmarkTable {
    std::vector<double> thetas;
    std::vector<Method> methods;
    std::vector<BenchCell> cells;  // row-major: theta, then method

    const BenchCell& at(std::size_t row, std::size_t col) const { return cells[row * methods.size() + col]; }
    std::size_t failures() const {
        return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return !c.ok(); }));
    }
    /// Median runtime of a method over rows that succeeded.
    std::optional<double> runtime(Method m) const {
        std::vector<double> t;
        for (const auto& c : cells)
            if (c.method == m && c.ok()) t.push_back(c.report->runtime_seconds);
        if (t.empty()) return std::nullopt;
        std::sort(t.begin(), t.end());
        return t[t.size() / 2];
    }
};

inline constexpr int kTimingRepeats = 5;

inline PriceReport price_cell(const RunConfig& cfg, double theta, Method method) {
    ModelParams mp = cfg.model;
    mp.theta = theta;
    switch (method) {
        case Method::taylor1: return price_taylor(mp, cfg.contract, 1, cfg.numeric.vstar_override);
        case Method::taylor2: return price_taylor(mp, cfg.contract, 2, cfg.numeric.vstar_override);
        case Method::spline:
            return price_spline(mp, cfg.contract, cfg.numeric.interval, cfg.numeric.spline_knots,
                                cfg.numeric.spline_boundary);
        case Method::fft: return price_fft(mp, cfg.contract, cfg.numeric.interval, cfg.numeric.fft_n);
        case Method::mc: break;
    }
    throw std::logic_error("price_cell: Monte Carlo cells are priced together");
}

/// Median of kTimingRepeats runs for the deterministic pricers.
inline PriceReport timed_cell(const RunConfig& cfg, double theta, Method method) {
    PriceReport first = price_cell(cfg, theta, method);
    std::vector<double> t{first.runtime_seconds};
    for (int i = 1; i < kTimingRepeats; ++i) t.push_back(price_cell(cfg, theta, method).runtime_seconds);
    std::sort(t.begin(), t.end());
    first.runtime_seconds = t[t.size() / 2];
    return first;
}

inline PriceReport to_report(const McResult& r, const SimConfig& cfg) {
    PriceReport p;
    p.method = Method::mc;
    p.price = r.price;
    p.ci = r.ci95;
    p.runtime_seconds = r.runtime_seconds;
    p.config_echo = {{"npaths", static_cast<double>(r.npaths)},
                     {"seed", static_cast<double>(cfg.seed)},
                     {"stderr", r.std_error}};
    if (cfg.delta) p.config_echo["delta"] = *cfg.delta;
    return p;
}

/// Prices every cell. Non-MC cells run on up to cfg.jobs threads; the MC
/// column is one simulation shared by all angles. A failing cell records its
/// error and leaves the rest of the table intact.
inline BenchmarkTable run_benchmark(const RunConfig& cfg) {
    cfg.validate();
    BenchmarkTable tab;
    tab.thetas = cfg.theta_list;
    tab.methods = cfg.methods;
    for (double th : cfg.theta_list)
        for (Method m : cfg.methods) tab.cells.push_back({th, m, std::nullopt, {}});

    auto run = [&](BenchCell& cell) {
        try {
            cell.report = timed_cell(cfg, cell.theta, cell.method);
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    };
    std::vector<BenchCell*> pending;
    for (auto& c : tab.cells)
        if (c.method != Method::mc) pending.push_back(&c);
    for (std::size_t i = 0; i < pending.size(); i += static_cast<std::size_t>(cfg.jobs)) {
        std::vector<std::future<void>> batch;
        for (std::size_t k = i; k < std::min(pending.size(), i + cfg.jobs); ++k)
            batch.push_back(std::async(cfg.jobs > 1 ? std::launch::async : std::launch::deferred,
                                       [&, k] { run(*pending[k]); }));
        for (auto& f : batch) f.get();
    }

    if (std::find(cfg.methods.begin(), cfg.methods.end(), Method::mc) != cfg.methods.end()) {
        try {
            ModelParams mp = cfg.model;
            mp.theta = cfg.theta_list.front();
            const std::vector<McResult> mc = price_mc_multi(mp, cfg.contract, cfg.mc, cfg.theta_list);
            std::size_t row = 0;
            for (auto& c : tab.cells)
                if (c.method == Method::mc) c.report = to_report(mc[row++], cfg.mc);
        } catch (const std::exception& e) {
            for (auto& c : tab.cells)
                if (c.method == Method::mc) c.error = e.what();
        }
    }
    return tab;
}

namespace detail {
inline std::string fmt(double x, const char* format = "%.10g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, x);
    return buf;
}
inline std::string csv_escape(const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}
}  // namespace detail

/// theta,method,price,ci_low,ci_high,status,error
inline void write_table_csv(const BenchmarkTable& tab, std::ostream& os) {
    using detail::fmt;
    os << "theta,method,price,ci_low,ci_high,status,error\n";
    for (const auto& c : tab.cells) {
        os << fmt(c.theta) << ',' << to_string(c.method) << ',';
        if (c.ok()) {
            os << fmt(c.report->price) << ',';
            if (c.report->ci) os << fmt(c.report->ci->first) << ',' << fmt(c.report->ci->second);
            else os << ',';
            os << ",ok,\n";
        } else {
            os << ",,,error," << detail::csv_escape(c.error) << '\n';
        }
    }
}

inline json table_to_json(const BenchmarkTable& tab, const RunConfig& cfg) {
    json rows = json::array();
    for (std::size_t r = 0; r < tab.thetas.size(); ++r) {
        json cells = json::object();
        for (std::size_t m = 0; m < tab.methods.size(); ++m) {
            const BenchCell& c = tab.at(r, m);
            json cell;
            if (c.ok()) {
                cell["price"] = c.report->price;
                if (c.report->ci) cell["ci95"] = {c.report->ci->first, c.report->ci->second};
                json echo = json::object();
                for (const auto& [k, v] : c.report->config_echo)
                    if (k != "stderr") echo[k] = v;
                if (c.method == Method::mc) cell["stderr"] = c.report->config_echo.at("stderr");
                cell["settings"] = echo;
            } else {
                cell["error"] = c.error;
            }
            cells[to_string(c.method)] = cell;
        }
        rows.push_back({{"theta", tab.thetas[r]}, {"cells", cells}});
    }
    return {{"config", config_to_json(cfg)}, {"rows", rows}};
}

/// method,theta,runtime_seconds rows plus speedup ratios against MC.
inline void write_timing_csv(const BenchmarkTable& tab, std::ostream& os) {
    using detail::fmt;
    os << "method,theta,runtime_seconds\n";
    for (const auto& c : tab.cells)
        if (c.ok()) os << to_string(c.method) << ',' << fmt(c.theta) << ',' << fmt(c.report->runtime_seconds, "%.6g") << '\n';
    const auto mc = tab.runtime(Method::mc);
    if (!mc) return;
    os << "\nspeedup_vs_mc,method,ratio\n";
    for (Method m : {Method::taylor1, Method::taylor2, Method::spline, Method::fft}) {
        const auto t = tab.runtime(m);
        if (t && *t > 0.0) os << "speedup_vs_mc," << to_string(m) << ',' << fmt(*mc / *t, "%.6g") << '\n';
    }
}

/// Writes the table to cfg.output.path (stdout if empty) and the timings to
/// "<path>.timing.csv" (stderr if no path).
inline void write_benchmark(const BenchmarkTable& tab, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    auto emit = [&](std::ostream& os) {
        if (cfg.output.format == OutputFormat::json) os << table_to_json(tab, cfg).dump(2) << '\n';
        else write_table_csv(tab, os);
    };
    if (cfg.output.path.empty()) {
        emit(out);
        write_timing_csv(tab, err);
        return;
    }
    std::ofstream f(cfg.output.path);
    if (!f) throw std::runtime_error("cannot write '" + cfg.output.path + "'");
    emit(f);
    std::ofstream t(cfg.output.path + ".timing.csv");
    write_timing_csv(tab, t);
}

inline void write_trajectories(const TrajectoryTable& tab, std::ostream& os) {
    using detail::fmt;
    os << 't';
    for (const auto& c : tab.columns) os << ',' << c;
    os << '\n';
    for (std::size_t k = 0; k < tab.t.size(); ++k) {
        os << fmt(tab.t[k]);
        for (const auto& col : tab.values) {
            os << ',';
            if (!std::isnan(col[k])) os << fmt(col[k]);
        }
        os << '\n';
    }
}

inline constexpr double kFigureExpansionPoint = 0.25;

/// Plot datasets: Margrabe curve with its Taylor polynomials around 0.25,
/// spline error, density of v+, and sample trajectories. Returns the files written.
inline std::vector<std::string> emit_figures(const RunConfig& cfg, const std::string& dir) {
    namespace fs = std::filesystem;
    using detail::fmt;
    fs::create_directories(dir);
    std::vector<std::string> files;
    auto open = [&](const std::string& name) {
        files.push_back((fs::path(dir) / name).string());
        std::ofstream f(files.back());
        if (!f) throw std::runtime_error("cannot write '" + files.back() + "'");
        return f;
    };
    const ContractParams& cp = cfg.contract;
    ModelParams mp = cfg.model;
    mp.theta = cfg.theta_list.front();

    {
        const double v0 = kFigureExpansionPoint;
        const double c0 = margrabe_price(cp, v0 * cp.T);
        const double c1 = d_margrabe(cp, v0, 1);
        const double c2 = d_margrabe(cp, v0, 2);
        auto f = open("margrabe_taylor.csv");
        f << "v,margrabe,taylor1,taylor2\n";
        for (int i = 1; i <= 200; ++i) {
            const double v = i / 200.0;
            const double d = v - v0;
            f << fmt(v) << ',' << fmt(margrabe_price(cp, v * cp.T)) << ',' << fmt(c0 + c1 * d) << ','
              << fmt(c0 + c1 * d + 0.5 * c2 * d * d) << '\n';
        }
    }
    {
        const auto [a, b] = cfg.numeric.interval;
        const SplineCoefficients s =
            build_spline(cp, uniform_knots(a, b, cfg.numeric.spline_knots), cfg.numeric.spline_boundary);
        auto f = open("spline_error.csv");
        f << "v,error\n";
        for (int i = 0; i <= 1000; ++i) {
            const double v = std::max(a, 0.05) + (b - std::max(a, 0.05)) * i / 1000.0;
            f << fmt(v) << ',' << fmt(margrabe_price(cp, v) - s(v)) << '\n';
        }
    }
    {
        const DensityGrid g = pdf_fft(mp, cp.T, cfg.numeric.interval.first, cfg.numeric.interval.second,
                                      cfg.numeric.fft_n);
        auto f = open("vplus_density.csv");
        write_density(g, f);
    }
    SimConfig sim = cfg.mc;
    if (!sim.emit_paths) sim.emit_paths = 3;
    for (auto [kind, name] : {std::pair{TrajectoryKind::subordinator, "paths_subordinator.csv"},
                              std::pair{TrajectoryKind::ou, "paths_ou.csv"},
                              std::pair{TrajectoryKind::correlation, "paths_correlation.csv"}}) {
        auto f = open(name);
        write_trajectories(export_paths(mp, cp.T, sim, kind), f);
    }
    return files;
}

}  // namespace oux
