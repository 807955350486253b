// oux: exchange-option prices under the OU/IG stochastic covariance model.
//
//   oux price   [flags]   one angle, selected methods
//   oux bench   [flags]   every angle x method, plus timings
//   oux figures [flags]   plot datasets
//
// Exit status: 0 success, 1 configuration error, 2 some cells failed.

#include "oux/bench.hpp"
#include "oux/config.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Flags {
    std::string config;
    std::string methods;
    std::string thetas;
    std::optional<long> paths;
    std::optional<std::uint64_t> seed;
    std::optional<int> fft_n;
    std::optional<int> knots;
    std::string interval;
    std::string output;
    std::string format;
    std::optional<int> jobs;
};

void add_flags(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "JSON config file");
    app->add_option("--method", f.methods, "comma list of taylor1,taylor2,taylor,spline,fft,mc");
    app->add_option("--theta", f.thetas, "comma list of angles in radians or pi6,pi3,pi2,pi");
    app->add_option("--paths", f.paths, "Monte Carlo paths");
    app->add_option("--seed", f.seed, "Monte Carlo seed");
    app->add_option("--fft-n", f.fft_n, "FFT grid size (power of two)");
    app->add_option("--knots", f.knots, "spline subintervals");
    app->add_option("--interval", f.interval, "variance window A,B");
    app->add_option("--output", f.output, "output file (figures: directory)");
    app->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app->add_option("--jobs", f.jobs, "concurrent table cells");
}

oux::RunConfig resolve(const Flags& f) {
    using namespace oux;
    RunConfig c = load_config(f.config);
    if (!f.methods.empty()) {
        c.methods.clear();
        for (const auto& m : split_list(f.methods)) {
            if (m == "taylor") c.methods.push_back(c.numeric.taylor_order == 1 ? Method::taylor1 : Method::taylor2);
            else c.methods.push_back(parse_method(m));
        }
    }
    if (!f.thetas.empty()) {
        c.theta_list.clear();
        for (const auto& t : split_list(f.thetas)) c.theta_list.push_back(parse_angle(t));
    }
    if (f.paths) c.mc.npaths = *f.paths;
    if (f.seed) c.mc.seed = *f.seed;
    if (f.fft_n) c.numeric.fft_n = *f.fft_n;
    if (f.knots) c.numeric.spline_knots = *f.knots;
    if (!f.interval.empty()) {
        const auto parts = split_list(f.interval);
        if (parts.size() != 2) throw ParameterError("numeric.interval", "expected A,B");
        try {
            c.numeric.interval = {std::stod(parts[0]), std::stod(parts[1])};
        } catch (const std::exception&) {
            throw ParameterError("numeric.interval", "expected two numbers");
        }
    }
    if (!f.output.empty()) c.output.path = f.output;
    if (f.format == "json") c.output.format = OutputFormat::json;
    if (f.format == "csv") c.output.format = OutputFormat::csv;
    if (f.jobs) c.jobs = *f.jobs;
    c.validate();
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exchange option pricing under an OU stochastic covariance model"};
    app.require_subcommand(1);
    Flags flags;
    auto* price = app.add_subcommand("price", "price one angle with the selected methods");
    auto* bench = app.add_subcommand("bench", "price every angle and method, report timings");
    auto* figures = app.add_subcommand("figures", "write plot datasets");
    for (auto* sub : {price, bench, figures}) add_flags(sub, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    oux::RunConfig cfg;
    try {
        cfg = resolve(flags);
        if (price->parsed()) {
            cfg.theta_list.resize(1);
            if (flags.methods.empty() && flags.config.empty()) cfg.methods = {oux::Method::fft};
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (figures->parsed()) {
            const std::string dir = cfg.output.path.empty() ? "figures" : cfg.output.path;
            for (const auto& f : oux::emit_figures(cfg, dir)) std::cout << f << '\n';
            return 0;
        }
        const oux::BenchmarkTable tab = oux::run_benchmark(cfg);
        oux::write_benchmark(tab, cfg, std::cout, std::cerr);
        for (const auto& c : tab.cells)
            if (!c.ok()) std::cerr << "cell theta=" << c.theta << " " << oux::to_string(c.method) << ": " << c.error << '\n';
        return tab.failures() == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
