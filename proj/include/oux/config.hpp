#pragma once

// Run configuration: JSON ingestion with strict key checking, defaults equal
// to the benchmark set, and a lossless echo.

#include "oux/mc.hpp"
#include "oux/model.hpp"
#include "oux/pricers.hpp"
#include "oux/spline.hpp"

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace oux {

using nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class OutputFormat { csv, json };

struct NumericConfig {
    std::pair<double, double> interval{0.0, 5.0};
    int fft_n = 4096;
    int spline_knots = 64;  // subintervals of the window
    int taylor_order = 2;
    std::optional<double> vstar_override;
    SplineBoundary spline_boundary = SplineBoundary::clamped;

    friend bool operator==(const NumericConfig&, const NumericConfig&) = default;
};

struct OutputConfig {
    OutputFormat format = OutputFormat::csv;
    std::string path;  // empty: stdout
    bool emit_figures = false;

    friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct RunConfig {
    ModelParams model;
    ContractParams contract;
    std::vector<Method> methods{Method::taylor1, Method::taylor2, Method::spline, Method::fft, Method::mc};
    std::vector<double> theta_list{kPi / 6.0, kPi / 3.0, kPi / 2.0, kPi};
    NumericConfig numeric;
    SimConfig mc;
    OutputConfig output;
    int jobs = 1;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;

    void validate() const {
        model.validate();
        contract.validate();
        if (methods.empty()) throw ParameterError("methods", "at least one method is required");
        if (theta_list.empty()) throw ParameterError("theta_list", "at least one angle is required");
        const auto [a, b] = numeric.interval;
        if (!(a < b) || a < 0.0) throw ParameterError("numeric.interval", "need 0 <= a < b");
        if (numeric.fft_n < 2 || (numeric.fft_n & (numeric.fft_n - 1)) != 0)
            throw ParameterError("numeric.fft_n", "must be a power of two");
        if (numeric.spline_knots < 3) throw ParameterError("numeric.spline_knots", "need at least 3 subintervals");
        if (numeric.taylor_order != 1 && numeric.taylor_order != 2)
            throw ParameterError("numeric.taylor_order", "must be 1 or 2");
        if (numeric.vstar_override && !(*numeric.vstar_override > 0.0))
            throw ParameterError("numeric.vstar_override", "must be positive");
        if (mc.npaths < 1) throw ParameterError("mc.npaths", "must be positive");
        if (mc.delta && !(*mc.delta > 0.0)) throw ParameterError("mc.delta", "must be positive");
        if (mc.emit_paths && *mc.emit_paths < 1) throw ParameterError("mc.emit_paths", "must be positive");
        if (mc.jobs < 1) throw ParameterError("mc.jobs", "must be positive");
        if (jobs < 1) throw ParameterError("jobs", "must be positive");
    }
};

/// Radians, or one of pi6, pi3, pi2, pi (optionally signed).
inline double parse_angle(const std::string& text) {
    std::string s = text;
    double sign = 1.0;
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
        if (s[0] == '-') sign = -1.0;
        s.erase(0, 1);
    }
    if (s == "pi") return sign * kPi;
    if (s == "pi2") return sign * kPi / 2.0;
    if (s == "pi3") return sign * kPi / 3.0;
    if (s == "pi4") return sign * kPi / 4.0;
    if (s == "pi6") return sign * kPi / 6.0;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || text.empty()) throw ParameterError("theta_list", "cannot parse angle '" + text + "'");
    return v;
}

namespace detail {

inline void reject_unknown(const json& j, const std::string& section, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError(section + ": expected an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items()) {
        if (!allowed.count(k)) throw ConfigError("unknown key '" + (section.empty() ? k : section + "." + k) + "'");
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& path) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path + "." + key + ": " + e.what());
    }
}

inline void read_pair(const json& j, const char* key, Pair& out, const std::string& path) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(path + "." + key + ": expected a pair of numbers");
    out = {v[0].get<double>(), v[1].get<double>()};
}

template <class T>
void read_optional(const json& j, const char* key, std::optional<T>& out, const std::string& path) {
    if (!j.contains(key)) return;
    if (j.at(key).is_null()) {
        out.reset();
        return;
    }
    T v{};
    read(j, key, v, path);
    out = v;
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace detail

inline RunConfig config_from_json(const json& j) {
    using namespace detail;
    RunConfig c;
    reject_unknown(j, "", {"model", "contract", "methods", "theta_list", "numeric", "mc", "output", "jobs"});
    if (j.contains("model")) {
        const json& m = j["model"];
        reject_unknown(m, "model", {"aF", "bF", "aV", "bV", "lambdaF", "lambdaV", "F0", "V0"});
        read_pair(m, "aF", c.model.aF, "model");
        read_pair(m, "bF", c.model.bF, "model");
        read_pair(m, "aV", c.model.aV, "model");
        read_pair(m, "bV", c.model.bV, "model");
        read_pair(m, "lambdaF", c.model.lambdaF, "model");
        read_pair(m, "lambdaV", c.model.lambdaV, "model");
        read_pair(m, "F0", c.model.F0, "model");
        read_pair(m, "V0", c.model.V0, "model");
    }
    if (j.contains("contract")) {
        const json& k = j["contract"];
        reject_unknown(k, "contract", {"s0", "c", "m", "q", "r", "T", "discounting"});
        read_pair(k, "s0", c.contract.s0, "contract");
        read(k, "c", c.contract.c, "contract");
        read(k, "m", c.contract.m, "contract");
        read_pair(k, "q", c.contract.q, "contract");
        read(k, "r", c.contract.r, "contract");
        read(k, "T", c.contract.T, "contract");
        if (k.contains("discounting")) {
            const std::string d = k["discounting"].get<std::string>();
            if (d == "carry") c.contract.discounting = DiscountConvention::carry;
            else if (d == "classical") c.contract.discounting = DiscountConvention::classical;
            else throw ParameterError("contract.discounting", "expected carry or classical");
        }
    }
    if (j.contains("methods")) {
        if (!j["methods"].is_array()) throw ConfigError("methods: expected a list");
        c.methods.clear();
        for (const auto& m : j["methods"]) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("theta_list")) {
        if (!j["theta_list"].is_array()) throw ConfigError("theta_list: expected a list");
        c.theta_list.clear();
        for (const auto& t : j["theta_list"])
            c.theta_list.push_back(t.is_string() ? parse_angle(t.get<std::string>()) : t.get<double>());
    }
    if (j.contains("numeric")) {
        const json& n = j["numeric"];
        reject_unknown(n, "numeric",
                       {"interval", "fft_n", "spline_knots", "taylor_order", "vstar_override", "spline_boundary"});
        Pair iv{c.numeric.interval.first, c.numeric.interval.second};
        read_pair(n, "interval", iv, "numeric");
        c.numeric.interval = {iv[0], iv[1]};
        read(n, "fft_n", c.numeric.fft_n, "numeric");
        read(n, "spline_knots", c.numeric.spline_knots, "numeric");
        read(n, "taylor_order", c.numeric.taylor_order, "numeric");
        read_optional(n, "vstar_override", c.numeric.vstar_override, "numeric");
        if (n.contains("spline_boundary")) {
            const std::string b = n["spline_boundary"].get<std::string>();
            if (b == "clamped") c.numeric.spline_boundary = SplineBoundary::clamped;
            else if (b == "natural") c.numeric.spline_boundary = SplineBoundary::natural;
            else throw ParameterError("numeric.spline_boundary", "expected clamped or natural");
        }
    }
    if (j.contains("mc")) {
        const json& m = j["mc"];
        reject_unknown(m, "mc", {"npaths", "delta", "seed", "emit_paths", "jobs"});
        read(m, "npaths", c.mc.npaths, "mc");
        read_optional(m, "delta", c.mc.delta, "mc");
        read(m, "seed", c.mc.seed, "mc");
        read_optional(m, "emit_paths", c.mc.emit_paths, "mc");
        read(m, "jobs", c.mc.jobs, "mc");
    }
    if (j.contains("output")) {
        const json& o = j["output"];
        reject_unknown(o, "output", {"format", "path", "emit_figures"});
        if (o.contains("format")) {
            const std::string f = o["format"].get<std::string>();
            if (f == "csv") c.output.format = OutputFormat::csv;
            else if (f == "json") c.output.format = OutputFormat::json;
            else throw ParameterError("output.format", "expected csv or json");
        }
        read(o, "path", c.output.path, "output");
        read(o, "emit_figures", c.output.emit_figures, "output");
    }
    read(j, "jobs", c.jobs, "");
    c.validate();
    return c;
}

inline RunConfig load_config(const std::string& path) {
    if (path.empty()) return RunConfig{};
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

inline json config_to_json(const RunConfig& c) {
    auto pair = [](const Pair& p) { return json::array({p[0], p[1]}); };
    json methods = json::array();
    for (Method m : c.methods) methods.push_back(to_string(m));
    json j;
    j["model"] = {{"aF", pair(c.model.aF)},         {"bF", pair(c.model.bF)},
                  {"aV", pair(c.model.aV)},         {"bV", pair(c.model.bV)},
                  {"lambdaF", pair(c.model.lambdaF)}, {"lambdaV", pair(c.model.lambdaV)},
                  {"F0", pair(c.model.F0)},         {"V0", pair(c.model.V0)}};
    j["contract"] = {{"s0", pair(c.contract.s0)},
                     {"c", c.contract.c},
                     {"m", c.contract.m},
                     {"q", pair(c.contract.q)},
                     {"r", c.contract.r},
                     {"T", c.contract.T},
                     {"discounting", c.contract.discounting == DiscountConvention::carry ? "carry" : "classical"}};
    j["methods"] = methods;
    j["theta_list"] = c.theta_list;
    j["numeric"] = {{"interval", json::array({c.numeric.interval.first, c.numeric.interval.second})},
                    {"fft_n", c.numeric.fft_n},
                    {"spline_knots", c.numeric.spline_knots},
                    {"taylor_order", c.numeric.taylor_order},
                    {"vstar_override", detail::optional_json(c.numeric.vstar_override)},
                    {"spline_boundary", c.numeric.spline_boundary == SplineBoundary::clamped ? "clamped" : "natural"}};
    j["mc"] = {{"npaths", c.mc.npaths},
               {"delta", detail::optional_json(c.mc.delta)},
               {"seed", c.mc.seed},
               {"emit_paths", c.mc.emit_paths ? json(*c.mc.emit_paths) : json(nullptr)},
               {"jobs", c.mc.jobs}};
    j["output"] = {{"format", c.output.format == OutputFormat::csv ? "csv" : "json"},
                   {"path", c.output.path},
                   {"emit_figures", c.output.emit_figures}};
    j["jobs"] = c.jobs;
    return j;
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace oux
