// Copyright 2026 The resetsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Run configuration: INI-style text with one section per block.
//
//     seed = 7
//     output_dir = results
//
//     [device]
//     omega_ge = 4.904
//
//     [reset-trace]
//     mismatch = 29e-6
//
// Exactly one experiment section (spectroscopy, rabi, reset-trace,
// trigger-scan, readout-demo, thermal-pop) selects the experiment. Keys are
// reported as section.key in every error.

#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "resetsim/device_model.hpp"
#include "resetsim/errors.hpp"
#include "resetsim/lindblad_engine.hpp"
#include "resetsim/pulse_schedule.hpp"
#include "resetsim/virtual_experiments.hpp"

namespace resetsim {

enum class ExperimentKind { spectroscopy, rabi, reset_trace, trigger_scan, readout_demo, thermal_pop };

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::spectroscopy: return "spectroscopy";
        case ExperimentKind::rabi: return "rabi";
        case ExperimentKind::reset_trace: return "reset-trace";
        case ExperimentKind::trigger_scan: return "trigger-scan";
        case ExperimentKind::readout_demo: return "readout-demo";
        case ExperimentKind::thermal_pop: return "thermal-pop";
    }
    return "?";
}

inline std::optional<ExperimentKind> experiment_from_string(const std::string& s) {
    for (auto k : {ExperimentKind::spectroscopy, ExperimentKind::rabi, ExperimentKind::reset_trace,
                   ExperimentKind::trigger_scan, ExperimentKind::readout_demo, ExperimentKind::thermal_pop}) {
        if (s == to_string(k)) return k;
    }
    return std::nullopt;
}

struct SpectroscopyCfg {
    std::vector<double> amplitudes{-0.08, -0.06, -0.04, -0.02, 0.02, 0.04, 0.06, 0.08};  // GHz
    std::vector<double> voltages;   // V; replaces amplitudes through the AWG map when set
    double freq_start = 2.6355;     // GHz
    double freq_stop = 2.6425;
    double freq_step = 0.00025;
    double probe_duration = 10000.0;  // ns
    double ramp = 5.0;
};

enum class TriggerMode { compare, reset, no_reset };

inline const char* to_string(TriggerMode m) {
    switch (m) {
        case TriggerMode::compare: return "compare";
        case TriggerMode::reset: return "reset";
        case TriggerMode::no_reset: return "no-reset";
    }
    return "?";
}

struct RabiCfg {
    std::vector<double> amplitudes;  // GHz; empty: five points from half to full calibrated amplitude
    std::vector<double> voltages;
    double detuning = 0.0;           // GHz, relative to the calibrated resonance
    double t_start = 20.0;           // ns
    double t_stop = 400.0;
    double t_step = 2.0;
    double ramp = 5.0;
};

struct ResetTraceCfg {
    double mismatch = 0.0;  // GHz
};

struct TriggerCfg {
    std::vector<double> rates{1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 90.0};  // kHz
    TriggerMode mode = TriggerMode::compare;
    TriggerScanConfig scan;
};

struct ReadoutDemoCfg {
    double separation = 4.34;  // |center_f - center_g| / sigma
    double sigma = 1.0;
    std::size_t shots = 2000;  // per class and per end state
    std::size_t repetitions = 200;
    double rate_khz = 1.0;     // trigger rate of the end states classified
};

struct ThermalCfg {
    int n_angles = 41;
};

struct RunConfig {
    DeviceParams device;
    HilbertSpec hilbert;
    IntegratorCfg integrator;
    ResetConfig reset;
    AwgMap awg;
    ExperimentKind experiment = ExperimentKind::reset_trace;
    SpectroscopyCfg spectroscopy;
    RabiCfg rabi;
    ResetTraceCfg reset_trace;
    TriggerCfg trigger;
    ReadoutDemoCfg readout;
    ThermalCfg thermal;
    std::string output_dir;  // empty: $RESETSIM_OUT, then the working directory
    std::uint64_t seed = 1;
};

namespace detail {

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline double parse_number(const std::string& key, const std::string& raw) {
    const std::string text = trim(raw);
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size()) {
        throw ConfigError(key + ": expected a number, got '" + text + "'");
    }
    if (!std::isfinite(v)) throw ConfigError(key + ": value must be finite");
    return v;
}

inline long long parse_integer(const std::string& key, const std::string& raw) {
    const std::string text = trim(raw);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError(key + ": expected an integer, got '" + text + "'");
    }
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& raw) {
    const std::string text = trim(raw);
    if (text == "true" || text == "yes" || text == "1") return true;
    if (text == "false" || text == "no" || text == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& raw) {
    std::vector<double> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        out.push_back(parse_number(key, item));
    }
    return out;
}

/// Typed reader over one section that records which keys were consumed.
class Section {
public:
    Section(std::string name, const boost::property_tree::ptree* tree) : name_(std::move(name)), tree_(tree) {}

    [[nodiscard]] std::string key(const std::string& k) const { return name_.empty() ? k : name_ + "." + k; }

    [[nodiscard]] std::optional<std::string> raw(const std::string& k) {
        allowed_.insert(k);
        if (!tree_) return std::nullopt;
        const auto child = tree_->get_child_optional(boost::property_tree::ptree::path_type(k, '\0'));
        if (!child) return std::nullopt;
        return child->data();
    }

    void number(const std::string& k, double& target) {
        if (auto v = raw(k)) target = parse_number(key(k), *v);
    }
    void integer(const std::string& k, int& target) {
        if (auto v = raw(k)) target = static_cast<int>(parse_integer(key(k), *v));
    }
    void count(const std::string& k, std::size_t& target) {
        if (auto v = raw(k)) {
            const long long n = parse_integer(key(k), *v);
            if (n < 0) throw ConfigError(key(k) + ": must be >= 0");
            target = static_cast<std::size_t>(n);
        }
    }
    void flag(const std::string& k, bool& target) {
        if (auto v = raw(k)) target = parse_bool(key(k), *v);
    }
    void list(const std::string& k, std::vector<double>& target) {
        if (auto v = raw(k)) target = parse_list(key(k), *v);
    }
    template <typename Enum>
    void choice(const std::string& k, Enum& target, const std::map<std::string, Enum>& options) {
        if (auto v = raw(k)) {
            const auto it = options.find(trim(*v));
            if (it == options.end()) {
                std::string names;
                for (const auto& [n, _] : options) names += (names.empty() ? "" : ", ") + n;
                throw ConfigError(key(k) + ": expected one of {" + names + "}, got '" + trim(*v) + "'");
            }
            target = it->second;
        }
    }

    /// Throws on keys that were never requested.
    void reject_unknown() const {
        if (!tree_) return;
        for (const auto& [k, child] : *tree_) {
            if (!child.empty()) throw ConfigError(key(k) + ": nested sections are not supported");
            if (!allowed_.contains(k)) throw ConfigError(key(k) + ": unknown key");
        }
    }

private:
    std::string name_;
    const boost::property_tree::ptree* tree_;
    std::set<std::string> allowed_;
};

inline void require(bool ok, const std::string& key, const std::string& rule) {
    if (!ok) throw ConfigError(key + ": " + rule);
}

}  // namespace detail

/// Parses and validates a configuration document. When the text has no
/// experiment section, `fallback` selects the experiment; otherwise a
/// missing block is an error.
inline RunConfig parse_config(const std::string& text,
                              std::optional<ExperimentKind> fallback = std::nullopt) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config syntax error at line " + std::to_string(e.line()) + ": " + e.message());
    }

    RunConfig cfg;
    const std::set<std::string> blocks{"device", "hilbert", "integrator", "reset", "awg"};
    // read_ini drops sections without keys, so headers come from the text
    std::vector<std::string> headers;
    {
        static const std::regex header(R"(^\s*\[\s*([^\]]*?)\s*\]\s*$)");
        std::istringstream lines(text);
        std::smatch m;
        for (std::string line; std::getline(lines, line);) {
            if (std::regex_match(line, m, header)) headers.push_back(m[1]);
        }
    }
    const std::set<std::string> sections(headers.begin(), headers.end());
    auto is_root_key = [&sections](const std::string& name, const pt::ptree& child) {
        return child.empty() && !sections.contains(name);
    };
    std::optional<ExperimentKind> chosen;
    for (const auto& name : headers) {
        if (blocks.contains(name)) continue;
        const auto kind = experiment_from_string(name);
        if (!kind) throw ConfigError(name + ": unknown section");
        if (chosen) {
            throw ConfigError(name + ": only one experiment block is allowed (already have " +
                              to_string(*chosen) + ")");
        }
        chosen = kind;
    }
    if (!chosen && !fallback) {
        throw ConfigError(
            "experiment: missing experiment block; add one of [spectroscopy], [rabi], [reset-trace], "
            "[trigger-scan], [readout-demo], [thermal-pop]");
    }
    if (chosen && fallback && *chosen != *fallback) {
        throw ConfigError(std::string("experiment: config selects ") + to_string(*chosen) +
                          " but the command asked for " + to_string(*fallback));
    }
    cfg.experiment = chosen ? *chosen : *fallback;

    auto section = [&tree](const std::string& name) {
        const auto child = tree.get_child_optional(pt::ptree::path_type(name, '\0'));
        return detail::Section(name, child ? &*child : nullptr);
    };

    // root-level keys
    {
        pt::ptree top;
        for (const auto& [k, child] : tree) {
            if (is_root_key(k, child)) top.push_back({k, child});
        }
        detail::Section s("", &top);
        if (auto v = s.raw("seed")) {
            const long long seed = detail::parse_integer("seed", *v);
            detail::require(seed >= 0, "seed", "must be >= 0");
            cfg.seed = static_cast<std::uint64_t>(seed);
        }
        if (auto v = s.raw("output_dir")) cfg.output_dir = detail::trim(*v);
        s.reject_unknown();
    }

    {
        auto s = section("device");
        auto& d = cfg.device;
        s.number("omega_ge", d.omega_ge);
        s.number("alpha", d.alpha);
        s.number("omega_r", d.omega_r);
        s.number("g_coupling", d.g_coupling);
        s.number("kappa_r", d.kappa_r);
        s.number("t1_eg", d.t1_eg);
        s.number("t1_fe", d.t1_fe);
        // t1_hf follows t1_fe / sqrt(3) unless given
        d.t1_hf = d.t1_fe / std::numbers::sqrt3;
        s.number("t1_hf", d.t1_hf);
        s.number("p_thermal_e", d.p_thermal_e);
        s.choice("convention", d.convention,
                 std::map<std::string, FrequencyConvention>{{"dressed", FrequencyConvention::dressed},
                                                            {"bare", FrequencyConvention::bare}});
        s.choice("lifetimes", d.lifetimes,
                 std::map<std::string, LifetimeConvention>{{"measured", LifetimeConvention::measured},
                                                           {"intrinsic", LifetimeConvention::intrinsic}});
        s.reject_unknown();
        try {
            d.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
    }
    {
        auto s = section("hilbert");
        s.integer("n_transmon", cfg.hilbert.n_transmon);
        s.integer("n_resonator", cfg.hilbert.n_resonator);
        s.reject_unknown();
        detail::require(cfg.hilbert.n_transmon >= 3, "hilbert.n_transmon", "must be >= 3");
        detail::require(cfg.hilbert.n_resonator >= 2, "hilbert.n_resonator", "must be >= 2");
    }
    {
        auto s = section("integrator");
        s.number("dt", cfg.integrator.dt);
        s.integer("sample_every", cfg.integrator.sample_every);
        s.flag("convergence_check", cfg.integrator.convergence_check);
        s.reject_unknown();
        detail::require(cfg.integrator.dt > 0.0, "integrator.dt", "must be > 0");
        detail::require(cfg.integrator.sample_every >= 0, "integrator.sample_every", "must be >= 0");
    }
    {
        auto s = section("reset");
        auto& r = cfg.reset;
        s.number("ef_pulse_duration", r.ef_pulse_duration);
        s.number("f0g1_amplitude", r.f0g1_amplitude);
        s.number("f0g1_duration", r.f0g1_duration);
        s.number("f0g1_ramp", r.f0g1_ramp);
        if (s.raw("f0g1_stark_offset")) {
            s.number("f0g1_stark_offset", r.f0g1_stark_offset);
            r.auto_stark = false;
        }
        s.number("f0g1_freq_offset", r.f0g1_freq_offset);
        s.flag("use_ideal_x", r.use_ideal_x);
        s.number("x_over_rotation", r.x_over_rotation);
        s.number("idle_after", r.idle_after);
        s.reject_unknown();
        detail::require(r.ef_pulse_duration > 0.0, "reset.ef_pulse_duration", "must be > 0");
        detail::require(r.f0g1_duration > 0.0, "reset.f0g1_duration", "must be > 0");
        detail::require(r.f0g1_amplitude >= 0.0, "reset.f0g1_amplitude", "must be >= 0 (0 = calibrated)");
        detail::require(r.f0g1_ramp >= 0.0 && 2.0 * r.f0g1_ramp < r.f0g1_duration, "reset.f0g1_ramp",
                        "must satisfy 0 <= 2 ramp < f0g1_duration");
        detail::require(r.idle_after >= 0.0, "reset.idle_after", "must be >= 0");
    }
    {
        auto s = section("awg");
        s.number("ghz_per_volt", cfg.awg.ghz_per_volt);
        s.number("saturation", cfg.awg.saturation);
        s.reject_unknown();
        detail::require(cfg.awg.ghz_per_volt > 0.0, "awg.ghz_per_volt", "must be > 0");
        detail::require(cfg.awg.saturation >= 0.0, "awg.saturation", "must be >= 0 (0 = linear)");
    }
    {
        auto s = section("spectroscopy");
        auto& c = cfg.spectroscopy;
        s.list("amplitudes", c.amplitudes);
        s.list("voltages", c.voltages);
        s.number("freq_start", c.freq_start);
        s.number("freq_stop", c.freq_stop);
        s.number("freq_step", c.freq_step);
        s.number("probe_duration", c.probe_duration);
        s.number("ramp", c.ramp);
        s.reject_unknown();
        detail::require(!c.amplitudes.empty() || !c.voltages.empty(), "spectroscopy.amplitudes",
                        "must not be empty");
        detail::require(c.freq_step > 0.0, "spectroscopy.freq_step", "must be > 0");
        detail::require(c.freq_stop > c.freq_start, "spectroscopy.freq_stop", "must exceed freq_start");
        detail::require((c.freq_stop - c.freq_start) / c.freq_step <= 100000.0, "spectroscopy.freq_step",
                        "grid larger than 100000 points");
        detail::require(c.ramp >= 0.0, "spectroscopy.ramp", "must be >= 0");
        detail::require(c.probe_duration > 2.0 * c.ramp, "spectroscopy.probe_duration",
                        "must exceed twice the ramp");
    }
    {
        auto s = section("rabi");
        auto& c = cfg.rabi;
        s.list("amplitudes", c.amplitudes);
        s.list("voltages", c.voltages);
        s.number("detuning", c.detuning);
        s.number("t_start", c.t_start);
        s.number("t_stop", c.t_stop);
        s.number("t_step", c.t_step);
        s.number("ramp", c.ramp);
        s.reject_unknown();
        for (double a : c.amplitudes) detail::require(a > 0.0, "rabi.amplitudes", "entries must be > 0");
        detail::require(c.ramp >= 0.0, "rabi.ramp", "must be >= 0");
        detail::require(c.t_start >= 2.0 * c.ramp, "rabi.t_start", "must be at least twice the ramp");
        detail::require(c.t_step > 0.0, "rabi.t_step", "must be > 0");
        detail::require(c.t_stop >= c.t_start + 9.0 * c.t_step, "rabi.t_stop",
                        "scan must contain at least 10 durations");
    }
    {
        auto s = section("reset-trace");
        s.number("mismatch", cfg.reset_trace.mismatch);
        s.reject_unknown();
    }
    {
        auto s = section("trigger-scan");
        auto& c = cfg.trigger;
        s.list("rates", c.rates);
        s.choice("mode", c.mode,
                 std::map<std::string, TriggerMode>{{"compare", TriggerMode::compare},
                                                    {"reset", TriggerMode::reset},
                                                    {"no-reset", TriggerMode::no_reset}});
        s.integer("rounds", c.scan.rounds);
        s.number("tolerance", c.scan.tolerance);
        s.number("readout_duration", c.scan.readout_duration);
        s.number("x_ge_duration", c.scan.x_ge_duration);
        s.number("x_ge_over_rotation", c.scan.x_ge_over_rotation);
        s.reject_unknown();
        detail::require(!c.rates.empty(), "trigger-scan.rates", "must not be empty");
        for (double r : c.rates) detail::require(r > 0.0, "trigger-scan.rates", "entries must be > 0");
        detail::require(c.scan.rounds >= 1, "trigger-scan.rounds", "must be >= 1");
        detail::require(c.scan.tolerance >= 0.0, "trigger-scan.tolerance", "must be >= 0");
        detail::require(c.scan.readout_duration >= 0.0, "trigger-scan.readout_duration", "must be >= 0");
        detail::require(c.scan.x_ge_duration >= 0.0, "trigger-scan.x_ge_duration", "must be >= 0");
    }
    {
        auto s = section("readout-demo");
        auto& c = cfg.readout;
        s.number("separation", c.separation);
        s.number("sigma", c.sigma);
        s.count("shots", c.shots);
        s.count("repetitions", c.repetitions);
        s.number("rate_khz", c.rate_khz);
        s.reject_unknown();
        detail::require(c.separation > 0.0, "readout-demo.separation", "must be > 0");
        detail::require(c.sigma > 0.0, "readout-demo.sigma", "must be > 0");
        detail::require(c.shots > 0, "readout-demo.shots", "must be > 0");
        detail::require(c.rate_khz > 0.0, "readout-demo.rate_khz", "must be > 0");
    }
    {
        auto s = section("thermal-pop");
        s.integer("n_angles", cfg.thermal.n_angles);
        s.reject_unknown();
        detail::require(cfg.thermal.n_angles >= 5, "thermal-pop.n_angles", "must be >= 5");
    }
    cfg.trigger.scan.reset = cfg.reset;
    return cfg;
}

inline nlohmann::json to_json(const RunConfig& c) {
    using nlohmann::json;
    const auto& d = c.device;
    json out;
    out["experiment"] = to_string(c.experiment);
    out["seed"] = c.seed;
    out["output_dir"] = c.output_dir;
    out["device"] = {{"omega_ge", d.omega_ge},     {"alpha", d.alpha},
                     {"omega_r", d.omega_r},       {"g_coupling", d.g_coupling},
                     {"kappa_r", d.kappa_r},       {"t1_eg", d.t1_eg},
                     {"t1_fe", d.t1_fe},           {"t1_hf", d.t1_hf},
                     {"p_thermal_e", d.p_thermal_e},
                     {"convention", d.convention == FrequencyConvention::dressed ? "dressed" : "bare"},
                     {"lifetimes", d.lifetimes == LifetimeConvention::measured ? "measured" : "intrinsic"}};
    out["hilbert"] = {{"n_transmon", c.hilbert.n_transmon}, {"n_resonator", c.hilbert.n_resonator}};
    out["integrator"] = {{"dt", c.integrator.dt},
                         {"sample_every", c.integrator.sample_every},
                         {"convergence_check", c.integrator.convergence_check}};
    const auto& r = c.reset;
    out["reset"] = {{"ef_pulse_duration", r.ef_pulse_duration},
                    {"f0g1_amplitude", r.f0g1_amplitude},
                    {"f0g1_duration", r.f0g1_duration},
                    {"f0g1_ramp", r.f0g1_ramp},
                    {"f0g1_stark_offset", r.auto_stark ? json("auto") : json(r.f0g1_stark_offset)},
                    {"f0g1_freq_offset", r.f0g1_freq_offset},
                    {"use_ideal_x", r.use_ideal_x},
                    {"x_over_rotation", r.x_over_rotation},
                    {"idle_after", r.idle_after}};
    out["awg"] = {{"ghz_per_volt", c.awg.ghz_per_volt}, {"saturation", c.awg.saturation}};
    switch (c.experiment) {
        case ExperimentKind::spectroscopy: {
            const auto& s = c.spectroscopy;
            out["spectroscopy"] = {{"amplitudes", s.amplitudes}, {"voltages", s.voltages},
                                   {"freq_start", s.freq_start}, {"freq_stop", s.freq_stop},
                                   {"freq_step", s.freq_step},   {"probe_duration", s.probe_duration},
                                   {"ramp", s.ramp}};
            break;
        }
        case ExperimentKind::rabi: {
            const auto& s = c.rabi;
            out["rabi"] = {{"amplitudes", s.amplitudes}, {"voltages", s.voltages}, {"detuning", s.detuning},
                           {"t_start", s.t_start},       {"t_stop", s.t_stop},     {"t_step", s.t_step},
                           {"ramp", s.ramp}};
            break;
        }
        case ExperimentKind::reset_trace:
            out["reset-trace"] = {{"mismatch", c.reset_trace.mismatch}};
            break;
        case ExperimentKind::trigger_scan: {
            const auto& s = c.trigger;
            out["trigger-scan"] = {{"rates", s.rates},
                                   {"mode", to_string(s.mode)},
                                   {"rounds", s.scan.rounds},
                                   {"tolerance", s.scan.tolerance},
                                   {"readout_duration", s.scan.readout_duration},
                                   {"x_ge_duration", s.scan.x_ge_duration},
                                   {"x_ge_over_rotation", s.scan.x_ge_over_rotation}};
            break;
        }
        case ExperimentKind::readout_demo: {
            const auto& s = c.readout;
            out["readout-demo"] = {{"separation", s.separation}, {"sigma", s.sigma}, {"shots", s.shots},
                                   {"repetitions", s.repetitions}, {"rate_khz", s.rate_khz}};
            break;
        }
        case ExperimentKind::thermal_pop:
            out["thermal-pop"] = {{"n_angles", c.thermal.n_angles}};
            break;
    }
    return out;
}

}  // namespace resetsim
