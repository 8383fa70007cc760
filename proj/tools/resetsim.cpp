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

// resetsim: command-line front-end for the virtual reset experiments.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "resetsim/config.hpp"
#include "resetsim/errors.hpp"
#include "resetsim/runner.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw resetsim::ConfigError("--config: cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Options {
    std::string config;
    std::optional<long long> seed;
    std::optional<std::string> out;
    std::optional<double> dt;
};

resetsim::RunConfig load(const Options& opt, std::optional<resetsim::ExperimentKind> kind) {
    const std::string text = opt.config.empty() ? std::string() : read_file(opt.config);
    resetsim::RunConfig cfg = resetsim::parse_config(text, kind);
    if (opt.seed) {
        if (*opt.seed < 0) throw resetsim::ConfigError("--seed: must be >= 0");
        cfg.seed = static_cast<std::uint64_t>(*opt.seed);
    }
    if (opt.dt) {
        if (!(*opt.dt > 0.0)) throw resetsim::ConfigError("--dt: must be > 0");
        cfg.integrator.dt = *opt.dt;
    }
    if (opt.out) {
        cfg.output_dir = *opt.out;
    } else if (cfg.output_dir.empty()) {
        const char* env = std::getenv("RESETSIM_OUT");
        cfg.output_dir = env && *env ? env : ".";
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pulsed qubit-reset simulator: virtual spectroscopy, Rabi, reset and readout experiments"};
    app.require_subcommand(1);
    Options opt;
    auto add_common = [&opt](CLI::App* sub) {
        sub->add_option("--config", opt.config, "INI configuration file");
        sub->add_option("--seed", opt.seed, "master seed for the readout emulation");
        sub->add_option("--out", opt.out, "output directory (default: config output_dir, or $RESETSIM_OUT)");
        sub->add_option("--dt", opt.dt, "integrator step in ns");
    };
    struct Command {
        const char* name;
        const char* help;
        std::optional<resetsim::ExperimentKind> kind;
    };
    const Command commands[] = {
        {"spectroscopy", "f0g1 spectroscopy map and Stark-shift fit", resetsim::ExperimentKind::spectroscopy},
        {"rabi", "time-resolved f0-g1 Rabi scans", resetsim::ExperimentKind::rabi},
        {"reset-trace", "pulsed reset against free decay", resetsim::ExperimentKind::reset_trace},
        {"trigger-scan", "steady-state population versus trigger rate", resetsim::ExperimentKind::trigger_scan},
        {"readout-demo", "IQ readout emulation and classifier", resetsim::ExperimentKind::readout_demo},
        {"thermal-pop", "thermal population from e-f Rabi amplitudes", resetsim::ExperimentKind::thermal_pop},
        {"validate", "parse and check a configuration only", std::nullopt},
    };
    for (const auto& c : commands) add_common(app.add_subcommand(c.name, c.help));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : resetsim::exit_code(resetsim::ErrorCategory::config);
    }

    try {
        for (const auto& c : commands) {
            if (!app.got_subcommand(c.name)) continue;
            if (!c.kind) {
                if (opt.config.empty()) throw resetsim::ConfigError("validate: --config is required");
                const resetsim::RunConfig cfg = load(opt, std::nullopt);
                std::cout << "config ok: experiment " << resetsim::to_string(cfg.experiment) << '\n';
                return 0;
            }
            const resetsim::RunConfig cfg = load(opt, c.kind);
            const resetsim::RunOutput out = resetsim::execute(cfg);
            const auto files = resetsim::write_outputs(out, cfg.output_dir, resetsim::timestamp_now());
            std::cout << out.line << '\n' << "wrote " << files.csv.string() << " and " << files.json.string() << '\n';
            return 0;
        }
    } catch (const resetsim::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return resetsim::exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
