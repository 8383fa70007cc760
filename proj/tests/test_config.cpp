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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "resetsim/config.hpp"

namespace resetsim {
namespace {

std::string error_of(const std::string& text, std::optional<ExperimentKind> fallback = std::nullopt) {
    try {
        parse_config(text, fallback);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

TEST(Config, DefaultsWithExperimentBlockOnly) {
    const RunConfig c = parse_config("[reset-trace]\n");
    EXPECT_EQ(c.experiment, ExperimentKind::reset_trace);
    EXPECT_EQ(c.seed, 1u);
    EXPECT_TRUE(c.output_dir.empty());
    EXPECT_EQ(c.device.omega_ge, DeviceParams{}.omega_ge);
    EXPECT_EQ(c.hilbert, HilbertSpec{});
    EXPECT_TRUE(c.reset.auto_stark);
}

TEST(Config, ReadsEveryBlock) {
    const RunConfig c = parse_config(R"(
seed = 42
output_dir = out

[device]
omega_ge = 4.9
alpha = -0.32
t1_fe = 30
convention = bare

[hilbert]
n_transmon = 5
n_resonator = 4

[integrator]
dt = 0.002
convergence_check = true

[reset]
f0g1_stark_offset = -0.012
x_over_rotation = 0.01

[trigger-scan]
rates = 1, 10, 90
mode = reset
rounds = 50
)");
    EXPECT_EQ(c.experiment, ExperimentKind::trigger_scan);
    EXPECT_EQ(c.seed, 42u);
    EXPECT_EQ(c.output_dir, "out");
    EXPECT_EQ(c.device.omega_ge, 4.9);
    EXPECT_EQ(c.device.alpha, -0.32);
    EXPECT_NEAR(c.device.t1_hf, 30.0 / std::sqrt(3.0), 1e-12);
    EXPECT_EQ(c.device.convention, FrequencyConvention::bare);
    EXPECT_EQ(c.hilbert.n_transmon, 5);
    EXPECT_EQ(c.hilbert.n_resonator, 4);
    EXPECT_EQ(c.integrator.dt, 0.002);
    EXPECT_TRUE(c.integrator.convergence_check);
    EXPECT_FALSE(c.reset.auto_stark);
    EXPECT_EQ(c.reset.f0g1_stark_offset, -0.012);
    EXPECT_EQ(c.trigger.rates, (std::vector<double>{1, 10, 90}));
    EXPECT_EQ(c.trigger.mode, TriggerMode::reset);
    EXPECT_EQ(c.trigger.scan.rounds, 50);
    EXPECT_EQ(c.trigger.scan.reset.x_over_rotation, 0.01);
}

TEST(Config, ErrorsNameTheKey) {
    EXPECT_NE(error_of("[device]\nomega_ge = fast\n[rabi]\n").find("device.omega_ge"), std::string::npos);
    EXPECT_NE(error_of("[device]\nalpha = 0.33\n[rabi]\n").find("alpha"), std::string::npos);
    EXPECT_NE(error_of("[hilbert]\nn_transmon = 2\n[rabi]\n").find("hilbert.n_transmon"), std::string::npos);
    EXPECT_NE(error_of("[integrator]\ndt = 0\n[rabi]\n").find("integrator.dt"), std::string::npos);
    EXPECT_NE(error_of("[reset]\nf0g1_ramp = 100\n[rabi]\n").find("reset.f0g1_ramp"), std::string::npos);
    EXPECT_NE(error_of("[trigger-scan]\nrates = 1, -2\n").find("trigger-scan.rates"), std::string::npos);
    EXPECT_NE(error_of("[trigger-scan]\nmode = sometimes\n").find("trigger-scan.mode"), std::string::npos);
    EXPECT_NE(error_of("seed = -3\n[rabi]\n").find("seed"), std::string::npos);
}

TEST(Config, RejectsUnknownKeysAndSections) {
    EXPECT_NE(error_of("[device]\nomega_qe = 4.9\n[rabi]\n").find("unknown key"), std::string::npos);
    EXPECT_NE(error_of("colour = red\n[rabi]\n").find("unknown key"), std::string::npos);
    EXPECT_NE(error_of("[calibration]\nx = 1\n[rabi]\n").find("unknown section"), std::string::npos);
}

TEST(Config, ExactlyOneExperiment) {
    EXPECT_NE(error_of("[rabi]\n[spectroscopy]\n").find("only one experiment"), std::string::npos);
    EXPECT_NE(error_of("[device]\n").find("missing experiment"), std::string::npos);
}

TEST(Config, FallbackExperiment) {
    EXPECT_EQ(parse_config("[device]\n", ExperimentKind::thermal_pop).experiment, ExperimentKind::thermal_pop);
    EXPECT_EQ(parse_config("[rabi]\n", ExperimentKind::rabi).experiment, ExperimentKind::rabi);
    EXPECT_NE(error_of("[rabi]\n", ExperimentKind::spectroscopy).find("command asked for"), std::string::npos);
}

TEST(Config, EmptySectionsAreSections) {
    const RunConfig c = parse_config("[device]\n[hilbert]\n[thermal-pop]\n");
    EXPECT_EQ(c.experiment, ExperimentKind::thermal_pop);
}

TEST(Config, SyntaxErrorReportsLine) {
    EXPECT_NE(error_of("[rabi\n").find("line"), std::string::npos);
}

TEST(Config, JsonRoundTripOfAutoStark) {
    const auto j = to_json(parse_config("[reset-trace]\nmismatch = 29e-6\n"));
    EXPECT_EQ(j.at("experiment"), "reset-trace");
    EXPECT_EQ(j.at("reset").at("f0g1_stark_offset"), "auto");
}

TEST(Config, ShippedConfigsParse) {
    int seen = 0;
    for (const auto& entry : std::filesystem::directory_iterator(RESETSIM_CONFIG_DIR)) {
        if (entry.path().extension() != ".ini") continue;
        std::ifstream in(entry.path());
        std::stringstream text;
        text << in.rdbuf();
        EXPECT_NO_THROW(parse_config(text.str())) << entry.path();
        ++seen;
    }
    EXPECT_EQ(seen, 6);
}

}  // namespace
}  // namespace resetsim
