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
#include <regex>
#include <sstream>
#include <string>

#include "resetsim/runner.hpp"

namespace resetsim {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("resetsim_runner_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

TEST(Timestamp, CompactUtcForm) {
    EXPECT_TRUE(std::regex_match(timestamp_now(), std::regex(R"(\d{8}T\d{6}Z)")));
}

TEST(ExitCode, DistinctPerCategory) {
    EXPECT_EQ(exit_code(ErrorCategory::config), 12);
    EXPECT_NE(exit_code(ErrorCategory::timing), exit_code(ErrorCategory::convergence));
}

using WriteOutputs = TempDir;

TEST_F(WriteOutputs, NamesAndCollisions) {
    RunOutput out;
    out.experiment = "thermal-pop";
    out.csv = "a,b\n1,2\n";
    out.extra_csv.emplace_back("side", "c\n3\n");
    out.summary["results"] = {{"x", 1}};
    const WrittenFiles first = write_outputs(out, dir_, "20260101T000000Z");
    EXPECT_EQ(first.csv.filename(), "thermal-pop_20260101T000000Z.csv");
    EXPECT_EQ(first.json.filename(), "thermal-pop_20260101T000000Z.json");
    ASSERT_EQ(first.extra.size(), 1u);
    EXPECT_EQ(first.extra[0].filename(), "thermal-pop_20260101T000000Z_side.csv");
    EXPECT_EQ(slurp(first.csv), out.csv);
    const auto j = nlohmann::json::parse(slurp(first.json));
    EXPECT_EQ(j.at("timestamp"), "20260101T000000Z");
    EXPECT_EQ(j.at("files").at("csv"), "thermal-pop_20260101T000000Z.csv");
    EXPECT_EQ(j.at("results").at("x"), 1);

    const WrittenFiles second = write_outputs(out, dir_, "20260101T000000Z");
    EXPECT_EQ(second.csv.filename(), "thermal-pop_20260101T000000Z_2.csv");
    EXPECT_TRUE(fs::exists(first.csv));
}

TEST(Execute, ResetTraceCsvHeaderAndSummary) {
    const RunConfig cfg = parse_config("[reset-trace]\n");
    const RunOutput out = execute(cfg);
    EXPECT_EQ(out.experiment, "reset-trace");
    EXPECT_EQ(first_line(out.csv), "t_ns,p_g,p_e,p_f,p_h,r0,r1,r2,trace_err");
    ASSERT_EQ(out.extra_csv.size(), 1u);
    EXPECT_EQ(first_line(out.extra_csv[0].second), "t_ns,p_g,p_e,p_f,p_h,r0,r1,r2,trace_err");
    EXPECT_NEAR(out.summary.at("results").at("residual").get<double>(), 0.004, 0.0015);
    EXPECT_EQ(out.summary.at("config").at("experiment"), "reset-trace");
    EXPECT_NE(out.line.find("residual"), std::string::npos);
}

TEST(Execute, TriggerScanColumns) {
    const RunOutput out = execute(parse_config("[trigger-scan]\nrates = 10\nmode = no-reset\n"));
    EXPECT_EQ(first_line(out.csv).substr(0, 9), "rate_khz,");
    EXPECT_EQ(std::count(out.csv.begin(), out.csv.end(), '\n'), 2);
}

TEST(Execute, ThermalPopColumns) {
    const RunOutput out = execute(parse_config("[thermal-pop]\n"));
    EXPECT_EQ(first_line(out.csv), "angle_rad,pe_thermal,pe_prepared");
    EXPECT_NEAR(out.summary.at("results").at("estimate").get<double>(), 0.015, 0.001);
}

TEST(Execute, ReadoutDemoIsSeedDeterministic) {
    const std::string text = "seed = 99\n[readout-demo]\nshots = 400\nrepetitions = 3\n";
    const RunOutput a = execute(parse_config(text));
    const RunOutput b = execute(parse_config(text));
    const RunOutput c = execute(parse_config("seed = 100\n[readout-demo]\nshots = 400\nrepetitions = 3\n"));
    EXPECT_EQ(first_line(a.csv), "set,label,i,q");
    EXPECT_EQ(a.csv, b.csv);
    EXPECT_EQ(a.summary.at("results").dump(), b.summary.at("results").dump());
    EXPECT_NE(a.csv, c.csv);
}

}  // namespace
}  // namespace resetsim
