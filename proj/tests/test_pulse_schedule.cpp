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

#include <cmath>
#include <numbers>

#include "resetsim/pulse_schedule.hpp"

namespace resetsim {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(RotationAngle, SquareAreaCondition) {
    const double duration = 40.0;
    const Pulse p{Envelope::square(duration), 1.0 / (2.0 * duration), 0.0, Carrier::ge, 0.0, 0.0};
    EXPECT_NEAR(rotation_angle(p), kPi, 1e-12);
}

TEST(RotationAngle, ZeroAmplitude) {
    EXPECT_EQ(rotation_angle(Pulse{Envelope::square(10.0), 0.0}), 0.0);
}

TEST(RotationAngle, TruncatedGaussianArea) {
    const double duration = 75.0;
    const double sigma = duration / 4.0;
    const double amp = 0.013;
    const Pulse p{Envelope::gaussian(duration, sigma), amp, 0.0, Carrier::ef, 0.0, 0.0};
    const double exact = 2.0 * kPi * amp * sigma * std::sqrt(2.0 * kPi) * std::erf(std::sqrt(2.0));
    EXPECT_NEAR(rotation_angle(p) / exact, 1.0, 1e-9);
}

TEST(RotationAngle, LinearInAmplitude) {
    for (const Envelope& env : {Envelope::square(120.0, 5.0), Envelope::gaussian(60.0, 15.0)}) {
        const double base = rotation_angle(Pulse{env, 0.01});
        for (double k : {0.5, 2.0, 7.0}) {
            EXPECT_NEAR(rotation_angle(Pulse{env, 0.01 * k}), k * base, 1e-12 * k * base);
        }
    }
}

TEST(RotationAmplitude, InvertsAngleForBothSubspaces) {
    const Envelope env = Envelope::gaussian(75.0, 18.75);
    const double a_ge = rotation_amplitude(env, RotationSubspace::ge, kPi);
    const double a_ef = rotation_amplitude(env, RotationSubspace::ef, kPi);
    EXPECT_NEAR(rotation_angle(Pulse{env, a_ge}), kPi, 1e-12);
    EXPECT_NEAR(a_ef * std::sqrt(2.0), a_ge, 1e-15);
}

TEST(SampleEnvelope, SquareMidpointAndOutside) {
    Pulse p{Envelope::square(100.0), 0.2, 0.6, Carrier::f0g1, 0.0, 50.0};
    EXPECT_NEAR(std::abs(sample_envelope(p, 100.0) - std::polar(0.2, 0.6)), 0.0, 1e-15);
    EXPECT_EQ(sample_envelope(p, 49.999), cplx(0.0));
    EXPECT_EQ(sample_envelope(p, 150.001), cplx(0.0));
}

TEST(SampleEnvelope, GaussianPeak) {
    Pulse p{Envelope::gaussian(80.0, 20.0), 0.05, -1.0, Carrier::ef, 0.0, 10.0};
    EXPECT_NEAR(std::abs(sample_envelope(p, 50.0) - std::polar(0.05, -1.0)), 0.0, 1e-15);
}

TEST(SampleEnvelope, ZeroOutsideSupportForManyPulses) {
    Schedule s;
    s.append(Pulse{Envelope::square(30.0, 3.0), 0.1});
    s.append(Idle{20.0});
    s.append(Pulse{Envelope::gaussian(40.0, 10.0), 0.2});
    for (const auto& seg : s.segments()) {
        const auto* p = std::get_if<Pulse>(&seg);
        if (!p) continue;
        for (double t = -10.0; t < 120.0; t += 0.37) {
            if (t < p->start || t > p->end()) EXPECT_EQ(sample_envelope(*p, t), cplx(0.0));
        }
    }
}

TEST(SampleEnvelope, LinearRamps) {
    const Envelope env = Envelope::square(120.0, 5.0);
    EXPECT_DOUBLE_EQ(env.shape(2.5), 0.5);
    EXPECT_DOUBLE_EQ(env.shape(60.0), 1.0);
    EXPECT_DOUBLE_EQ(env.shape(118.0), 0.4);
    EXPECT_NEAR(env.area(), 115.0, 1e-12);
}

TEST(Envelope, Pieces) {
    EXPECT_EQ(Envelope::square(10.0).pieces().size(), 1u);
    const auto p = Envelope::square(120.0, 5.0).pieces();
    ASSERT_EQ(p.size(), 3u);
    EXPECT_FALSE(p[0].constant);
    EXPECT_TRUE(p[1].constant);
    EXPECT_EQ(p[1].begin, 5.0);
    EXPECT_EQ(p[2].end, 120.0);
}

TEST(Envelope, Validation) {
    EXPECT_THROW(Envelope::square(0.0).validate(), InvalidArgument);
    EXPECT_THROW(Envelope::square(10.0, 6.0).validate(), InvalidArgument);
    EXPECT_THROW(Envelope::gaussian(10.0, 3.0).validate(), InvalidArgument);
    EXPECT_NO_THROW(Envelope::gaussian(12.0, 3.0).validate());
}

TEST(Schedule, TimesIncreaseAndDurationsAdd) {
    Schedule s;
    s.append(IdealRotation{RotationSubspace::ef, kPi, 0.0, 0.0, 75.0});
    s.append(Pulse{Envelope::square(120.0), 0.6});
    s.append(Idle{2000.0});
    double prev = -1.0;
    double sum = 0.0;
    for (const auto& seg : s.segments()) {
        EXPECT_GT(segment_start(seg), prev);
        prev = segment_start(seg);
        sum += segment_duration(seg);
    }
    EXPECT_DOUBLE_EQ(s.duration(), sum);
    EXPECT_NO_THROW(s.validate());
}

TEST(Schedule, RejectsOverlapAndFillsGaps) {
    Schedule s;
    s.append(Idle{10.0});
    Pulse p{Envelope::square(5.0), 0.1};
    p.start = 5.0;
    EXPECT_THROW(s.insert_at(p), InvalidArgument);
    p.start = 20.0;
    s.insert_at(p);
    ASSERT_EQ(s.segments().size(), 3u);
    EXPECT_DOUBLE_EQ(segment_duration(s.segments()[1]), 10.0);
    EXPECT_DOUBLE_EQ(s.end(), 25.0);
}

TEST(Schedule, RejectsNegativeAmplitude) {
    Schedule s;
    EXPECT_THROW(s.append(Pulse{Envelope::square(5.0), -0.1}), InvalidArgument);
}

TEST(Schedule, DescribeListsEverySegment) {
    ResetConfig cfg;
    cfg.f0g1_amplitude = 0.65;
    const Schedule s = reset_sequence(DeviceParams{}, cfg);
    const auto lines = s.describe();
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0].rfind("rotation subspace=ef", 0), 0u);
    EXPECT_EQ(lines[1].rfind("pulse carrier=f0g1", 0), 0u);
    EXPECT_EQ(lines[2].rfind("idle", 0), 0u);
}

TEST(ResetSequence, DefaultBookkeepingDuration) {
    ResetConfig cfg;
    cfg.f0g1_amplitude = 0.65;
    const Schedule s = reset_sequence(DeviceParams{}, cfg);
    EXPECT_DOUBLE_EQ(s.duration(), 75.0 + 120.0 + 2000.0);
}

TEST(ResetSequence, IdealShelvingIsExactlyPi) {
    ResetConfig cfg;
    cfg.f0g1_amplitude = 0.65;
    const Schedule s = reset_sequence(DeviceParams{}, cfg);
    const auto& rot = std::get<IdealRotation>(s.segments()[0]);
    EXPECT_EQ(rot.effective_angle(), kPi);
    EXPECT_EQ(rot.subspace, RotationSubspace::ef);
}

TEST(ResetSequence, LongerTransferVariant) {
    ResetConfig cfg;
    cfg.f0g1_amplitude = 0.5;
    cfg.f0g1_duration = 155.0;
    const Schedule s = reset_sequence(DeviceParams{}, cfg);
    EXPECT_DOUBLE_EQ(segment_duration(s.segments()[1]), 155.0);
    EXPECT_DOUBLE_EQ(s.duration(), 75.0 + 155.0 + 2000.0);
}

TEST(ResetSequence, ShapedShelvingPulse) {
    ResetConfig cfg;
    cfg.f0g1_amplitude = 0.65;
    cfg.use_ideal_x = false;
    const Schedule s = reset_sequence(DeviceParams{}, cfg);
    const auto& x = std::get<Pulse>(s.segments()[0]);
    EXPECT_EQ(x.carrier, Carrier::ef);
    EXPECT_NEAR(rotation_angle(x) * std::sqrt(2.0), kPi, 1e-12);
}

TEST(ResetSequence, CarrierOffsets) {
    ResetConfig cfg;
    cfg.f0g1_amplitude = 0.65;
    cfg.f0g1_stark_offset = -0.003;
    cfg.f0g1_freq_offset = 29e-6;
    const DeviceParams p;
    const Schedule s = reset_sequence(p, cfg);
    const auto& f = std::get<Pulse>(s.segments()[1]);
    EXPECT_NEAR(f.frame_frequency(p), 2.640 - 0.003 + 29e-6, 1e-12);
}

TEST(ResetSequence, InvalidConfig) {
    ResetConfig cfg;
    cfg.f0g1_duration = -1.0;
    EXPECT_THROW(reset_sequence(DeviceParams{}, cfg), InvalidArgument);
    cfg = ResetConfig{};
    cfg.idle_after = -5.0;
    EXPECT_THROW(reset_sequence(DeviceParams{}, cfg), InvalidArgument);
}

TEST(AwgMap, LinearAndSaturated) {
    const AwgMap linear;
    EXPECT_DOUBLE_EQ(linear.amplitude(0.54), 1.211 * 0.54);
    const AwgMap sat{1.0, 0.5};
    EXPECT_DOUBLE_EQ(sat.amplitude(0.01), 0.5 * std::tanh(0.02));
    EXPECT_LT(sat.amplitude(1.0), 0.5);
    EXPECT_LE(sat.amplitude(10.0), 0.5);
    EXPECT_NEAR(sat.amplitude(10.0), 0.5, 1e-6);
}

}  // namespace
}  // namespace resetsim
