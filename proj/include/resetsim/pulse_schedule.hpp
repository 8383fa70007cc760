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

// Pulse envelopes and schedules. Times are in ns, amplitudes in GHz
// (ordinary frequency; the Hamiltonian applies the 2*pi).

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "resetsim/device_model.hpp"
#include "resetsim/errors.hpp"

namespace resetsim {

enum class EnvelopeKind { square, gaussian };

/// A smooth stretch of an envelope, in pulse-local time.
struct EnvelopePiece {
    double begin;
    double end;
    bool constant;
};

struct Envelope {
    EnvelopeKind kind = EnvelopeKind::square;
    double duration = 0.0;  // ns
    double sigma = 0.0;     // ns, gaussian only; truncated at +-2 sigma around the centre
    double ramp = 0.0;      // ns, linear rise and fall of a square pulse

    static Envelope square(double duration, double ramp = 0.0) {
        return {EnvelopeKind::square, duration, 0.0, ramp};
    }
    static Envelope gaussian(double duration, double sigma) {
        return {EnvelopeKind::gaussian, duration, sigma, 0.0};
    }

    void validate() const {
        if (!(duration > 0.0)) throw InvalidArgument("envelope duration must be positive");
        if (kind == EnvelopeKind::gaussian) {
            if (!(sigma > 0.0) || 4.0 * sigma > duration * (1.0 + 1e-12)) {
                throw InvalidArgument("gaussian envelope needs 0 < 4 sigma <= duration");
            }
        } else if (ramp < 0.0 || 2.0 * ramp > duration * (1.0 + 1e-12)) {
            throw InvalidArgument("square envelope ramps must satisfy 0 <= 2 ramp <= duration");
        }
    }

    /// Unit-peak shape at pulse-local time tau; 0 outside [0, duration].
    [[nodiscard]] double shape(double tau) const {
        if (tau < 0.0 || tau > duration) return 0.0;
        if (kind == EnvelopeKind::gaussian) {
            const double x = tau - 0.5 * duration;
            if (std::abs(x) > 2.0 * sigma) return 0.0;
            return std::exp(-x * x / (2.0 * sigma * sigma));
        }
        if (ramp > 0.0) {
            if (tau < ramp) return tau / ramp;
            if (tau > duration - ramp) return (duration - tau) / ramp;
        }
        return 1.0;
    }

    [[nodiscard]] std::vector<EnvelopePiece> pieces() const {
        if (kind == EnvelopeKind::gaussian) {
            const double c = 0.5 * duration;
            std::vector<EnvelopePiece> out;
            if (c - 2.0 * sigma > 0.0) out.push_back({0.0, c - 2.0 * sigma, true});
            out.push_back({std::max(0.0, c - 2.0 * sigma), std::min(duration, c + 2.0 * sigma), false});
            if (c + 2.0 * sigma < duration) out.push_back({c + 2.0 * sigma, duration, true});
            return out;
        }
        if (ramp <= 0.0) return {{0.0, duration, true}};
        std::vector<EnvelopePiece> out{{0.0, ramp, false}};
        if (duration - 2.0 * ramp > 0.0) out.push_back({ramp, duration - ramp, true});
        out.push_back({duration - ramp, duration, false});
        return out;
    }

    /// Integral of the unit-peak shape over the pulse (composite Simpson per piece).
    [[nodiscard]] double area() const {
        double total = 0.0;
        for (const auto& piece : pieces()) {
            constexpr int n = 4096;
            const double h = (piece.end - piece.begin) / n;
            double s = shape(piece.begin) + shape(piece.end);
            for (int k = 1; k < n; ++k) {
                s += (k % 2 == 1 ? 4.0 : 2.0) * shape(piece.begin + k * h);
            }
            total += s * h / 3.0;
        }
        return total;
    }
};

enum class Carrier { ge, ef, f0g1 };
enum class RotationSubspace { ge, ef };

inline const char* to_string(Carrier c) {
    switch (c) {
        case Carrier::ge: return "ge";
        case Carrier::ef: return "ef";
        case Carrier::f0g1: return "f0g1";
    }
    return "?";
}

inline const char* to_string(RotationSubspace s) { return s == RotationSubspace::ge ? "ge" : "ef"; }

/// Nominal (undriven) carrier frequency in GHz.
inline double carrier_frequency(const DeviceParams& p, Carrier c) {
    const auto d = derived_frequencies(p);
    switch (c) {
        case Carrier::ge: return p.omega_ge;
        case Carrier::ef: return d.omega_ef;
        case Carrier::f0g1: return d.omega_f0g1;
    }
    return p.omega_ge;
}

struct Pulse {
    Envelope envelope;
    double amplitude = 0.0;    // GHz, peak Omega_0
    double phase = 0.0;        // rad
    Carrier carrier = Carrier::f0g1;
    double freq_offset = 0.0;  // GHz, added to the nominal carrier
    double start = 0.0;        // ns

    [[nodiscard]] double duration() const { return envelope.duration; }
    [[nodiscard]] double end() const { return start + envelope.duration; }
    [[nodiscard]] double frame_frequency(const DeviceParams& p) const {
        return carrier_frequency(p, carrier) + freq_offset;
    }
};

/// Instantaneous rotation exp(-i angle/2 (cos phase sx + sin phase sy)) on a
/// two-level transmon subspace. It takes no time in the dynamics; the
/// bookkeeping duration only advances the schedule clock.
struct IdealRotation {
    RotationSubspace subspace = RotationSubspace::ef;
    double angle = std::numbers::pi;
    double phase = 0.0;
    double over_rotation_error = 0.0;  // fractional
    double bookkeeping_duration = 0.0; // ns
    double start = 0.0;

    [[nodiscard]] double effective_angle() const { return angle * (1.0 + over_rotation_error); }
    [[nodiscard]] double duration() const { return bookkeeping_duration; }
};

struct Idle {
    double duration = 0.0;
    double start = 0.0;
};

using Segment = std::variant<Pulse, IdealRotation, Idle>;

inline double segment_start(const Segment& s) {
    return std::visit([](const auto& v) { return v.start; }, s);
}

inline double segment_duration(const Segment& s) {
    return std::visit(
        [](const auto& v) -> double {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Idle>) {
                return v.duration;
            } else {
                return v.duration();
            }
        },
        s);
}

/// Time-ordered, non-overlapping list of segments.
class Schedule {
public:
    /// Appends a segment starting where the schedule currently ends.
    Schedule& append(Segment seg) {
        const double t = end();
        std::visit([t](auto& v) { v.start = t; }, seg);
        check_segment(seg);
        segments_.push_back(std::move(seg));
        return *this;
    }

    /// Inserts a segment at its own start time; it must not overlap the tail.
    Schedule& insert_at(Segment seg) {
        check_segment(seg);
        if (segment_start(seg) < end() - 1e-9) {
            throw InvalidArgument("schedule segments must be time-ordered and non-overlapping");
        }
        if (segment_start(seg) > end() + 1e-9) {
            segments_.push_back(Idle{segment_start(seg) - end(), end()});
        }
        segments_.push_back(std::move(seg));
        return *this;
    }

    [[nodiscard]] const std::vector<Segment>& segments() const { return segments_; }
    [[nodiscard]] bool empty() const { return segments_.empty(); }

    [[nodiscard]] double start() const {
        return segments_.empty() ? 0.0 : segment_start(segments_.front());
    }
    [[nodiscard]] double end() const {
        if (segments_.empty()) return origin_;
        return segment_start(segments_.back()) + segment_duration(segments_.back());
    }
    [[nodiscard]] double duration() const { return end() - start(); }

    /// Sets the clock origin of an empty schedule.
    void set_origin(double t) {
        if (!segments_.empty()) throw InvalidArgument("set_origin on a non-empty schedule");
        origin_ = t;
    }

    void validate() const {
        double t = start();
        for (const auto& seg : segments_) {
            check_segment(seg);
            if (std::abs(segment_start(seg) - t) > 1e-9) {
                throw InvalidArgument("schedule segments must be contiguous and time-ordered");
            }
            t += segment_duration(seg);
        }
    }

    /// One human-readable line per segment.
    [[nodiscard]] std::vector<std::string> describe() const {
        std::vector<std::string> out;
        for (const auto& seg : segments_) {
            std::ostringstream os;
            os.precision(10);
            std::visit(
                [&os](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, Pulse>) {
                        os << "pulse carrier=" << to_string(v.carrier) << " start=" << v.start
                           << "ns duration=" << v.duration() << "ns amplitude=" << v.amplitude
                           << "GHz phase=" << v.phase << " freq_offset=" << v.freq_offset
                           << "GHz envelope="
                           << (v.envelope.kind == EnvelopeKind::square ? "square" : "gaussian");
                        if (v.envelope.kind == EnvelopeKind::square) {
                            os << " ramp=" << v.envelope.ramp << "ns";
                        } else {
                            os << " sigma=" << v.envelope.sigma << "ns";
                        }
                    } else if constexpr (std::is_same_v<T, IdealRotation>) {
                        os << "rotation subspace=" << to_string(v.subspace) << " start=" << v.start
                           << "ns angle=" << v.angle << " phase=" << v.phase
                           << " over_rotation=" << v.over_rotation_error
                           << " bookkeeping=" << v.bookkeeping_duration << "ns";
                    } else {
                        os << "idle start=" << v.start << "ns duration=" << v.duration << "ns";
                    }
                },
                seg);
            out.push_back(os.str());
        }
        return out;
    }

private:
    static void check_segment(const Segment& seg) {
        std::visit(
            [](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Pulse>) {
                    v.envelope.validate();
                    if (!(v.amplitude >= 0.0)) throw InvalidArgument("pulse amplitude must be >= 0");
                } else if constexpr (std::is_same_v<T, IdealRotation>) {
                    if (!(v.bookkeeping_duration >= 0.0)) {
                        throw InvalidArgument("rotation bookkeeping duration must be >= 0");
                    }
                } else {
                    if (!(v.duration >= 0.0)) throw InvalidArgument("idle duration must be >= 0");
                }
            },
            seg);
    }

    std::vector<Segment> segments_;
    double origin_ = 0.0;
};

/// Rotation angle 2*pi * integral of Omega_0(t) dt, rad.
inline double rotation_angle(const Pulse& p) { return two_pi * p.amplitude * p.envelope.area(); }

/// Complex drive envelope Omega(t) = Omega_0(t) e^{i phi} at absolute time t.
inline cplx sample_envelope(const Pulse& p, double t) {
    const double tau = t - p.start;
    if (tau < 0.0 || tau > p.duration()) return {0.0, 0.0};
    return std::polar(p.amplitude * p.envelope.shape(tau), p.phase);
}

/// Peak amplitude that rotates `subspace` by `angle` with the given envelope.
/// The e-f matrix element of b' is sqrt(2), so e-f rotations need 1/sqrt(2)
/// of the g-e amplitude.
inline double rotation_amplitude(const Envelope& env, RotationSubspace subspace, double angle) {
    const double element = subspace == RotationSubspace::ge ? 1.0 : std::numbers::sqrt2;
    return angle / (two_pi * element * env.area());
}

/// Maps an AWG output voltage to a drive amplitude. With a positive
/// saturation the map is Omega_sat tanh(c V / Omega_sat).
struct AwgMap {
    double ghz_per_volt = 1.211;  // 540 mV gives the 120 ns transfer amplitude
    double saturation = 0.0;  // GHz; 0 means linear

    [[nodiscard]] double amplitude(double volts) const {
        const double linear = ghz_per_volt * volts;
        if (saturation <= 0.0) return linear;
        return saturation * std::tanh(linear / saturation);
    }
};

struct ResetConfig {
    double ef_pulse_duration = 75.0;   // ns
    double f0g1_amplitude = 0.0;       // GHz; 0 selects the amplitude calibrated to f0g1_duration
    double f0g1_duration = 120.0;      // ns
    double f0g1_ramp = 5.0;            // ns
    double f0g1_stark_offset = 0.0;    // GHz, calibrated resonance minus nominal omega_f0g1
    bool auto_stark = true;            // replace f0g1_stark_offset by the calibrated value
    double f0g1_freq_offset = 0.0;     // GHz, deliberate miscalibration on top
    bool use_ideal_x = true;
    double x_over_rotation = 0.0;      // fractional
    double idle_after = 2000.0;        // ns

    void validate() const {
        if (!(ef_pulse_duration > 0.0)) throw InvalidArgument("reset.ef_pulse_duration must be > 0");
        if (!(f0g1_duration > 0.0)) throw InvalidArgument("reset.f0g1_duration must be > 0");
        if (!(f0g1_amplitude >= 0.0)) throw InvalidArgument("reset.f0g1_amplitude must be >= 0");
        if (!(f0g1_ramp >= 0.0) || 2.0 * f0g1_ramp > f0g1_duration) {
            throw InvalidArgument("reset.f0g1_ramp must satisfy 0 <= 2 ramp <= f0g1_duration");
        }
        if (!(idle_after >= 0.0)) throw InvalidArgument("reset.idle_after must be >= 0");
    }
};

/// X_pi(e->f), f0g1 transfer pulse, idle. The f0g1 pulse runs in the frame
/// nominal omega_f0g1 + stark offset + deliberate offset.
inline Schedule reset_sequence([[maybe_unused]] const DeviceParams& p, const ResetConfig& cfg) {
    cfg.validate();
    Schedule s;
    if (cfg.use_ideal_x) {
        s.append(IdealRotation{RotationSubspace::ef, std::numbers::pi, 0.0, cfg.x_over_rotation,
                               cfg.ef_pulse_duration, 0.0});
    } else {
        const Envelope env = Envelope::gaussian(cfg.ef_pulse_duration, cfg.ef_pulse_duration / 4.0);
        const double amp =
            rotation_amplitude(env, RotationSubspace::ef, std::numbers::pi * (1.0 + cfg.x_over_rotation));
        s.append(Pulse{env, amp, 0.0, Carrier::ef, 0.0, 0.0});
    }
    s.append(Pulse{Envelope::square(cfg.f0g1_duration, cfg.f0g1_ramp), cfg.f0g1_amplitude, 0.0,
                   Carrier::f0g1, cfg.f0g1_stark_offset + cfg.f0g1_freq_offset, 0.0});
    if (cfg.idle_after > 0.0) {
        s.append(Idle{cfg.idle_after, 0.0});
    }
    return s;
}

}  // namespace resetsim
