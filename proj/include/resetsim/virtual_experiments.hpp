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

// Virtual reproductions of the calibration and reset measurements.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "resetsim/analysis_fitting.hpp"
#include "resetsim/device_model.hpp"
#include "resetsim/errors.hpp"
#include "resetsim/lindblad_engine.hpp"
#include "resetsim/pulse_schedule.hpp"
#include "resetsim/quantum_core.hpp"
#include "resetsim/readout.hpp"

namespace resetsim {

/// |g0> followed by ideal pi rotations up the ladder to `target`.
inline Operator prepared_state(const HilbertSpec& spec, int target) {
    Operator rho = DensityMatrix::basis(spec, level::g, 0).matrix();
    if (target >= level::e) {
        const Operator u = rotation_unitary(IdealRotation{RotationSubspace::ge}, spec);
        rho = u * rho * u.adjoint();
    }
    if (target >= level::f) {
        const Operator u = rotation_unitary(IdealRotation{RotationSubspace::ef}, spec);
        rho = u * rho * u.adjoint();
    }
    return rho;
}

/// 1 - p_g of a raw state matrix.
inline double excited_population(const Operator& rho, const HilbertSpec& spec) {
    return populations(rho, spec).qubit_excited();
}

// ---------------------------------------------------------------- transfer

/// First minimum of the qubit population in a two-level f0/g1 model whose
/// g1 amplitude decays at kappa/2; infinity when overdamped.
inline double damped_transfer_time(double coupling_ghz, double kappa_per_ns) {
    const double big_g = two_pi * coupling_ghz;
    const double w2 = big_g * big_g - kappa_per_ns * kappa_per_ns / 16.0;
    if (w2 <= 0.0) return std::numeric_limits<double>::infinity();
    const double w = std::sqrt(w2);
    return (std::numbers::pi - std::atan(4.0 * w / kappa_per_ns)) / w;
}

/// Drive amplitude whose square f0g1 pulse of total length `duration`
/// (linear ramps of `ramp` on both ends) ends at the first transfer minimum.
inline double transfer_amplitude_for(const SystemModel& model, double duration, double ramp) {
    if (!(duration > 2.0 * ramp) || ramp < 0.0) {
        throw InvalidArgument("transfer duration must exceed twice the ramp");
    }
    const double kappa = model.params().kappa_r * 1e-3;
    const double target = duration - ramp;  // area-equivalent flat length
    auto time_at = [&](double amp) {
        return damped_transfer_time(f0g1_resonance(model, amp).coupling, kappa);
    };
    double lo = 0.01;
    double hi = 2.0;
    if (time_at(hi) > target) {
        throw InvalidArgument("transfer duration too short for amplitudes up to 2 GHz");
    }
    if (time_at(lo) < target) {
        throw InvalidArgument("transfer duration too long for amplitudes down to 10 MHz");
    }
    for (int it = 0; it < 60 && hi - lo > 1e-9; ++it) {
        const double mid = 0.5 * (lo + hi);
        (time_at(mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Fills the automatic fields of a reset configuration: zero amplitude picks
/// the transfer amplitude for the configured duration, and the Stark offset
/// comes from the dressed-spectrum resonance at that amplitude.
inline ResetConfig resolve_reset_config(const SystemModel& model, ResetConfig cfg) {
    cfg.validate();
    if (cfg.f0g1_amplitude == 0.0) {
        cfg.f0g1_amplitude = transfer_amplitude_for(model, cfg.f0g1_duration, cfg.f0g1_ramp);
    }
    if (cfg.auto_stark) {
        cfg.f0g1_stark_offset = f0g1_resonance(model, cfg.f0g1_amplitude).stark_shift;
        cfg.auto_stark = false;
    }
    return cfg;
}

// ------------------------------------------------------------ spectroscopy

struct SpectroscopyMap {
    std::vector<double> amplitudes;   // GHz; negative values drive with phase pi
    std::vector<double> frequencies;  // GHz
    Eigen::MatrixXd qubit_population; // [amplitude][frequency], 1 - p_g
    PhysicsDiagnostics diagnostics;   // over the final states
};

/// Probe of `probe_duration` ns on every (amplitude, frequency) point,
/// starting from |f0>.
inline SpectroscopyMap spectroscopy_scan(const SystemModel& model, const std::vector<double>& amps,
                                         const std::vector<double>& freqs, double probe_duration,
                                         const IntegratorCfg& icfg, double ramp = 5.0) {
    if (amps.empty() || freqs.empty()) throw InvalidArgument("spectroscopy: empty scan axis");
    if (!(probe_duration > 2.0 * ramp)) throw InvalidArgument("spectroscopy: probe too short");
    IntegratorCfg cfg = icfg;
    cfg.sample_every = 0;
    const double nominal = derived_frequencies(model.params()).omega_f0g1;
    const Operator rho0 = prepared_state(model.spec(), level::f);
    SpectroscopyMap map{amps, freqs,
                        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(amps.size()),
                                              static_cast<Eigen::Index>(freqs.size())),
                        {}};
    for (std::size_t j = 0; j < freqs.size(); ++j) {
        Evolver ev(model, cfg, freqs[j]);
        for (std::size_t i = 0; i < amps.size(); ++i) {
            Operator rho = rho0;
            if (amps[i] != 0.0) {
                Schedule s;
                s.append(Pulse{Envelope::square(probe_duration, ramp), std::abs(amps[i]),
                               amps[i] < 0.0 ? std::numbers::pi : 0.0, Carrier::f0g1,
                               freqs[j] - nominal, 0.0});
                rho = ev.run(rho, s, nullptr);
            } else {
                rho = ev.idle_for(rho, probe_duration, 0.0, nullptr);
            }
            map.diagnostics.observe(rho);
            map.qubit_population(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                excited_population(rho, model.spec());
        }
    }
    return map;
}

struct SpectroscopyAnalysis {
    std::vector<double> amplitudes;  // rows that produced a converged dip fit
    std::vector<double> centers;     // GHz
    std::vector<double> widths;      // GHz
    std::vector<FitResult> fits;
    FitResult quadratic;             // center = c0 + c1 amp + c2 amp^2
    double zero_amplitude_frequency = 0.0;
    double zero_amplitude_width = 0.0;  // width at the smallest |amplitude|
};

inline SpectroscopyAnalysis analyze_spectroscopy(const SpectroscopyMap& map) {
    SpectroscopyAnalysis out;
    for (std::size_t i = 0; i < map.amplitudes.size(); ++i) {
        if (map.amplitudes[i] == 0.0) continue;
        std::vector<double> row(map.frequencies.size());
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] = map.qubit_population(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        FitResult fit = fit_lorentzian(map.frequencies, row);
        if (!fit.converged || fit.at("amplitude") >= 0.0) continue;
        out.amplitudes.push_back(map.amplitudes[i]);
        out.centers.push_back(fit.at("center"));
        out.widths.push_back(fit.at("width"));
        out.fits.push_back(std::move(fit));
    }
    if (out.amplitudes.size() < 3) {
        throw ConvergenceError("spectroscopy: fewer than 3 resonance fits converged");
    }
    out.quadratic = fit_quadratic(out.amplitudes, out.centers);
    out.zero_amplitude_frequency = out.quadratic.at("c0");
    std::size_t smallest = 0;
    for (std::size_t k = 1; k < out.amplitudes.size(); ++k) {
        if (std::abs(out.amplitudes[k]) < std::abs(out.amplitudes[smallest])) smallest = k;
    }
    out.zero_amplitude_width = out.widths[smallest];
    return out;
}

// -------------------------------------------------------------- time rabi

struct RabiResult {
    std::vector<double> durations;  // ns
    std::vector<double> excited;    // 1 - p_g after each pulse
    std::vector<std::vector<double>> transmon;  // [sample][level]
    FitResult fit;                  // damped sinusoid over the whole scan
    double t_opt = 0.0;             // ns, first minimum
    double residual = 0.0;          // 1 - p_g at the first minimum
    PhysicsDiagnostics diagnostics;
};

/// Qubit population after an f0g1 pulse at absolute drive frequency `freq`
/// for each duration, starting from |f0>. Durations must be increasing and
/// at least twice the ramp. t_opt and residual are left NaN.
inline RabiResult rabi_scan(const SystemModel& model, double amp, double freq,
                            const std::vector<double>& durations, const IntegratorCfg& icfg,
                            double ramp = 5.0) {
    if (durations.size() < 3) throw InvalidArgument("time_rabi: need at least 3 durations");
    for (std::size_t i = 0; i < durations.size(); ++i) {
        if (durations[i] < 2.0 * ramp) throw InvalidArgument("time_rabi: duration shorter than ramps");
        if (i > 0 && !(durations[i] > durations[i - 1])) {
            throw InvalidArgument("time_rabi: durations must be strictly increasing");
        }
    }
    if (!(amp >= 0.0)) throw InvalidArgument("time_rabi: amplitude must be >= 0");
    const auto& spec = model.spec();
    const double nominal = derived_frequencies(model.params()).omega_f0g1;
    const cplx drive(amp, 0.0);
    IntegratorCfg cfg = icfg;
    cfg.sample_every = 0;
    Evolver ev(model, cfg, freq);

    // ramp-up once, then grow the plateau and append the ramp-down per point
    Operator rho = prepared_state(spec, level::f);
    const Pulse probe{Envelope::square(durations.back(), ramp), amp, 0.0, Carrier::f0g1, freq - nominal,
                      0.0};
    if (ramp > 0.0) rho = ev.pulse_pieces(rho, probe, 0.0, 0, 1, 0.0, nullptr);
    double plateau = 0.0;
    RabiResult out;
    out.durations = durations;
    for (double d : durations) {
        const double target = d - 2.0 * ramp;
        if (target > plateau) {
            rho = ev.constant_stretch(rho, freq, drive, target - plateau, 0.0, nullptr);
            plateau = target;
        }
        Operator fin = rho;
        if (ramp > 0.0) {
            const Pulse p{Envelope::square(d, ramp), amp, 0.0, Carrier::f0g1, freq - nominal, 0.0};
            const std::size_t last = p.envelope.pieces().size();
            fin = ev.pulse_pieces(fin, p, 0.0, last - 1, last, 0.0, nullptr);
        }
        const Populations pops = populations(fin, spec);
        out.excited.push_back(pops.qubit_excited());
        out.transmon.push_back(pops.transmon);
        out.diagnostics.observe(fin);
    }
    if (durations.size() >= 10) out.fit = fit_damped_sinusoid(out.durations, out.excited);
    out.t_opt = std::numeric_limits<double>::quiet_NaN();
    out.residual = std::numeric_limits<double>::quiet_NaN();
    return out;
}

/// rabi_scan plus the first transfer minimum. Throws NoMinimumError when the
/// scan has no interior minimum (drive too weak against kappa_r).
inline RabiResult time_rabi(const SystemModel& model, double amp, double freq,
                            const std::vector<double>& durations, const IntegratorCfg& icfg,
                            double ramp = 5.0) {
    RabiResult out = rabi_scan(model, amp, freq, durations, icfg, ramp);
    const Minimum m = first_minimum(out.durations, out.excited);
    out.t_opt = m.t;
    out.residual = m.y;
    return out;
}

// ------------------------------------------------------------ reset trace

struct ResetTraceResult {
    TimeTrace pulsed;
    TimeTrace free_decay;
    std::vector<double> difference;  // pulsed minus free decay, 1 - p_g
    double residual = 0.0;           // 1 - p_g at the end of the sequence
    double residual_after_transfer = 0.0;
    ResetConfig resolved;
    Schedule schedule;
};

namespace detail {

inline double excited_at(const TimeTrace& tr, double t) {
    for (std::size_t i = 0; i < tr.size(); ++i) {
        if (std::abs(tr.times[i] - t) < 1e-9) return 1.0 - tr.transmon_pops[0][i];
    }
    throw InvalidArgument("trace has no sample at the requested time");
}

}  // namespace detail

/// Pulsed reset of |e0> against natural decay on a common time axis. The
/// free-decay run replays the same schedule with the rotation and the drive
/// switched off.
inline ResetTraceResult reset_trace(const SystemModel& model, ResetConfig cfg, double mismatch,
                                    const IntegratorCfg& icfg) {
    cfg.f0g1_freq_offset = mismatch;
    ResetTraceResult out;
    out.resolved = resolve_reset_config(model, cfg);
    out.schedule = reset_sequence(model.params(), out.resolved);

    Schedule idle;
    for (const auto& seg : out.schedule.segments()) {
        if (const auto* rot = std::get_if<IdealRotation>(&seg)) {
            IdealRotation off = *rot;
            off.angle = 0.0;
            idle.append(off);
        } else if (const auto* pulse = std::get_if<Pulse>(&seg)) {
            Pulse off = *pulse;
            off.amplitude = 0.0;
            idle.append(off);
        } else {
            idle.append(seg);
        }
    }
    const DensityMatrix rho0 = DensityMatrix::from_matrix(prepared_state(model.spec(), level::e));
    const double ref = default_reference_frame(out.schedule, model.params());
    out.pulsed = evolve(rho0, out.schedule, model, icfg, ref);
    out.free_decay = evolve(rho0, idle, model, icfg, ref);
    if (out.pulsed.times != out.free_decay.times) {
        throw InvalidArgument("reset_trace: sample grids of the two runs differ");
    }
    const auto a = out.pulsed.qubit_excited();
    const auto b = out.free_decay.qubit_excited();
    out.difference.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.difference[i] = a[i] - b[i];
    out.residual = a.back();
    double transfer_end = 0.0;
    for (const auto& seg : out.schedule.segments()) {
        if (const auto* pulse = std::get_if<Pulse>(&seg); pulse && pulse->carrier == Carrier::f0g1) {
            transfer_end = pulse->end();
        }
    }
    out.residual_after_transfer = detail::excited_at(out.pulsed, transfer_end);
    return out;
}

// ----------------------------------------------------------- trigger rate

struct TriggerScanConfig {
    bool with_reset = false;
    int rounds = 60;                  // upper bound on rounds per rate
    double tolerance = 1e-10;         // steady-state criterion on the measured population
    double readout_duration = 5000.0; // ns
    double x_ge_duration = 0.0;       // ns, bookkeeping length of the preparation pulse
    double x_ge_over_rotation = 0.0;  // fractional
    ResetConfig reset;

    void validate() const {
        if (rounds < 1) throw InvalidArgument("trigger.rounds must be >= 1");
        if (!(tolerance >= 0.0)) throw InvalidArgument("trigger.tolerance must be >= 0");
        if (!(readout_duration >= 0.0)) throw InvalidArgument("trigger.readout_duration must be >= 0");
        if (!(x_ge_duration >= 0.0)) throw InvalidArgument("trigger.x_ge_duration must be >= 0");
        reset.validate();
    }
};

struct TriggerPoint {
    double rate_khz = 0.0;
    double population = 0.0;           // |e>+|f>+... at the measurement, steady state
    std::vector<double> per_round;
    std::vector<double> transmon;      // level populations at the final measurement
};

struct TriggerScanResult {
    std::vector<TriggerPoint> points;
    ResetConfig resolved;
    PhysicsDiagnostics diagnostics;
};

/// Moves the upward thermal flow of a window of length tau from |g0> to
/// |e0>: the e population then obeys p(tau) = p(0) e^{-tau/T1} + p_th (1 -
/// e^{-tau/T1}) together with the Lindblad decay.
inline void thermal_blend(Operator& rho, const DeviceParams& p, const HilbertSpec& spec, double tau_ns) {
    if (tau_ns <= 0.0 || p.p_thermal_e <= 0.0) return;
    const double flow = p.p_thermal_e * -std::expm1(-tau_ns / (p.t1_eg * 1e3));
    const int g0 = spec.index(level::g, 0);
    const int e0 = spec.index(level::e, 0);
    const double moved = std::min(flow, rho(g0, g0).real());
    rho(g0, g0) -= moved;
    rho(e0, e0) += moved;
}

/// Steady state of the two-experiment round: (A) X_pi g->e then wait 1/R;
/// (B) optional reset, measurement, wait out 1/R. The population reported
/// is 1 - p_g at the start of B's measurement.
inline TriggerScanResult trigger_rate_experiment(const SystemModel& model,
                                                 const std::vector<double>& rates_khz,
                                                 const TriggerScanConfig& cfg, const IntegratorCfg& icfg) {
    cfg.validate();
    const auto& spec = model.spec();
    const auto& p = model.params();
    TriggerScanResult out;
    out.resolved = resolve_reset_config(model, cfg.reset);
    const Schedule reset = reset_sequence(p, out.resolved);
    const double reset_length = cfg.with_reset ? reset.duration() : 0.0;
    IntegratorCfg quiet = icfg;
    quiet.sample_every = 0;
    Evolver ev(model, quiet, default_reference_frame(reset, p));
    const Operator u_x = rotation_unitary(
        IdealRotation{RotationSubspace::ge, std::numbers::pi, 0.0, cfg.x_ge_over_rotation}, spec);

    for (double rate : rates_khz) {
        if (!(rate > 0.0)) throw InvalidArgument("trigger rates must be positive");
        const double period = 1e6 / rate;  // ns
        if (period < cfg.x_ge_duration + cfg.readout_duration ||
            period < reset_length + cfg.readout_duration) {
            throw TimingError("trigger period " + std::to_string(period) +
                              " ns is shorter than the experiment sequence");
        }
        Operator rho = thermal_state(spec, p.p_thermal_e).matrix();
        TriggerPoint point;
        point.rate_khz = rate;
        for (int round = 0; round < cfg.rounds; ++round) {
            // experiment A
            rho = u_x * rho * u_x.adjoint();
            const double wait_a = period - cfg.x_ge_duration;
            rho = ev.idle_for(std::move(rho), wait_a, 0.0, nullptr);
            thermal_blend(rho, p, spec, wait_a);
            // experiment B
            if (cfg.with_reset) {
                rho = ev.run(std::move(rho), reset, nullptr);
                thermal_blend(rho, p, spec, reset_length);
            }
            const Populations pops = populations(rho, spec);
            point.per_round.push_back(pops.qubit_excited());
            point.transmon = pops.transmon;
            out.diagnostics.observe(rho);
            rho = ev.idle_for(std::move(rho), period - reset_length, 0.0, nullptr);
            thermal_blend(rho, p, spec, period - reset_length);
            const auto n = point.per_round.size();
            if (n >= 2 && std::abs(point.per_round[n - 1] - point.per_round[n - 2]) <= cfg.tolerance) break;
        }
        point.population = point.per_round.back();
        out.points.push_back(std::move(point));
    }
    return out;
}

// ------------------------------------------------------ thermal population

struct ThermalEstimate {
    double estimate = 0.0;
    double amplitude_thermal = 0.0;
    double amplitude_prepared = 0.0;
    double ratio = 0.0;
    std::vector<double> angles;
    std::vector<double> pe_thermal;
    std::vector<double> pe_prepared;
};

namespace detail {

/// Amplitude of the first harmonic of y(angle) by linear least squares.
inline double cosine_amplitude(const std::vector<double>& angles, const std::vector<double>& y) {
    const auto n = static_cast<Eigen::Index>(angles.size());
    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = std::cos(angles[static_cast<std::size_t>(i)]);
        design(i, 2) = std::sin(angles[static_cast<std::size_t>(i)]);
        rhs(i) = y[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd c = design.colPivHouseholderQr().solve(rhs);
    return std::hypot(c(1), c(2));
}

}  // namespace detail

/// e<->f Rabi amplitude scans from the thermal state and from the thermal
/// state after X_pi(g->e). For a Boltzmann ladder with ratio x the
/// amplitude ratio is x / (1 + x), which gives x and then p_e.
inline ThermalEstimate thermal_population_measurement(const SystemModel& model, int n_angles = 41) {
    if (n_angles < 5) throw InvalidArgument("thermal_population_measurement: need >= 5 angles");
    const auto& spec = model.spec();
    const Operator rho_th = thermal_state(spec, model.params().p_thermal_e).matrix();
    const Operator u_x = rotation_unitary(IdealRotation{RotationSubspace::ge}, spec);
    const Operator rho_prep = u_x * rho_th * u_x.adjoint();
    ThermalEstimate out;
    for (int k = 0; k < n_angles; ++k) {
        const double beta = 4.0 * std::numbers::pi * k / (n_angles - 1);
        const Operator u = rotation_unitary(IdealRotation{RotationSubspace::ef, beta}, spec);
        out.angles.push_back(beta);
        out.pe_thermal.push_back(populations(Operator(u * rho_th * u.adjoint()), spec).transmon[level::e]);
        out.pe_prepared.push_back(
            populations(Operator(u * rho_prep * u.adjoint()), spec).transmon[level::e]);
    }
    out.amplitude_thermal = detail::cosine_amplitude(out.angles, out.pe_thermal);
    out.amplitude_prepared = detail::cosine_amplitude(out.angles, out.pe_prepared);
    if (!(out.amplitude_prepared > 0.0)) {
        throw ConvergenceError("thermal_population_measurement: no oscillation in the reference scan");
    }
    out.ratio = out.amplitude_thermal / out.amplitude_prepared;
    if (out.ratio < 1e-12) return out;
    if (out.ratio >= 0.5) throw ConvergenceError("thermal_population_measurement: amplitude ratio >= 1/2");
    const double x = out.ratio / (1.0 - out.ratio);
    double norm = 0.0;
    double term = 1.0;
    for (int k = 0; k < spec.n_transmon; ++k) {
        norm += term;
        term *= x;
    }
    out.estimate = x / norm;
    return out;
}

}  // namespace resetsim
