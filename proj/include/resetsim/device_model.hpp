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

// Transmon-resonator device model: parameters, rotating-frame Hamiltonian,
// collapse operators and the closed-form effective f0-g1 quantities.
//
// Units: frequencies enter as ordinary frequencies in GHz, lifetimes in us
// and kappa_r in 1/us. Everything handed to the integrator is converted once
// to angular units on a nanosecond clock (rad/ns, 1/ns).

#pragma once

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <array>
#include <limits>
#include <utility>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "resetsim/errors.hpp"
#include "resetsim/quantum_core.hpp"

namespace resetsim {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// GHz -> rad/ns.
constexpr double angular(double ghz) { return two_pi * ghz; }

/// How omega_ge, alpha and omega_r are to be read.
///
/// `dressed`: they are measured transition frequencies of the coupled system
/// (what spectroscopy reports); the Hamiltonian uses bare values solved so that
/// its eigen-spectrum reproduces them. `bare`: they enter the Hamiltonian as is.
enum class FrequencyConvention { dressed, bare };

/// measured: t1_* are the observed lifetimes of the coupled device, so the
/// Purcell decay through the resonator is removed from the qubit jump rates.
/// intrinsic: t1_* enter L_q unchanged.
enum class LifetimeConvention { measured, intrinsic };

struct DeviceParams {
    double omega_ge = 4.904;       // GHz
    double alpha = -0.330;         // GHz
    double omega_r = 6.838;        // GHz
    double g_coupling = 0.067;     // GHz
    double kappa_r = 4.26;         // 1/us
    double t1_eg = 44.2;           // us
    double t1_fe = 26.1;           // us
    double t1_hf = 26.1 / std::numbers::sqrt3;  // us
    double p_thermal_e = 0.015;
    FrequencyConvention convention = FrequencyConvention::dressed;
    LifetimeConvention lifetimes = LifetimeConvention::measured;

    void validate() const {
        auto fail = [](const std::string& key, const std::string& rule) {
            throw InvalidArgument("device." + key + ": " + rule);
        };
        if (!(alpha < 0.0)) fail("alpha", "anharmonicity must be negative");
        if (!(omega_ge > 0.0)) fail("omega_ge", "must be positive");
        if (!(omega_r > omega_ge)) fail("omega_r", "must exceed omega_ge");
        if (!(g_coupling >= 0.0)) fail("g_coupling", "must be non-negative");
        if (!(kappa_r > 0.0)) fail("kappa_r", "must be positive");
        if (!(t1_eg > 0.0)) fail("t1_eg", "must be positive");
        if (!(t1_fe > 0.0)) fail("t1_fe", "must be positive");
        if (!(t1_hf > 0.0)) fail("t1_hf", "must be positive");
        if (!(p_thermal_e >= 0.0 && p_thermal_e < 0.5)) fail("p_thermal_e", "must lie in [0, 0.5)");
    }
};

/// A drive frame. The rotating frame runs at omega_d + detuning_offset.
struct DriveSpec {
    double omega_d = 0.0;          // GHz
    double amplitude = 0.0;        // GHz, peak |Omega|
    double phase = 0.0;            // rad
    double detuning_offset = 0.0;  // GHz

    [[nodiscard]] double frame_frequency() const { return omega_d + detuning_offset; }
    [[nodiscard]] cplx envelope() const { return std::polar(amplitude, phase); }
};

struct DerivedFrequencies {
    double omega_ef;
    double omega_f0g1;
    double delta;  // omega_r - omega_ge
};

inline DerivedFrequencies derived_frequencies(const DeviceParams& p) {
    const double omega_ef = p.omega_ge + p.alpha;
    return {omega_ef, p.omega_ge + omega_ef - p.omega_r, p.omega_r - p.omega_ge};
}

namespace detail {

inline constexpr double singularity_guard = 1e-6;  // GHz

inline void check_detunings(double delta, double alpha, const char* who) {
    if (std::abs(delta) < singularity_guard || std::abs(delta - alpha) < singularity_guard) {
        throw InvalidArgument(std::string(who) +
                              ": resonance singularity (qubit-resonator detuning too small)");
    }
}

}  // namespace detail

/// Second-order f0-g1 coupling induced by a qubit drive of amplitude Omega:
///
///     g~ = g alpha Omega / (sqrt(2) Delta (Delta + alpha)),  Delta = omega_ge - omega_r
///
/// Written with delta = omega_r - omega_ge this is g alpha Omega / (sqrt(2) delta (delta - alpha)).
inline double effective_coupling(const DeviceParams& p, double omega_drive_amp) {
    const double delta = p.omega_r - p.omega_ge;
    detail::check_detunings(delta, p.alpha, "effective_coupling");
    return p.g_coupling * p.alpha * omega_drive_amp /
           (std::numbers::sqrt2 * delta * (delta - p.alpha));
}

/// Dispersive shift chi = g^2 alpha / (Delta (Delta + alpha)), Delta = omega_ge - omega_r.
inline double dispersive_shift(const DeviceParams& p) {
    const double delta = p.omega_r - p.omega_ge;
    detail::check_detunings(delta, p.alpha, "dispersive_shift");
    return p.g_coupling * p.g_coupling * p.alpha / (delta * (delta - p.alpha));
}

/// 2x2 effective Hamiltonian in the basis {|f0>, |g1>}, same units as the inputs.
inline Operator effective_hamiltonian(double delta_f0, double g_tilde) {
    Operator h(2, 2);
    h << delta_f0, g_tilde, g_tilde, 0.0;
    return h;
}

/// Hamiltonian frequencies after resolving the frequency convention.
struct BareFrequencies {
    double omega_ge;
    double alpha;
    double omega_r;
};

/// Static lab-frame Hamiltonian in GHz (no 2*pi):
/// omega_r a'a + omega_q b'b + alpha/2 b'b'bb + g (b'a + b a').
inline Operator lab_hamiltonian(const BareFrequencies& bare, double g, const HilbertSpec& spec) {
    const Operator b = embed(annihilation(spec.n_transmon), Subsystem::transmon, spec);
    const Operator a = embed(annihilation(spec.n_resonator), Subsystem::resonator, spec);
    const Operator bd = b.adjoint();
    const Operator ad = a.adjoint();
    return bare.omega_r * ad * a + bare.omega_ge * bd * b + 0.5 * bare.alpha * bd * bd * b * b +
           g * (bd * a + b * ad);
}

namespace detail {

/// Index of the eigenvector with the largest weight on basis state `index`.
inline int dressed_partner(const Operator& vecs, int index) {
    int best = 0;
    double best_weight = -1.0;
    for (int k = 0; k < vecs.cols(); ++k) {
        const double w = std::norm(vecs(index, k));
        if (w > best_weight) {
            best_weight = w;
            best = k;
        }
    }
    return best;
}

/// Dressed (omega_ge, omega_ef, omega_r) of a bare parameter set.
inline std::array<double, 3> dressed_transitions(const BareFrequencies& bare, double g,
                                                 const HilbertSpec& spec) {
    Eigen::SelfAdjointEigenSolver<Operator> solver(lab_hamiltonian(bare, g, spec));
    const Operator& vecs = solver.eigenvectors();
    const auto& vals = solver.eigenvalues();
    const double e_g0 = vals(dressed_partner(vecs, spec.index(level::g, 0)));
    const double e_e0 = vals(dressed_partner(vecs, spec.index(level::e, 0)));
    const double e_f0 = vals(dressed_partner(vecs, spec.index(level::f, 0)));
    const double e_g1 = vals(dressed_partner(vecs, spec.index(level::g, 1)));
    return {e_e0 - e_g0, e_f0 - e_e0, e_g1 - e_g0};
}

}  // namespace detail

/// Bare Hamiltonian frequencies for p. In the dressed convention this solves
/// for bare values whose coupled spectrum reproduces omega_ge, omega_ef and
/// omega_r of p (fixed-point iteration; the Jacobian is close to identity).
inline BareFrequencies bare_frequencies(const DeviceParams& p, const HilbertSpec& spec) {
    BareFrequencies bare{p.omega_ge, p.alpha, p.omega_r};
    if (p.convention == FrequencyConvention::bare || p.g_coupling == 0.0) {
        return bare;
    }
    const std::array<double, 3> target{p.omega_ge, p.omega_ge + p.alpha, p.omega_r};
    for (int it = 0; it < 100; ++it) {
        const auto dressed = detail::dressed_transitions(bare, p.g_coupling, spec);
        const double d_ge = target[0] - dressed[0];
        const double d_ef = target[1] - dressed[1];
        const double d_r = target[2] - dressed[2];
        bare.omega_ge += d_ge;
        bare.alpha += d_ef - d_ge;
        bare.omega_r += d_r;
        if (std::max({std::abs(d_ge), std::abs(d_ef), std::abs(d_r)}) < 1e-14) {
            return bare;
        }
    }
    throw ConvergenceError("bare_frequencies: dressed-to-bare solve did not converge");
}

/// Operators and cached pieces needed to assemble the rotating-frame
/// Hamiltonian for any drive frame and envelope value.
class SystemModel {
public:
    SystemModel(const DeviceParams& p, const HilbertSpec& spec) : params_(p), spec_(spec) {
        spec.validate();
        p.validate();
        bare_ = bare_frequencies(p, spec);
        b_ = embed(annihilation(spec.n_transmon), Subsystem::transmon, spec);
        a_ = embed(annihilation(spec.n_resonator), Subsystem::resonator, spec);
        number_ = b_.adjoint() * b_ + a_.adjoint() * a_;
        lab_ = lab_hamiltonian(bare_, p.g_coupling, spec);

        collapses_.push_back(std::sqrt(p.kappa_r * 1e-3) * a_);
        const int n = spec.n_transmon;
        Operator lq = Operator::Zero(n, n);
        const std::array<double, 3> lifetimes{p.t1_eg, p.t1_fe, p.t1_hf};
        const std::array<const char*, 3> keys{"t1_eg", "t1_fe", "t1_hf"};
        for (int k = 0; k < 3 && k + 1 < n; ++k) {
            double rate = 1.0 / (lifetimes[k] * 1e3);  // 1/ns
            if (p.lifetimes == LifetimeConvention::measured) {
                purcell_[k] = purcell_rate(k + 1);
                rate -= purcell_[k];
                if (!(rate > 0.0)) {
                    throw ConfigError(std::string("device.") + keys[k] +
                                      ": measured lifetime is at or beyond the Purcell limit " +
                                      std::to_string(1e-3 / purcell_[k]) + " us");
                }
            }
            lq(k, k + 1) = std::sqrt(rate);
        }
        collapses_.push_back(embed(lq, Subsystem::transmon, spec));
    }

    /// Resonator-mediated decay rate (1/ns) removed from transition k+1 -> k
    /// in the measured-lifetime convention; zero otherwise.
    [[nodiscard]] double purcell_correction(int k) const { return purcell_.at(k); }

    [[nodiscard]] const DeviceParams& params() const { return params_; }
    [[nodiscard]] const HilbertSpec& spec() const { return spec_; }
    [[nodiscard]] const BareFrequencies& bare() const { return bare_; }
    [[nodiscard]] const Operator& b() const { return b_; }
    [[nodiscard]] const Operator& a() const { return a_; }
    /// Total excitation number b'b + a'a; generates the frame change.
    [[nodiscard]] const Operator& number() const { return number_; }

    /// Drift part in the frame rotating at frame_ghz, rad/ns.
    [[nodiscard]] Operator static_hamiltonian(double frame_ghz) const {
        return two_pi * (lab_ - frame_ghz * number_);
    }

    /// 1/2 (Omega b' + Omega* b), rad/ns.
    [[nodiscard]] Operator drive_hamiltonian(cplx envelope_ghz) const {
        const Operator bd = b_.adjoint();
        return 0.5 * two_pi * (envelope_ghz * bd + std::conj(envelope_ghz) * b_);
    }

    [[nodiscard]] Operator hamiltonian(double frame_ghz, cplx envelope_ghz) const {
        return static_hamiltonian(frame_ghz) + drive_hamiltonian(envelope_ghz);
    }

    /// [sqrt(kappa_r) a, L_q] in 1/sqrt(ns).
    [[nodiscard]] const std::vector<Operator>& collapse_operators() const { return collapses_; }

private:
    DeviceParams params_;
    HilbertSpec spec_;
    BareFrequencies bare_{};
    Operator b_;
    Operator a_;
    Operator number_;
    Operator lab_;
    std::vector<Operator> collapses_;
    std::array<double, 3> purcell_{0.0, 0.0, 0.0};

    /// kappa times the photon number of the dressed state connected to |q0>.
    [[nodiscard]] double purcell_rate(int q) const {
        Eigen::SelfAdjointEigenSolver<Operator> solver(lab_);
        const auto v = solver.eigenvectors().col(detail::dressed_partner(solver.eigenvectors(),
                                                                         spec_.index(q, 0)));
        const double photons = (v.adjoint() * a_.adjoint() * a_ * v).real()(0, 0);
        return params_.kappa_r * 1e-3 * photons;
    }
};

/// Rotating-frame Hamiltonian of the driven system in rad/ns:
///
///     H = d_r a'a + d_q b'b + alpha/2 b'b'bb + g (b'a + b a') + 1/2 (Omega b' + Omega* b)
///
/// with d_q = omega_ge - omega_d and d_r = omega_r - omega_d (bare values).
inline Operator build_hamiltonian(const DeviceParams& p, const DriveSpec& d, cplx envelope_value,
                                  const HilbertSpec& spec) {
    if (!std::isfinite(envelope_value.real()) || !std::isfinite(envelope_value.imag())) {
        throw InvalidArgument("build_hamiltonian: envelope value must be finite");
    }
    return SystemModel(p, spec).hamiltonian(d.frame_frequency(), envelope_value);
}

/// Jump operators [sqrt(kappa_r) a, L_q] in 1/sqrt(ns). Infinite lifetimes
/// give zero entries.
inline std::vector<Operator> collapse_operators(const DeviceParams& p, const HilbertSpec& spec) {
    return SystemModel(p, spec).collapse_operators();
}

/// Dressed f0-g1 resonance under a constant drive.
struct F0G1Resonance {
    double frequency;    // GHz, drive frequency that makes f0 and g1 degenerate
    double stark_shift;  // GHz, frequency - nominal omega_f0g1
    double coupling;     // GHz, half the minimum splitting (|g~| of the full model)
};

namespace detail {

/// Splitting (GHz) of the two eigenstates of the coherent rotating-frame
/// Hamiltonian with the largest weight on {|f0>, |g1>}, and the diabatic
/// detuning estimate (E+ - E-) cos(2 theta) from their mixing.
inline std::pair<double, double> f0g1_splitting(const SystemModel& model, double freq,
                                                double amplitude) {
    const HilbertSpec& spec = model.spec();
    const int i_f0 = spec.index(level::f, 0);
    const int i_g1 = spec.index(level::g, 1);
    const Operator h = model.hamiltonian(freq, cplx(amplitude, 0.0)) / two_pi;
    Eigen::SelfAdjointEigenSolver<Operator> solver(h);
    const Operator& vecs = solver.eigenvectors();
    const auto& vals = solver.eigenvalues();
    int first = -1;
    int second = -1;
    double w_first = -1.0;
    double w_second = -1.0;
    for (int k = 0; k < vecs.cols(); ++k) {
        const double w = std::norm(vecs(i_f0, k)) + std::norm(vecs(i_g1, k));
        if (w > w_first) {
            second = first;
            w_second = w_first;
            first = k;
            w_first = w;
        } else if (w > w_second) {
            second = k;
            w_second = w;
        }
    }
    const int upper = vals(first) > vals(second) ? first : second;
    const int lower = upper == first ? second : first;
    const double split = vals(upper) - vals(lower);
    const double wf = std::norm(vecs(i_f0, upper));
    const double wg = std::norm(vecs(i_g1, upper));
    return {split, split * (wf - wg) / (wf + wg)};
}

}  // namespace detail

/// Locates the drive frequency at which the dressed f0-like and g1-like
/// eigenstates of the coherent rotating-frame Hamiltonian anticross, i.e. the
/// minimum of their splitting.
///
/// A few Newton steps on the mixing-angle detuning estimate (the frame term
/// shifts f0 against g1 with slope -1) land near the crossing; Brent's method
/// then minimizes the splitting itself. The mixing-angle estimate alone is
/// biased by drive dressing from the other levels.
inline F0G1Resonance f0g1_resonance(const SystemModel& model, double amplitude) {
    const double nominal = derived_frequencies(model.params()).omega_f0g1;
    double freq = nominal;
    double split = 0.0;
    for (int it = 0; it < 30; ++it) {
        const auto [s, detuning] = detail::f0g1_splitting(model, freq, amplitude);
        split = s;
        freq += detuning;
        if (std::abs(detuning) < 1e-12) break;
    }
    const double window = std::max(2.0 * split, 1e-4);
    auto gap = [&](double f) { return detail::f0g1_splitting(model, f, amplitude).first; };
    const auto [best, min_split] = boost::math::tools::brent_find_minima(
        gap, freq - window, freq + window, std::numeric_limits<double>::digits / 2 + 4);
    return {best, best - nominal, 0.5 * min_split};
}

}  // namespace resetsim
