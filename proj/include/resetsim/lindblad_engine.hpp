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

// Fixed-step RK4 integration of the Lindblad master equation
//
//     d rho/dt = -i [H, rho] + sum_k (L_k rho L_k' - 1/2 {L_k' L_k, rho})
//
// through a Schedule. Time runs on a nanosecond clock; H is in rad/ns.
//
// Stretches where the generator is constant (idle time, the flat top of a
// square pulse) use the one-step RK4 map of the Liouvillian,
// R(hL) = 1 + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24, raised to integer powers.
// That is the same recurrence as stepping RK4 one step at a time, so results
// agree with plain stepping to rounding error. Time-dependent envelope pieces
// are stepped directly on the density matrix.
//
// Every pulse runs in its own rotating frame (nominal carrier + offset).
// Between pulses the state is held in a reference frame; entering a pulse
// shifts its drive phase by -2 pi (f_pulse - f_ref) t_start and leaving it
// rotates the state back by exp(i phi N).

#pragma once

#include <algorithm>
#include <compare>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include "resetsim/device_model.hpp"
#include "resetsim/errors.hpp"
#include "resetsim/pulse_schedule.hpp"
#include "resetsim/quantum_core.hpp"

namespace resetsim {

using Superoperator = Eigen::MatrixXcd;

struct IntegratorCfg {
    double dt = 0.0025;         // ns
    int sample_every = 400;     // steps between samples; 0 = segment boundaries only
    bool convergence_check = false;

    void validate() const {
        if (!(dt > 0.0)) throw InvalidArgument("integrator.dt must be positive");
        if (sample_every < 0) throw InvalidArgument("integrator.sample_every must be >= 0");
    }
};

/// Physicality diagnostics accumulated over every recorded sample.
struct PhysicsDiagnostics {
    double trace_error = 0.0;        // max |Tr rho - 1|
    double hermiticity_error = 0.0;  // max |rho - rho'|
    double min_eigenvalue = std::numeric_limits<double>::infinity();

    void observe(const Operator& rho) {
        trace_error = std::max(trace_error, std::abs(rho.trace() - cplx(1.0)));
        hermiticity_error = std::max(hermiticity_error, resetsim::hermiticity_error(rho));
        min_eigenvalue = std::min(min_eigenvalue, resetsim::min_eigenvalue(rho));
    }
    void merge(const PhysicsDiagnostics& o) {
        trace_error = std::max(trace_error, o.trace_error);
        hermiticity_error = std::max(hermiticity_error, o.hermiticity_error);
        min_eigenvalue = std::min(min_eigenvalue, o.min_eigenvalue);
    }
};

struct TimeTrace {
    std::vector<double> times;                       // ns
    std::vector<std::vector<double>> transmon_pops;  // [level][sample]
    std::vector<std::vector<double>> resonator_pops; // [level][sample]
    PhysicsDiagnostics diagnostics;
    Operator final_state;

    [[nodiscard]] std::size_t size() const { return times.size(); }
    [[nodiscard]] double trace_error() const { return diagnostics.trace_error; }

    /// 1 - p_g at every sample.
    [[nodiscard]] std::vector<double> qubit_excited() const {
        std::vector<double> out(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) out[i] = 1.0 - transmon_pops[0][i];
        return out;
    }

    void record(double t, const Operator& rho, const HilbertSpec& spec) {
        const Populations pops = populations(rho, spec);
        if (transmon_pops.empty()) {
            transmon_pops.assign(spec.n_transmon, {});
            resonator_pops.assign(spec.n_resonator, {});
        }
        if (!times.empty() && t <= times.back() + 1e-12) {
            // same instant (zero-duration segment): keep the later state
            for (int q = 0; q < spec.n_transmon; ++q) transmon_pops[q].back() = pops.transmon[q];
            for (int r = 0; r < spec.n_resonator; ++r) resonator_pops[r].back() = pops.resonator[r];
        } else {
            times.push_back(t);
            for (int q = 0; q < spec.n_transmon; ++q) transmon_pops[q].push_back(pops.transmon[q]);
            for (int r = 0; r < spec.n_resonator; ++r) resonator_pops[r].push_back(pops.resonator[r]);
        }
        diagnostics.observe(rho);
    }

    /// CSV with header t_ns,p_g,p_e,p_f,p_h,r0,r1,r2,trace_err. Columns beyond
    /// the simulated truncation are written as 0.
    void write_csv(std::ostream& os) const {
        os << "t_ns,p_g,p_e,p_f,p_h,r0,r1,r2,trace_err\n";
        const auto old_precision = os.precision(17);
        for (std::size_t i = 0; i < times.size(); ++i) {
            os << times[i];
            for (int q = 0; q < 4; ++q) {
                os << ',' << (q < static_cast<int>(transmon_pops.size()) ? transmon_pops[q][i] : 0.0);
            }
            for (int r = 0; r < 3; ++r) {
                os << ',' << (r < static_cast<int>(resonator_pops.size()) ? resonator_pops[r][i] : 0.0);
            }
            double total = 0.0;
            for (const auto& col : transmon_pops) total += col[i];
            os << ',' << std::abs(total - 1.0) << '\n';
        }
        os.precision(old_precision);
    }
};

/// Right-hand side of the master equation.
inline Operator lindblad_rhs(const Operator& rho, const Operator& h,
                             const std::vector<Operator>& collapses) {
    if (rho.rows() != rho.cols() || h.rows() != rho.rows() || h.cols() != rho.cols()) {
        throw InvalidArgument("lindblad_rhs: shape mismatch between rho and H");
    }
    const cplx i(0.0, 1.0);
    Operator out = -i * (h * rho - rho * h);
    for (const auto& l : collapses) {
        if (l.rows() != rho.rows() || l.cols() != rho.cols()) {
            throw InvalidArgument("lindblad_rhs: shape mismatch between rho and a collapse operator");
        }
        const Operator ldl = l.adjoint() * l;
        out += l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl);
    }
    return out;
}

/// Column-stacking superoperator: vec(d rho/dt) = L vec(rho).
inline Superoperator liouvillian(const Operator& h, const std::vector<Operator>& collapses) {
    const Eigen::Index n = h.rows();
    const Operator id = Operator::Identity(n, n);
    const cplx i(0.0, 1.0);
    Superoperator l = -i * (kron(id, h) - kron(h.transpose(), id));
    for (const auto& c : collapses) {
        const Operator cdc = c.adjoint() * c;
        l += kron(c.conjugate(), c) - 0.5 * kron(id, cdc) - 0.5 * kron(cdc.transpose(), id);
    }
    return l;
}

/// One RK4 step of the linear autonomous system x' = L x as a matrix.
inline Superoperator rk4_step_map(const Superoperator& l, double h) {
    const Eigen::Index n = l.rows();
    const Superoperator id = Superoperator::Identity(n, n);
    const Superoperator hl = h * l;
    Superoperator m = id + hl / 4.0;
    m = id + hl * m / 3.0;
    m = id + hl * m / 2.0;
    m = id + hl * m;
    return m;
}

/// Removes rounding drift from a column-stacking map of a Lindblad flow:
/// symmetrizes it so that S(rho') = S(rho)', then makes the trace row
/// (sum of rows i*(d+1)) exactly vec(I)^T.
inline Superoperator physical_map(Superoperator m) {
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(m.rows()))));
    // vec(rho^T) = P vec(rho); the adjoint-covariant part is (S + P conj(S) P) / 2
    auto swap = [d](Eigen::Index k) { return (k % d) * d + k / d; };
    Superoperator mirrored(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) mirrored(r, c) = std::conj(m(swap(r), swap(c)));
    }
    m = 0.5 * (m + mirrored);
    Eigen::RowVectorXcd drift = Eigen::RowVectorXcd::Zero(m.cols());
    for (Eigen::Index i = 0; i < d; ++i) drift += m.row(i * (d + 1));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c % (d + 1) == 0) drift(c) -= 1.0;
    }
    for (Eigen::Index i = 0; i < d; ++i) m.row(i * (d + 1)) -= drift / static_cast<double>(d);
    return m;
}

inline Superoperator matrix_power(Superoperator base, long long n) {
    Superoperator result = Superoperator::Identity(base.rows(), base.cols());
    bool first = true;
    while (n > 0) {
        if (n & 1) {
            if (first) {
                result = base;
                first = false;
            } else {
                result = (result * base).eval();
            }
        }
        n >>= 1;
        if (n > 0) base = (base * base).eval();
    }
    return result;
}

/// Unitary of an ideal rotation embedded in the joint space (identity
/// outside the chosen two-level transmon subspace).
inline Operator rotation_unitary(const IdealRotation& rot, const HilbertSpec& spec) {
    const int lo = rot.subspace == RotationSubspace::ge ? level::g : level::e;
    const int hi = lo + 1;
    const double half = 0.5 * rot.effective_angle();
    const cplx i(0.0, 1.0);
    Operator u = identity(spec.n_transmon);
    // exp(-i half (cos p sx + sin p sy)) = cos(half) I - i sin(half) (cos p sx + sin p sy)
    u(lo, lo) = std::cos(half);
    u(hi, hi) = std::cos(half);
    u(lo, hi) = -i * std::sin(half) * std::polar(1.0, -rot.phase);
    u(hi, lo) = -i * std::sin(half) * std::polar(1.0, rot.phase);
    return embed(u, Subsystem::transmon, spec);
}

/// Phase added to each pulse's drive so that consecutive pulses in different
/// rotating frames compose against a common reference frame. Zero for
/// non-pulse segments.
inline std::vector<double> frame_phase_bookkeeping(const Schedule& schedule, const DeviceParams& p,
                                                   double reference_frame_ghz) {
    std::vector<double> out;
    out.reserve(schedule.segments().size());
    for (const auto& seg : schedule.segments()) {
        if (const auto* pulse = std::get_if<Pulse>(&seg)) {
            out.push_back(-two_pi * (pulse->frame_frequency(p) - reference_frame_ghz) * pulse->start);
        } else {
            out.push_back(0.0);
        }
    }
    return out;
}

/// Default reference frame: the first pulse's frame, else omega_ge.
inline double default_reference_frame(const Schedule& schedule, const DeviceParams& p) {
    for (const auto& seg : schedule.segments()) {
        if (const auto* pulse = std::get_if<Pulse>(&seg)) return pulse->frame_frequency(p);
    }
    return p.omega_ge;
}

/// Stateful stepper over one trajectory. Holds the density matrix in the
/// reference frame between segments.
class Evolver {
public:
    Evolver(const SystemModel& model, IntegratorCfg cfg, double reference_frame_ghz)
        : model_(model), cfg_(cfg), ref_frame_(reference_frame_ghz) {
        cfg_.validate();
        const auto& cs = model_.collapse_operators();
        Operator k = Operator::Zero(model_.spec().dim(), model_.spec().dim());
        for (const auto& c : cs) k += 0.5 * c.adjoint() * c;
        anti_ = k;
    }

    [[nodiscard]] const SystemModel& model() const { return model_; }
    [[nodiscard]] const IntegratorCfg& cfg() const { return cfg_; }
    [[nodiscard]] double reference_frame() const { return ref_frame_; }

    /// Runs a whole schedule, recording into trace when given.
    Operator run(Operator rho, const Schedule& schedule, TimeTrace* trace) {
        schedule.validate();
        const DeviceParams& p = model_.params();
        const auto phases = frame_phase_bookkeeping(schedule, p, ref_frame_);
        double t = schedule.start();
        if (trace) trace->record(t, rho, model_.spec());
        for (std::size_t s = 0; s < schedule.segments().size(); ++s) {
            const Segment& seg = schedule.segments()[s];
            if (const auto* rot = std::get_if<IdealRotation>(&seg)) {
                rho = apply_rotation(rho, *rot);
                t += rot->bookkeeping_duration;
                if (trace) trace->record(t, rho, model_.spec());
            } else if (const auto* idle = std::get_if<Idle>(&seg)) {
                rho = idle_for(std::move(rho), idle->duration, t, trace);
                t += idle->duration;
            } else {
                const auto& pulse = std::get<Pulse>(seg);
                rho = pulse_pieces(std::move(rho), pulse, phases[s], 0, pulse.envelope.pieces().size(),
                                   t, trace);
                rho = leave_frame(rho, pulse.frame_frequency(p), pulse.duration());
                t += pulse.duration();
            }
        }
        return rho;
    }

    [[nodiscard]] Operator apply_rotation(const Operator& rho, const IdealRotation& rot) const {
        const Operator u = rotation_unitary(rot, model_.spec());
        return u * rho * u.adjoint();
    }

    /// Free evolution in the reference frame.
    Operator idle_for(Operator rho, double duration, double t0, TimeTrace* trace) {
        if (duration <= 0.0) return rho;
        return constant_stretch(std::move(rho), ref_frame_, cplx(0.0, 0.0), duration, t0, trace);
    }

    /// Evolves pieces [first, last) of a pulse in its own frame; t_pulse_start
    /// is the absolute start time used for sampling.
    Operator pulse_pieces(Operator rho, const Pulse& pulse, double frame_phase, std::size_t first,
                          std::size_t last, double t_pulse_start, TimeTrace* trace) {
        const double frame = pulse.frame_frequency(model_.params());
        const cplx drive = std::polar(pulse.amplitude, pulse.phase + frame_phase);
        const auto pieces = pulse.envelope.pieces();
        for (std::size_t k = first; k < last; ++k) {
            const auto& piece = pieces[k];
            const double t0 = t_pulse_start + piece.begin;
            if (piece.constant) {
                const double s = pulse.envelope.shape(0.5 * (piece.begin + piece.end));
                rho = constant_stretch(std::move(rho), frame, drive * s, piece.end - piece.begin, t0,
                                       trace);
            } else {
                rho = varying_stretch(std::move(rho), frame, drive, pulse.envelope, piece, t0, trace);
            }
        }
        return rho;
    }

    /// Rotates a state from the pulse frame back to the reference frame after
    /// a pulse of the given duration.
    [[nodiscard]] Operator leave_frame(const Operator& rho, double pulse_frame_ghz,
                                       double duration) const {
        const double phi = -two_pi * (pulse_frame_ghz - ref_frame_) * duration;
        if (phi == 0.0) return rho;
        const Operator& n = model_.number();
        Operator out = rho;
        for (Eigen::Index i = 0; i < rho.rows(); ++i) {
            for (Eigen::Index j = 0; j < rho.cols(); ++j) {
                out(i, j) *= std::polar(1.0, phi * (n(i, i).real() - n(j, j).real()));
            }
        }
        return out;
    }

    /// Constant-generator evolution of `duration` ns: whole steps of dt, then
    /// one shorter step for the remainder.
    Operator constant_stretch(Operator rho, double frame, cplx drive, double duration, double t0,
                              TimeTrace* trace) {
        const StepPlan plan = step_plan(duration);
        const Key key{frame, drive.real(), drive.imag(), cfg_.dt};
        Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho.data(), rho.size());
        long long done = 0;
        if (trace && cfg_.sample_every > 0) {
            const long long chunk = cfg_.sample_every;
            const Superoperator& chunk_map = power_cached(key, chunk);
            while (done + chunk <= plan.full) {
                v = chunk_map * v;
                done += chunk;
                if (done < plan.full || plan.rem > 0.0) {
                    trace->record(t0 + cfg_.dt * static_cast<double>(done), as_matrix(v), model_.spec());
                }
            }
        }
        if (done < plan.full) v = power_cached(key, plan.full - done) * v;
        if (plan.rem > 0.0) v = power_cached(Key{frame, drive.real(), drive.imag(), plan.rem}, 1) * v;
        Operator out = as_matrix(v);
        if (trace) trace->record(t0 + duration, out, model_.spec());
        return out;
    }

    /// Plain RK4 on the density matrix for a time-dependent envelope piece.
    Operator varying_stretch(Operator rho, double frame, cplx drive, const Envelope& env,
                             const EnvelopePiece& piece, double t0, TimeTrace* trace) {
        const double duration = piece.end - piece.begin;
        const StepPlan plan = step_plan(duration);
        const Operator h_static = model_.static_hamiltonian(frame);
        const Operator h_drive = model_.drive_hamiltonian(drive);
        const cplx i(0.0, 1.0);
        const auto& cs = model_.collapse_operators();
        // effective non-Hermitian Hamiltonian form of the right-hand side
        auto rhs = [&](const Operator& r, double tau) {
            const Operator heff = h_static + env.shape(tau) * h_drive - i * anti_;
            Operator out = -i * (heff * r - r * heff.adjoint());
            for (const auto& c : cs) out.noalias() += c * r * c.adjoint();
            return out;
        };
        auto step = [&](double tau, double h) {
            const Operator k1 = rhs(rho, tau);
            const Operator k2 = rhs(rho + 0.5 * h * k1, tau + 0.5 * h);
            const Operator k3 = rhs(rho + 0.5 * h * k2, tau + 0.5 * h);
            const Operator k4 = rhs(rho + h * k3, tau + h);
            rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        };
        for (long long k = 0; k < plan.full; ++k) {
            step(piece.begin + cfg_.dt * static_cast<double>(k), cfg_.dt);
            if (trace && cfg_.sample_every > 0 && (k + 1) % cfg_.sample_every == 0 &&
                (k + 1 < plan.full || plan.rem > 0.0)) {
                trace->record(t0 + cfg_.dt * static_cast<double>(k + 1), rho, model_.spec());
            }
        }
        if (plan.rem > 0.0) step(piece.end - plan.rem, plan.rem);
        if (trace) trace->record(t0 + duration, rho, model_.spec());
        return rho;
    }

    struct StepPlan {
        long long full;  // steps of exactly dt
        double rem;      // final partial step, 0 when duration is a multiple of dt
    };

    [[nodiscard]] StepPlan step_plan(double duration) const {
        const double x = duration / cfg_.dt;
        const long long full = static_cast<long long>(std::floor(x + 1e-9));
        const double rem = duration - cfg_.dt * static_cast<double>(full);
        return {full, rem > 1e-9 * cfg_.dt ? rem : 0.0};
    }

private:
    /// Identifies a constant stretch: frame (GHz), drive (GHz), step h (ns).
    struct Key {
        double frame;
        double re;
        double im;
        double h;
        auto operator<=>(const Key&) const = default;
    };

    /// R(hL)^n for the generator of `key`, cached.
    const Superoperator& power_cached(const Key& key, long long n) {
        auto it = powers_.find({key, n});
        if (it != powers_.end()) return it->second;
        auto step = steps_.find(key);
        if (step == steps_.end()) {
            const Superoperator gen = liouvillian(model_.hamiltonian(key.frame, cplx(key.re, key.im)),
                                                  model_.collapse_operators());
            step = steps_.emplace(key, rk4_step_map(gen, key.h)).first;
        }
        return powers_.emplace(std::pair{key, n}, physical_map(matrix_power(step->second, n)))
            .first->second;
    }

    [[nodiscard]] Operator as_matrix(const Eigen::VectorXcd& v) const {
        const int d = model_.spec().dim();
        return Eigen::Map<const Operator>(v.data(), d, d);
    }

    const SystemModel& model_;
    IntegratorCfg cfg_;
    double ref_frame_;
    Operator anti_;
    std::map<Key, Superoperator> steps_;
    std::map<std::pair<Key, long long>, Superoperator> powers_;
};

namespace detail {

inline TimeTrace evolve_once(const Operator& rho0, const Schedule& schedule, const SystemModel& model,
                             const IntegratorCfg& cfg, double reference_frame) {
    Evolver ev(model, cfg, reference_frame);
    TimeTrace trace;
    trace.final_state = ev.run(rho0, schedule, &trace);
    return trace;
}

}  // namespace detail

/// Integrates rho0 through the schedule. With cfg.convergence_check the run
/// is repeated at dt/2 (same sample instants) and any population differing
/// by more than 1e-6 raises ConvergenceError.
inline TimeTrace evolve(const DensityMatrix& rho0, const Schedule& schedule, const SystemModel& model,
                        const IntegratorCfg& cfg, std::optional<double> reference_frame = {}) {
    if (rho0.dim() != model.spec().dim()) {
        throw InvalidArgument("evolve: initial state dimension does not match Hilbert spec");
    }
    const double ref = reference_frame.value_or(default_reference_frame(schedule, model.params()));
    TimeTrace trace = detail::evolve_once(rho0.matrix(), schedule, model, cfg, ref);
    if (cfg.convergence_check) {
        IntegratorCfg fine = cfg;
        fine.dt = cfg.dt / 2.0;
        fine.sample_every = cfg.sample_every * 2;
        const TimeTrace check = detail::evolve_once(rho0.matrix(), schedule, model, fine, ref);
        if (check.times.size() != trace.times.size()) {
            throw ConvergenceError("convergence check: sample grids differ between dt and dt/2");
        }
        double worst = 0.0;
        for (std::size_t q = 0; q < trace.transmon_pops.size(); ++q) {
            for (std::size_t i = 0; i < trace.times.size(); ++i) {
                worst = std::max(worst, std::abs(trace.transmon_pops[q][i] - check.transmon_pops[q][i]));
            }
        }
        for (std::size_t r = 0; r < trace.resonator_pops.size(); ++r) {
            for (std::size_t i = 0; i < trace.times.size(); ++i) {
                worst = std::max(worst, std::abs(trace.resonator_pops[r][i] - check.resonator_pops[r][i]));
            }
        }
        if (worst > 1e-6) {
            throw ConvergenceError("convergence check: halving dt changed a population by " +
                                   std::to_string(worst));
        }
    }
    return trace;
}

inline TimeTrace evolve(const DensityMatrix& rho0, const Schedule& schedule, const DeviceParams& p,
                        const HilbertSpec& spec, const IntegratorCfg& cfg) {
    const SystemModel model(p, spec);
    return evolve(rho0, schedule, model, cfg);
}

}  // namespace resetsim
