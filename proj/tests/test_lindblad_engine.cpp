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
#include <sstream>

#include "resetsim/lindblad_engine.hpp"

namespace resetsim {
namespace {

constexpr double kPi = std::numbers::pi;

DeviceParams lossless() {
    DeviceParams p;
    p.kappa_r = 1e-12;
    p.t1_eg = p.t1_fe = p.t1_hf = 1e15;
    p.lifetimes = LifetimeConvention::intrinsic;
    p.convention = FrequencyConvention::bare;
    return p;
}

TEST(LindbladRhs, ZeroHamiltonianNoCollapses) {
    const HilbertSpec spec;
    const Operator rho = DensityMatrix::basis(spec, level::e, 1).matrix();
    const Operator h = Operator::Zero(spec.dim(), spec.dim());
    EXPECT_EQ(lindblad_rhs(rho, h, {}).cwiseAbs().maxCoeff(), 0.0);
}

TEST(LindbladRhs, ResonatorDecayRate) {
    const double kappa = 0.00426;
    const Operator a = annihilation(3);
    Operator rho = Operator::Zero(3, 3);
    rho(1, 1) = 1.0;
    const Operator d = lindblad_rhs(rho, Operator::Zero(3, 3), {std::sqrt(kappa) * a});
    EXPECT_NEAR(d(1, 1).real(), -kappa, 1e-18);
    EXPECT_NEAR(d(0, 0).real(), kappa, 1e-18);
}

TEST(LindbladRhs, ShapeMismatch) {
    EXPECT_THROW(lindblad_rhs(identity(3), identity(4), {}), InvalidArgument);
}

TEST(LindbladRhs, MatchesLiouvillian) {
    const HilbertSpec spec;
    const SystemModel model(DeviceParams{}, spec);
    const Operator h = model.hamiltonian(2.64, cplx(0.1, 0.05));
    Operator rho = 0.6 * DensityMatrix::basis(spec, level::f, 0).matrix() +
                   0.4 * DensityMatrix::basis(spec, level::g, 1).matrix();
    rho(spec.index(2, 0), spec.index(0, 1)) = 0.2;
    rho(spec.index(0, 1), spec.index(2, 0)) = 0.2;
    const Operator direct = lindblad_rhs(rho, h, model.collapse_operators());
    const Eigen::VectorXcd v = liouvillian(h, model.collapse_operators()) *
                               Eigen::Map<const Eigen::VectorXcd>(rho.data(), rho.size());
    const Operator via = Eigen::Map<const Operator>(v.data(), spec.dim(), spec.dim());
    EXPECT_LT((direct - via).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Evolve, QubitDecayAfterOneLifetime) {
    DeviceParams p;
    p.g_coupling = 0.0;
    const HilbertSpec spec;
    Schedule s;
    s.append(Idle{44200.0});
    IntegratorCfg cfg;
    cfg.sample_every = 0;
    const TimeTrace tr = evolve(DensityMatrix::basis(spec, level::e, 0), s, p, spec, cfg);
    EXPECT_NEAR(tr.transmon_pops[level::e].back() / std::exp(-1.0), 1.0, 1e-6);
}

TEST(Evolve, DecayOraclesOverThreeLifetimes) {
    DeviceParams p;
    p.g_coupling = 0.0;
    const HilbertSpec spec;
    const SystemModel model(p, spec);
    IntegratorCfg cfg;
    cfg.sample_every = 20000;
    {
        Schedule s;
        s.append(Idle{3.0 * 44200.0});
        const TimeTrace tr = evolve(DensityMatrix::basis(spec, level::e, 0), s, model, cfg);
        for (std::size_t i = 0; i < tr.size(); ++i) {
            const double exact = std::exp(-tr.times[i] / 44200.0);
            EXPECT_NEAR(tr.transmon_pops[level::e][i] / exact, 1.0, 1e-6);
        }
    }
    {
        Schedule s;
        s.append(Idle{3.0 * 235.0});
        cfg.sample_every = 400;
        const TimeTrace tr = evolve(DensityMatrix::basis(spec, level::g, 1), s, model, cfg);
        for (std::size_t i = 0; i < tr.size(); ++i) {
            const double exact = std::exp(-4.26e-3 * tr.times[i]);
            EXPECT_NEAR(tr.resonator_pops[1][i] / exact, 1.0, 1e-6);
        }
    }
    EXPECT_NEAR(1e3 / p.kappa_r / 235.0, 1.0, 2e-3);
}

TEST(Evolve, GroundStateIsStationary) {
    const HilbertSpec spec;
    Schedule s;
    s.append(Idle{5000.0});
    const TimeTrace tr = evolve(DensityMatrix::basis(spec, level::g, 0), s, DeviceParams{}, spec, IntegratorCfg{});
    EXPECT_NEAR(tr.transmon_pops[level::g].back(), 1.0, 1e-9);
    EXPECT_NEAR(tr.resonator_pops[0].back(), 1.0, 1e-9);
}

TEST(Evolve, WeakDriveFollowsEffectiveTwoLevelModel) {
    const DeviceParams p = lossless();
    const HilbertSpec spec;
    const SystemModel model(p, spec);
    const double amp = 0.02;
    const double g_eff = std::abs(effective_coupling(p, amp));
    const double period = 1.0 / g_eff;
    Schedule s;
    s.append(Pulse{Envelope::square(period), amp, 0.0, Carrier::f0g1, f0g1_resonance(model, amp).stark_shift});
    IntegratorCfg cfg;
    cfg.sample_every = static_cast<int>(period / cfg.dt / 50.0);
    const TimeTrace tr = evolve(DensityMatrix::basis(spec, level::f, 0), s, model, cfg);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double c = std::cos(2.0 * kPi * g_eff * tr.times[i]);
        EXPECT_NEAR(tr.transmon_pops[level::f][i], c * c, 0.05) << "t=" << tr.times[i];
    }
}

TEST(Evolve, PhysicalityAlongResetSequence) {
    const HilbertSpec spec;
    ResetConfig cfg;
    cfg.f0g1_amplitude = 0.654;
    cfg.f0g1_stark_offset = -0.0154;
    cfg.auto_stark = false;
    const TimeTrace tr = evolve(DensityMatrix::basis(spec, level::e, 0), reset_sequence(DeviceParams{}, cfg),
                                DeviceParams{}, spec, IntegratorCfg{});
    EXPECT_LE(tr.diagnostics.trace_error, 1e-8);
    EXPECT_LE(tr.diagnostics.hermiticity_error, 1e-10);
    EXPECT_GE(tr.diagnostics.min_eigenvalue, -1e-8);
    for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GT(tr.times[i], tr.times[i - 1]);
    for (const auto& col : tr.transmon_pops) {
        for (double v : col) {
            EXPECT_GE(v, -1e-8);
            EXPECT_LE(v, 1.0 + 1e-8);
        }
    }
}

TEST(Evolve, PopulationsIndependentOfReferenceFrame) {
    const HilbertSpec spec;
    const SystemModel model(DeviceParams{}, spec);
    Schedule s;
    s.append(IdealRotation{RotationSubspace::ge, kPi / 2.0});
    s.append(Pulse{Envelope::gaussian(40.0, 10.0), 0.02, 0.3, Carrier::ge});
    s.append(Pulse{Envelope::square(60.0, 5.0), 0.5, 0.0, Carrier::f0g1, -0.01});
    s.append(Idle{30.0});
    IntegratorCfg cfg;
    cfg.sample_every = 1000;
    const auto rho0 = DensityMatrix::basis(spec, level::g, 0);
    const TimeTrace a = evolve(rho0, s, model, cfg, 4.9);
    const TimeTrace b = evolve(rho0, s, model, cfg, 2.2);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t q = 0; q < a.transmon_pops.size(); ++q) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_NEAR(a.transmon_pops[q][i], b.transmon_pops[q][i], 1e-8);
        }
    }
}

TEST(Evolve, IdealRotationActsOnSubspaceOnly) {
    const HilbertSpec spec;
    Schedule s;
    s.append(IdealRotation{RotationSubspace::ef, kPi});
    const auto out =
        evolve(DensityMatrix::basis(spec, level::e, 0), s, DeviceParams{}, spec, IntegratorCfg{});
    EXPECT_NEAR(populations(out.final_state, spec).transmon[level::f], 1.0, 1e-14);
    const auto g = evolve(DensityMatrix::basis(spec, level::g, 0), s, DeviceParams{}, spec, IntegratorCfg{});
    EXPECT_NEAR(populations(g.final_state, spec).transmon[level::g], 1.0, 1e-14);
}

TEST(Evolve, ConvergenceCheck) {
    const HilbertSpec spec;
    const SystemModel model(DeviceParams{}, spec);
    Schedule s;
    s.append(Pulse{Envelope::square(50.0, 5.0), 0.6, 0.0, Carrier::f0g1, -0.015});
    IntegratorCfg fine;
    fine.convergence_check = true;
    EXPECT_NO_THROW(evolve(DensityMatrix::basis(spec, level::f, 0), s, model, fine));
    IntegratorCfg coarse = fine;
    coarse.dt = 0.04;
    coarse.sample_every = 25;
    EXPECT_THROW(evolve(DensityMatrix::basis(spec, level::f, 0), s, model, coarse), ConvergenceError);
}

TEST(Evolve, RejectsMismatchedState) {
    Schedule s;
    s.append(Idle{1.0});
    EXPECT_THROW(evolve(DensityMatrix::basis(HilbertSpec{3, 2}, 0, 0), s, DeviceParams{}, HilbertSpec{},
                        IntegratorCfg{}),
                 InvalidArgument);
}

TEST(FramePhase, SinglePulseHasNoCorrection) {
    const DeviceParams p;
    Schedule s;
    s.append(Pulse{Envelope::square(10.0), 0.1, 0.0, Carrier::ge});
    const auto ph = frame_phase_bookkeeping(s, p, default_reference_frame(s, p));
    ASSERT_EQ(ph.size(), 1u);
    EXPECT_EQ(ph[0], 0.0);
}

TEST(FramePhase, SameCarrierPulsesShareCorrection) {
    const DeviceParams p;
    Schedule s;
    s.append(Pulse{Envelope::square(10.0), 0.1, 0.0, Carrier::ef});
    s.append(Idle{7.0});
    s.append(Pulse{Envelope::square(10.0), 0.1, 0.0, Carrier::ef});
    const auto ph = frame_phase_bookkeeping(s, p, default_reference_frame(s, p));
    EXPECT_EQ(ph[0], ph[2]);
}

TEST(TimeTraceCsv, HeaderAndRows) {
    const HilbertSpec spec;
    TimeTrace tr;
    tr.record(0.0, DensityMatrix::basis(spec, level::e, 0).matrix(), spec);
    tr.record(1.5, DensityMatrix::basis(spec, level::g, 1).matrix(), spec);
    std::ostringstream os;
    tr.write_csv(os);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t_ns,p_g,p_e,p_f,p_h,r0,r1,r2,trace_err");
    std::getline(in, line);
    EXPECT_EQ(line, "0,0,1,0,0,1,0,0,0");
    std::getline(in, line);
    EXPECT_EQ(line, "1.5,1,0,0,0,0,1,0,0");
}

TEST(PhysicalMap, RestoresTraceRowAndAdjointSymmetry) {
    const SystemModel model(DeviceParams{}, HilbertSpec{});
    const Superoperator l = liouvillian(model.hamiltonian(2.6, cplx(0.1, 0.0)), model.collapse_operators());
    Superoperator s = matrix_power(rk4_step_map(l, 0.0025), 1LL << 26);
    s(0, 3) += cplx(1e-9, 2e-9);
    const Superoperator m = physical_map(s);
    const int d = model.spec().dim();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        cplx tr = 0.0;
        for (int i = 0; i < d; ++i) tr += m(i * (d + 1), c);
        EXPECT_NEAR(std::abs(tr - cplx(c % (d + 1) == 0 ? 1.0 : 0.0)), 0.0, 1e-14);
    }
    const Operator rho = thermal_state(model.spec(), 0.015).matrix() +
                         0.01 * (basis_ket(model.spec(), 0, 0) * basis_ket(model.spec(), 2, 0).adjoint());
    const Operator herm = 0.5 * (rho + rho.adjoint());
    const Eigen::VectorXcd v = m * Eigen::Map<const Eigen::VectorXcd>(herm.data(), herm.size());
    EXPECT_LT(hermiticity_error(Eigen::Map<const Operator>(v.data(), d, d)), 1e-15);
}

TEST(PhysicalMap, LongIdleKeepsUnitTrace) {
    const HilbertSpec spec;
    Schedule s;
    s.append(Idle{1e6, 0.0});
    IntegratorCfg cfg;
    cfg.sample_every = 0;
    const TimeTrace tr = evolve(DensityMatrix::basis(spec, level::e, 1), s, SystemModel(DeviceParams{}, spec), cfg);
    EXPECT_LE(tr.diagnostics.trace_error, 1e-14);
    EXPECT_LE(tr.diagnostics.hermiticity_error, 1e-14);
    EXPECT_GE(tr.diagnostics.min_eigenvalue, -1e-8);
}

TEST(IntegratorCfg, Validation) {
    IntegratorCfg cfg;
    cfg.dt = 0.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
}

}  // namespace
}  // namespace resetsim
