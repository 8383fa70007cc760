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

// Dense operator algebra on the truncated transmon (x) resonator space.
//
// Basis ordering is transmon-major everywhere in this library:
//
//     index(q, r) = q * n_resonator + r
//
// with q in {g, e, f, h, ...} and r the resonator photon number.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "resetsim/errors.hpp"

namespace resetsim {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

/// Transmon level labels.
namespace level {
inline constexpr int g = 0;
inline constexpr int e = 1;
inline constexpr int f = 2;
inline constexpr int h = 3;
}  // namespace level

enum class Subsystem { transmon, resonator };

struct HilbertSpec {
    int n_transmon = 4;
    int n_resonator = 3;

    /// Throws InvalidArgument unless the truncation can host |f> and |1>.
    void validate() const {
        if (n_transmon < 3) {
            throw InvalidArgument("n_transmon must be >= 3 (the protocol needs |f>), got " +
                                  std::to_string(n_transmon));
        }
        if (n_resonator < 2) {
            throw InvalidArgument("n_resonator must be >= 2 (the protocol needs |1>), got " +
                                  std::to_string(n_resonator));
        }
    }

    [[nodiscard]] int dim() const { return n_transmon * n_resonator; }
    [[nodiscard]] int index(int q, int r) const { return q * n_resonator + r; }

    friend bool operator==(const HilbertSpec&, const HilbertSpec&) = default;
};

inline Operator identity(int dim) { return Operator::Identity(dim, dim); }

/// Truncated lowering operator: entries (i, i+1) = sqrt(i+1).
inline Operator annihilation(int dim) {
    if (dim < 2) {
        throw InvalidArgument("annihilation: dimension must be >= 2, got " + std::to_string(dim));
    }
    Operator a = Operator::Zero(dim, dim);
    for (int i = 0; i + 1 < dim; ++i) {
        a(i, i + 1) = std::sqrt(static_cast<double>(i + 1));
    }
    return a;
}

inline Operator kron(const Operator& a, const Operator& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols()) {
        throw InvalidArgument("kron: operands must be square");
    }
    return Eigen::kroneckerProduct(a, b).eval();
}

/// Lifts a single-subsystem operator to the joint space.
inline Operator embed(const Operator& op, Subsystem which, const HilbertSpec& spec) {
    const int expected = which == Subsystem::transmon ? spec.n_transmon : spec.n_resonator;
    if (op.rows() != expected || op.cols() != expected) {
        throw InvalidArgument("embed: operator of dimension " + std::to_string(op.rows()) +
                              " does not match subsystem dimension " + std::to_string(expected));
    }
    if (which == Subsystem::transmon) {
        return kron(op, identity(spec.n_resonator));
    }
    return kron(identity(spec.n_transmon), op);
}

/// |i><j| on a single subsystem of dimension dim.
inline Operator transition(int dim, int i, int j) {
    Operator m = Operator::Zero(dim, dim);
    m(i, j) = 1.0;
    return m;
}

inline StateVector basis_ket(const HilbertSpec& spec, int q, int r) {
    StateVector v = StateVector::Zero(spec.dim());
    v(spec.index(q, r)) = 1.0;
    return v;
}

inline Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

inline double hermiticity_error(const Operator& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Smallest eigenvalue of the Hermitian part of m.
inline double min_eigenvalue(const Operator& m) {
    const Operator herm = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Operator> solver(herm, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

/// Density matrix on the joint space. Construction through `from_matrix`
/// checks Hermiticity, unit trace and positivity.
class DensityMatrix {
public:
    static constexpr double hermiticity_tol = 1e-10;
    static constexpr double trace_tol = 1e-8;
    static constexpr double positivity_tol = -1e-8;

    static DensityMatrix from_matrix(Operator m) {
        if (m.rows() != m.cols()) {
            throw InvalidArgument("density matrix must be square");
        }
        if (hermiticity_error(m) > hermiticity_tol) {
            throw InvalidArgument("density matrix is not Hermitian");
        }
        if (std::abs(m.trace() - cplx(1.0)) > trace_tol) {
            throw InvalidArgument("density matrix trace differs from 1");
        }
        if (min_eigenvalue(m) < positivity_tol) {
            throw InvalidArgument("density matrix has a negative eigenvalue");
        }
        return DensityMatrix(std::move(m));
    }

    /// Wraps integrator output without re-validation; the engine tracks the
    /// physicality diagnostics separately.
    static DensityMatrix unchecked(Operator m) { return DensityMatrix(std::move(m)); }

    static DensityMatrix pure(const StateVector& psi) {
        return DensityMatrix(psi * psi.adjoint() / psi.squaredNorm());
    }

    static DensityMatrix basis(const HilbertSpec& spec, int q, int r) {
        return pure(basis_ket(spec, q, r));
    }

    [[nodiscard]] const Operator& matrix() const { return m_; }
    [[nodiscard]] int dim() const { return static_cast<int>(m_.rows()); }
    [[nodiscard]] double trace_deviation() const { return std::abs(m_.trace() - cplx(1.0)); }

private:
    explicit DensityMatrix(Operator m) : m_(std::move(m)) {}
    Operator m_;
};

struct Populations {
    std::vector<double> transmon;
    std::vector<double> resonator;

    /// 1 - p_g: everything the readout would call "excited".
    [[nodiscard]] double qubit_excited() const { return 1.0 - transmon.at(level::g); }
};

/// Partial-trace diagonals of rho.
inline Populations populations(const Operator& rho, const HilbertSpec& spec) {
    if (rho.rows() != spec.dim()) {
        throw InvalidArgument("populations: state dimension does not match Hilbert spec");
    }
    Populations p{std::vector<double>(spec.n_transmon, 0.0),
                  std::vector<double>(spec.n_resonator, 0.0)};
    for (int q = 0; q < spec.n_transmon; ++q) {
        for (int r = 0; r < spec.n_resonator; ++r) {
            const double d = rho(spec.index(q, r), spec.index(q, r)).real();
            p.transmon[q] += d;
            p.resonator[r] += d;
        }
    }
    return p;
}

inline Populations populations(const DensityMatrix& rho, const HilbertSpec& spec) {
    return populations(rho.matrix(), spec);
}

/// Boltzmann ratio x = p_e / p_g such that the normalized |e> population of
/// the geometric ladder p_k ∝ x^k over n levels equals p_e.
///
/// For n > 2 levels the map x -> p_e is not monotone on [0, 1]; only the
/// increasing branch is used, so p_e above the branch maximum (about 0.277
/// for four levels) is rejected.
inline double boltzmann_ratio(double p_e, int n_levels) {
    if (!(p_e >= 0.0 && p_e < 0.5)) {
        throw InvalidArgument("thermal population p_e must lie in [0, 0.5), got " +
                              std::to_string(p_e));
    }
    auto excited = [n_levels](double x) {
        double norm = 0.0;
        double term = 1.0;
        for (int k = 0; k < n_levels; ++k) {
            norm += term;
            term *= x;
        }
        return x / norm;
    };
    if (p_e == 0.0) return 0.0;
    // golden-section search for the top of the increasing branch
    double a = 0.0;
    double b = 1.0;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100; ++it) {
        const double c = b - phi * (b - a);
        const double d = a + phi * (b - a);
        if (excited(c) > excited(d)) {
            b = d;
        } else {
            a = c;
        }
    }
    const double x_peak = 0.5 * (a + b);
    if (p_e > excited(x_peak)) {
        throw InvalidArgument("thermal population p_e = " + std::to_string(p_e) +
                              " is not reachable by a Boltzmann ladder over " +
                              std::to_string(n_levels) + " levels");
    }
    double lo = 0.0;
    double hi = x_peak;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (excited(mid) < p_e ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Diagonal thermal state of the transmon ladder, resonator in vacuum.
inline DensityMatrix thermal_state(const HilbertSpec& spec, double p_e) {
    spec.validate();
    const double x = boltzmann_ratio(p_e, spec.n_transmon);
    std::vector<double> weights(spec.n_transmon);
    double norm = 0.0;
    double term = 1.0;
    for (int k = 0; k < spec.n_transmon; ++k) {
        weights[k] = term;
        norm += term;
        term *= x;
    }
    Operator rho = Operator::Zero(spec.dim(), spec.dim());
    for (int k = 0; k < spec.n_transmon; ++k) {
        rho(spec.index(k, 0), spec.index(k, 0)) = weights[k] / norm;
    }
    return DensityMatrix::unchecked(std::move(rho));
}

}  // namespace resetsim
