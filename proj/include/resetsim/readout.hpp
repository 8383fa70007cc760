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

// Emulated single-shot IQ readout and linear state discrimination.

#pragma once

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "resetsim/errors.hpp"
#include "resetsim/quantum_core.hpp"

namespace resetsim {

using Rng = boost::random::mt19937_64;

/// Independent stream seed for task `index` under a master seed (splitmix64).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Three isotropic Gaussian blobs in the IQ plane, one per transmon state
/// g, e, f. Populations above f are read out as f.
struct ReadoutModel {
    std::array<cplx, 3> iq_centers{cplx(2.17, 0.0), cplx(-2.17, 1.5), cplx(-2.17, 0.0)};
    double blob_sigma = 1.0;
    std::uint64_t seed = 1234;

    void validate() const {
        if (!(blob_sigma > 0.0) || !std::isfinite(blob_sigma)) {
            throw InvalidArgument("readout.blob_sigma must be > 0");
        }
        for (std::size_t i = 0; i < 3; ++i) {
            if (!std::isfinite(iq_centers[i].real()) || !std::isfinite(iq_centers[i].imag())) {
                throw InvalidArgument("readout centers must be finite");
            }
            for (std::size_t j = i + 1; j < 3; ++j) {
                if (iq_centers[i] == iq_centers[j]) {
                    throw InvalidArgument("readout centers must be distinct");
                }
            }
        }
    }

    /// Blob geometry with |center_f - center_g| / sigma = ratio, keeping the
    /// angular layout of the default model.
    [[nodiscard]] static ReadoutModel with_separation(double ratio, double sigma = 1.0) {
        ReadoutModel m;
        const double half = 0.5 * ratio * sigma;
        m.iq_centers = {cplx(half, 0.0), cplx(-half, 0.69 * half), cplx(-half, 0.0)};
        m.blob_sigma = sigma;
        return m;
    }
};

struct ShotSet {
    std::vector<std::array<double, 2>> points;
    std::vector<int> labels;  // transmon level per point; empty when unlabeled

    [[nodiscard]] std::size_t size() const { return points.size(); }
    [[nodiscard]] bool labeled() const { return !labels.empty(); }

    /// Only the points carrying the given label.
    [[nodiscard]] ShotSet with_label(int label) const {
        ShotSet out;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == label) {
                out.points.push_back(points[i]);
                out.labels.push_back(label);
            }
        }
        return out;
    }

    void append(const ShotSet& other) {
        if (labeled() != other.labeled() && !points.empty() && !other.points.empty()) {
            throw InvalidArgument("cannot merge labeled and unlabeled shot sets");
        }
        points.insert(points.end(), other.points.begin(), other.points.end());
        labels.insert(labels.end(), other.labels.begin(), other.labels.end());
    }
};

/// Draws n shots: a level per shot from pops, then an IQ point from that
/// level's blob. Deterministic for a fixed rng state.
inline ShotSet readout_shots(const std::vector<double>& pops, const ReadoutModel& model, std::size_t n,
                             Rng& rng) {
    model.validate();
    if (n == 0) throw InvalidArgument("readout_shots: n must be > 0");
    if (pops.size() < 3) throw InvalidArgument("readout_shots: need populations for g, e, f");
    std::array<double, 3> w{pops[0], pops[1], 0.0};
    for (std::size_t k = 2; k < pops.size(); ++k) w[2] += pops[k];
    double total = 0.0;
    for (double& x : w) {
        if (x < 0.0 && x > -1e-8) x = 0.0;
        if (!(x >= 0.0)) throw InvalidArgument("readout_shots: populations must be non-negative");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-6) throw InvalidArgument("readout_shots: populations must sum to 1");

    boost::random::uniform_01<double> uni;
    boost::random::normal_distribution<double> gauss(0.0, model.blob_sigma);
    ShotSet out;
    out.points.reserve(n);
    out.labels.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        const double u = uni(rng) * total;
        int level = 2;
        if (u < w[0]) {
            level = 0;
        } else if (u < w[0] + w[1]) {
            level = 1;
        }
        const cplx c = model.iq_centers[static_cast<std::size_t>(level)];
        const double i_val = c.real() + gauss(rng);
        const double q_val = c.imag() + gauss(rng);
        out.points.push_back({i_val, q_val});
        out.labels.push_back(level);
    }
    return out;
}

inline ShotSet readout_shots(const std::vector<double>& pops, const ReadoutModel& model, std::size_t n) {
    Rng rng(model.seed);
    return readout_shots(pops, model, n, rng);
}

/// Decision value normal . point + offset; positive means excited.
struct LinearBoundary {
    std::array<double, 2> normal{1.0, 0.0};
    double offset = 0.0;

    [[nodiscard]] double decision(const std::array<double, 2>& pt) const {
        return normal[0] * pt[0] + normal[1] * pt[1] + offset;
    }
    [[nodiscard]] bool excited(const std::array<double, 2>& pt) const { return decision(pt) > 0.0; }
};

namespace detail {

inline Eigen::Vector2d mean_of(const ShotSet& s) {
    Eigen::Vector2d m = Eigen::Vector2d::Zero();
    for (const auto& p : s.points) m += Eigen::Vector2d(p[0], p[1]);
    return m / static_cast<double>(s.size());
}

inline Eigen::Matrix2d scatter_of(const ShotSet& s, const Eigen::Vector2d& mean) {
    Eigen::Matrix2d c = Eigen::Matrix2d::Zero();
    for (const auto& p : s.points) {
        const Eigen::Vector2d d = Eigen::Vector2d(p[0], p[1]) - mean;
        c += d * d.transpose();
    }
    return c;
}

}  // namespace detail

/// Fisher linear discriminant between ground and excited calibration shots.
/// The offset puts the boundary at the projection of the midpoint.
inline LinearBoundary train_classifier(const ShotSet& shots_g, const ShotSet& shots_f) {
    if (shots_g.size() == 0 || shots_f.size() == 0) {
        throw InvalidArgument("train_classifier: both shot sets must be non-empty");
    }
    const Eigen::Vector2d mg = detail::mean_of(shots_g);
    const Eigen::Vector2d mf = detail::mean_of(shots_f);
    const Eigen::Vector2d diff = mf - mg;
    const double scale = std::max({mg.norm(), mf.norm(), 1.0});
    if (!(diff.norm() > 1e-12 * scale)) {
        throw InvalidArgument("train_classifier: class means coincide, boundary is degenerate");
    }
    const double dof = std::max(1.0, static_cast<double>(shots_g.size() + shots_f.size()) - 2.0);
    Eigen::Matrix2d pooled = (detail::scatter_of(shots_g, mg) + detail::scatter_of(shots_f, mf)) / dof;
    // ridge keeps point-mass classes well posed
    pooled += 1e-12 * (pooled.trace() + diff.squaredNorm()) * Eigen::Matrix2d::Identity();
    Eigen::Vector2d w = pooled.ldlt().solve(diff);
    w /= w.norm();
    LinearBoundary b;
    b.normal = {w(0), w(1)};
    b.offset = -w.dot(0.5 * (mg + mf));
    return b;
}

/// F = 1 - [P(g|f) + P(f|g)] / 2 over the g- and f-labeled shots.
inline double assignment_fidelity(const LinearBoundary& b, const ShotSet& labeled) {
    if (!labeled.labeled() || labeled.labels.size() != labeled.points.size()) {
        throw InvalidArgument("assignment_fidelity: shots must carry labels");
    }
    std::size_t n_g = 0;
    std::size_t n_f = 0;
    std::size_t g_as_f = 0;
    std::size_t f_as_g = 0;
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        const bool excited = b.excited(labeled.points[i]);
        if (labeled.labels[i] == level::g) {
            ++n_g;
            if (excited) ++g_as_f;
        } else if (labeled.labels[i] == level::f) {
            ++n_f;
            if (!excited) ++f_as_g;
        }
    }
    if (n_g == 0 || n_f == 0) {
        throw InvalidArgument("assignment_fidelity: both g and f labels are required");
    }
    return 1.0 - 0.5 * (static_cast<double>(f_as_g) / static_cast<double>(n_f) +
                        static_cast<double>(g_as_f) / static_cast<double>(n_g));
}

struct PopulationEstimate {
    double value = 0.0;
    double p25 = 0.0;
    double p75 = 0.0;
};

namespace detail {

/// Linear-interpolated percentile of sorted data, q in [0, 1].
inline double percentile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

/// Excited fraction of shots with a bootstrap 25/75 percentile interval.
inline PopulationEstimate population_estimate(const LinearBoundary& b, const ShotSet& shots,
                                              std::size_t repetitions = 200, std::uint64_t seed = 1) {
    if (shots.size() == 0) throw InvalidArgument("population_estimate: no shots");
    std::vector<char> excited(shots.size());
    std::size_t count = 0;
    for (std::size_t i = 0; i < shots.size(); ++i) {
        excited[i] = b.excited(shots.points[i]) ? 1 : 0;
        count += static_cast<std::size_t>(excited[i]);
    }
    PopulationEstimate out;
    const double n = static_cast<double>(shots.size());
    out.value = static_cast<double>(count) / n;
    if (repetitions == 0) {
        out.p25 = out.p75 = out.value;
        return out;
    }
    Rng rng(seed);
    boost::random::uniform_int_distribution<std::size_t> pick(0, shots.size() - 1);
    std::vector<double> samples;
    samples.reserve(repetitions);
    for (std::size_t r = 0; r < repetitions; ++r) {
        std::size_t c = 0;
        for (std::size_t i = 0; i < shots.size(); ++i) c += static_cast<std::size_t>(excited[pick(rng)]);
        samples.push_back(static_cast<double>(c) / n);
    }
    std::sort(samples.begin(), samples.end());
    out.p25 = detail::percentile(samples, 0.25);
    out.p75 = detail::percentile(samples, 0.75);
    return out;
}

/// Removes readout assignment errors from a measured excited fraction:
/// (raw - P(f|g)) / (1 - P(f|g) - P(g|f)), clamped to [0, 1].
inline double assignment_corrected(double raw, double p_exc_given_g, double p_g_given_exc) {
    const double contrast = 1.0 - p_exc_given_g - p_g_given_exc;
    if (!(contrast > 0.0)) throw InvalidArgument("assignment_corrected: readout has no contrast");
    return std::clamp((raw - p_exc_given_g) / contrast, 0.0, 1.0);
}

/// Fidelity of the optimal boundary between two isotropic blobs, 1 - Phi(-d / 2 sigma).
inline double optimal_two_blob_fidelity(double separation_over_sigma) {
    return 1.0 - 0.5 * std::erfc(separation_over_sigma / (2.0 * std::numbers::sqrt2));
}

}  // namespace resetsim
