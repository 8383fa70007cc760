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

// Least-squares fits and feature extraction for calibration traces.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "resetsim/errors.hpp"

namespace resetsim {

struct FitResult {
    std::map<std::string, double> params;
    Eigen::MatrixXd covariance;
    double residual_rms = 0.0;
    bool converged = false;

    [[nodiscard]] double at(const std::string& key) const {
        auto it = params.find(key);
        if (it == params.end()) throw InvalidArgument("fit result has no parameter '" + key + "'");
        return it->second;
    }
};

namespace detail {

/// Residual model for the MINPACK-style Levenberg-Marquardt driver.
struct CurveFunctor {
    using Model = std::function<void(const Eigen::VectorXd& p, double x, double& value,
                                     Eigen::Ref<Eigen::RowVectorXd> grad)>;

    std::span<const double> x;
    std::span<const double> y;
    int n_params;
    Model model;

    [[nodiscard]] int inputs() const { return n_params; }
    [[nodiscard]] int values() const { return static_cast<int>(x.size()); }

    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& fvec) const {
        Eigen::RowVectorXd grad(n_params);
        for (std::size_t i = 0; i < x.size(); ++i) {
            double v = 0.0;
            model(p, x[i], v, grad);
            fvec(static_cast<Eigen::Index>(i)) = v - y[i];
        }
        return 0;
    }

    int df(const Eigen::VectorXd& p, Eigen::MatrixXd& fjac) const {
        Eigen::RowVectorXd grad(n_params);
        for (std::size_t i = 0; i < x.size(); ++i) {
            double v = 0.0;
            model(p, x[i], v, grad);
            fjac.row(static_cast<Eigen::Index>(i)) = grad;
        }
        return 0;
    }
};

inline constexpr int max_iterations = 200;
inline constexpr double gradient_tolerance = 1e-10;

/// Damped least squares with analytic derivatives. Returns the converged flag
/// and fills covariance / rms.
inline bool levenberg_marquardt(CurveFunctor& functor, Eigen::VectorXd& p, Eigen::MatrixXd& cov,
                                double& rms) {
    Eigen::LevenbergMarquardt<CurveFunctor> lm(functor);
    lm.parameters.maxfev = max_iterations;
    lm.parameters.gtol = gradient_tolerance;
    lm.parameters.xtol = 1e-12;
    lm.parameters.ftol = 1e-14;
    const auto status = lm.minimize(p);

    Eigen::VectorXd fvec(functor.values());
    functor(p, fvec);
    const auto n = static_cast<double>(functor.values());
    rms = std::sqrt(fvec.squaredNorm() / n);

    Eigen::MatrixXd jac(functor.values(), functor.inputs());
    functor.df(p, jac);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const double dof = std::max(1.0, n - functor.inputs());
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    cov = lu.isInvertible() ? Eigen::MatrixXd(lu.inverse() * (fvec.squaredNorm() / dof))
                            : Eigen::MatrixXd::Constant(functor.inputs(), functor.inputs(),
                                                        std::numeric_limits<double>::infinity());
    const double grad_norm = (jac.transpose() * fvec).norm();

    using S = Eigen::LevenbergMarquardtSpace::Status;
    const bool finished = status != S::ImproperInputParameters &&
                          status != S::TooManyFunctionEvaluation && status != S::UserAsked;
    return finished && p.allFinite() && lu.isInvertible() &&
           (grad_norm < std::max(gradient_tolerance, 1e-8 * (1.0 + fvec.norm())) ||
            status == S::RelativeReductionTooSmall || status == S::RelativeErrorTooSmall ||
            status == S::RelativeErrorAndReductionTooSmall || status == S::FtolTooSmall ||
            status == S::XtolTooSmall);
}

inline void require_same_size(std::span<const double> x, std::span<const double> y, const char* who) {
    if (x.size() != y.size()) throw InvalidArgument(std::string(who) + ": x and y differ in length");
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// offset + amplitude (w/2)^2 / ((x - center)^2 + (w/2)^2), w the full width.
/// The peak guess is the sample farthest from the median (lowest index on
/// ties), so dips fit with a negative amplitude.
inline FitResult fit_lorentzian(std::span<const double> x, std::span<const double> y) {
    detail::require_same_size(x, y, "fit_lorentzian");
    if (x.size() < 5) throw InvalidArgument("fit_lorentzian: need at least 5 points");
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (!(x[i] > x[i - 1])) throw InvalidArgument("fit_lorentzian: x must be strictly increasing");
    }
    // work in scaled coordinates u = (x - x0) / span for conditioning
    const double x0 = x.front();
    const double scale = x.back() - x.front();
    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = (x[i] - x0) / scale;

    const double base = detail::median({y.begin(), y.end()});
    std::size_t peak = 0;
    for (std::size_t i = 1; i < y.size(); ++i) {
        if (std::abs(y[i] - base) > std::abs(y[peak] - base)) peak = i;
    }
    const double amp0 = y[peak] - base;
    // full width at half the peak excursion
    std::size_t lo = peak;
    std::size_t hi = peak;
    while (lo > 0 && std::abs(y[lo - 1] - base) > 0.5 * std::abs(amp0)) --lo;
    while (hi + 1 < y.size() && std::abs(y[hi + 1] - base) > 0.5 * std::abs(amp0)) ++hi;
    const double du = u.size() > 1 ? u[1] - u[0] : 1.0;
    const double width0 = std::max(u[hi] - u[lo], du);

    detail::CurveFunctor functor{
        u, y, 4, [](const Eigen::VectorXd& p, double xv, double& v, Eigen::Ref<Eigen::RowVectorXd> g) {
            const double c = p(0);
            const double hw = 0.5 * p(1);
            const double d = xv - c;
            const double den = d * d + hw * hw;
            const double shape = hw * hw / den;
            v = p(3) + p(2) * shape;
            g(0) = p(2) * 2.0 * d * hw * hw / (den * den);
            g(1) = p(2) * (hw * den - hw * hw * hw) / (den * den);  // d/dw = 1/2 d/dhw
            g(2) = shape;
            g(3) = 1.0;
        }};
    Eigen::VectorXd p(4);
    p << u[peak], width0, amp0, base;
    FitResult out;
    Eigen::MatrixXd cov;
    bool ok = detail::levenberg_marquardt(functor, p, cov, out.residual_rms);
    const double center = x0 + p(0) * scale;
    ok = ok && center >= x.front() && center <= x.back();
    out.converged = ok;
    out.params = {{"center", center}, {"width", std::abs(p(1)) * scale}, {"amplitude", p(2)},
                  {"offset", p(3)}};
    Eigen::DiagonalMatrix<double, 4> jac(scale, scale, 1.0, 1.0);
    out.covariance = jac * cov * jac;
    return out;
}

/// Ordinary least squares for c0 + c1 x + c2 x^2.
inline FitResult fit_quadratic(std::span<const double> x, std::span<const double> y) {
    detail::require_same_size(x, y, "fit_quadratic");
    if (x.size() < 3) throw InvalidArgument("fit_quadratic: need at least 3 points");
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = x[i];
        design(i, 2) = x[i] * x[i];
        rhs(i) = y[i];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < 3) {
        throw InvalidArgument("fit_quadratic: rank-deficient design (need 3 distinct x values)");
    }
    const Eigen::VectorXd c = qr.solve(rhs);
    const Eigen::VectorXd res = design * c - rhs;
    FitResult out;
    out.params = {{"c0", c(0)}, {"c1", c(1)}, {"c2", c(2)}};
    out.residual_rms = std::sqrt(res.squaredNorm() / static_cast<double>(n));
    const double dof = std::max<double>(1.0, static_cast<double>(n - 3));
    out.covariance = (design.transpose() * design).inverse() * (res.squaredNorm() / dof);
    out.converged = true;
    return out;
}

/// offset + amplitude exp(-rate t) cos(2 pi freq t + phase), t in ns, rate
/// and freq reported per us. Initial frequency from the dominant bin of the
/// discrete spectrum of the mean-removed data.
inline FitResult fit_damped_sinusoid(std::span<const double> t, std::span<const double> y) {
    detail::require_same_size(t, y, "fit_damped_sinusoid");
    if (t.size() < 10) throw InvalidArgument("fit_damped_sinusoid: need at least 10 points");
    const std::size_t n = t.size();
    // time in us, measured from the first sample
    const double t0 = t.front();
    std::vector<double> tu(n);
    for (std::size_t i = 0; i < n; ++i) tu[i] = (t[i] - t0) * 1e-3;
    const double span = tu.back();
    if (!(span > 0.0)) throw InvalidArgument("fit_damped_sinusoid: degenerate time axis");

    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double best_power = -1.0;
    double f0 = 1.0 / span;
    double phase0 = 0.0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        const double f = static_cast<double>(k) / span;
        double re = 0.0;
        double im = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            re += (y[i] - mean) * std::cos(2.0 * std::numbers::pi * f * tu[i]);
            im -= (y[i] - mean) * std::sin(2.0 * std::numbers::pi * f * tu[i]);
        }
        const double power = re * re + im * im;
        if (power > best_power * (1.0 + 1e-12)) {
            best_power = power;
            f0 = f;
            phase0 = std::atan2(im, re);
        }
    }
    double amp0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) amp0 = std::max(amp0, std::abs(y[i] - mean));
    const double offset0 = y.back();

    detail::CurveFunctor functor{
        tu, y, 5, [](const Eigen::VectorXd& p, double tv, double& v, Eigen::Ref<Eigen::RowVectorXd> g) {
            const double rate = p(0);
            const double freq = p(1);
            const double ph = p(2);
            const double amp = p(3);
            const double decay = std::exp(-rate * tv);
            const double arg = 2.0 * std::numbers::pi * freq * tv + ph;
            const double c = std::cos(arg);
            const double s = std::sin(arg);
            v = p(4) + amp * decay * c;
            g(0) = -tv * amp * decay * c;
            g(1) = -amp * decay * s * 2.0 * std::numbers::pi * tv;
            g(2) = -amp * decay * s;
            g(3) = decay * c;
            g(4) = 1.0;
        }};
    Eigen::VectorXd p(5);
    p << 1.0 / span, f0, phase0, amp0, offset0;
    FitResult out;
    Eigen::MatrixXd cov;
    out.converged = detail::levenberg_marquardt(functor, p, cov, out.residual_rms);
    // canonical form: positive amplitude and frequency, phase in (-pi, pi]
    double amp = p(3);
    double freq = p(1);
    double ph = p(2);
    if (freq < 0.0) {
        freq = -freq;
        ph = -ph;
    }
    if (amp < 0.0) {
        amp = -amp;
        ph += std::numbers::pi;
    }
    ph = std::remainder(ph, 2.0 * std::numbers::pi);
    out.params = {{"rate_per_us", p(0)}, {"freq_per_us", freq}, {"phase", ph}, {"amplitude", amp},
                  {"offset", p(4)}};
    out.covariance = cov;
    return out;
}

struct Minimum {
    double t;
    double y;
};

/// First discrete local minimum refined by the parabola through it and its
/// neighbours; the vertex is kept within one sample of the discrete argmin.
inline Minimum first_minimum(std::span<const double> t, std::span<const double> y) {
    detail::require_same_size(t, y, "first_minimum");
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (y[i] < y[i - 1] && y[i] <= y[i + 1]) {
            const double x0 = t[i - 1];
            const double x1 = t[i];
            const double x2 = t[i + 1];
            const double y0 = y[i - 1];
            const double y1 = y[i];
            const double y2 = y[i + 1];
            const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
            const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
            const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
            const double c = y1 - a * x1 * x1 - b * x1;
            if (!(a > 0.0)) return {x1, y1};
            const double tv = std::clamp(-b / (2.0 * a), x0, x2);
            return {tv, std::min(y1, a * tv * tv + b * tv + c)};
        }
    }
    throw NoMinimumError("first_minimum: trace has no interior local minimum");
}

}  // namespace resetsim
