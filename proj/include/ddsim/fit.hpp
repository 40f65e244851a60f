// Copyright 2026 The ddsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Stretched-exponential decay fit
//   p(t) = baseline + amplitude * exp(-(t / T2)^n)
// by damped Gauss-Newton (Levenberg-Marquardt) in the parameters
// (ln T2, n, amplitude[, baseline]).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ddsim/common.hpp"

namespace ddsim {

inline constexpr double kMinExponent = 0.3;
inline constexpr double kMaxExponent = 8.0;

struct FitResult {
  double t2_s = 0.0;
  double exponent_n = 0.0;
  double amplitude = 0.0;
  double baseline = 0.0;
  double rss = std::numeric_limits<double>::infinity();
  int n_iterations = 0;
  bool converged = false;
  double gradient_norm = std::numeric_limits<double>::infinity();
  /// One-sigma uncertainties from the covariance rss / (m - p) (J^T J)^-1.
  double t2_sigma_s = std::numeric_limits<double>::quiet_NaN();
  double exponent_sigma = std::numeric_limits<double>::quiet_NaN();
};

struct FitOptions {
  /// Baseline held fixed at this value; std::nullopt fits it.
  std::optional<double> fixed_baseline = 0.5;
  int max_iterations = 200;
  /// Convergence when every gradient component is below this fraction of
  /// |J_i| |r| (scale-free MINPACK-style test) or the residual vanishes.
  double gradient_tolerance = 1e-8;
  /// Also converged when an accepted step changes the parameters by less
  /// than this relative amount (needed for zero-residual data, where the
  /// gradient test sees only rounding noise).
  double step_tolerance = 1e-10;
};

struct FitSample {
  double t;
  double p;
};

inline double stretched_exp(double t, double t2, double n, double amplitude, double baseline) {
  return baseline + amplitude * std::exp(-std::pow(std::max(t, 0.0) / t2, n));
}

namespace detail {

class StretchedExpProblem {
 public:
  StretchedExpProblem(std::span<const FitSample> data, const FitOptions& opts)
      : data_(data), free_baseline_(!opts.fixed_baseline.has_value()) {}

  int n_params() const { return free_baseline_ ? 4 : 3; }

  double residuals(const Eigen::Vector4d& x, Eigen::VectorXd& r) const {
    r.resize(static_cast<Eigen::Index>(data_.size()));
    const double t2 = std::exp(x(0));
    for (std::size_t i = 0; i < data_.size(); ++i) {
      r(static_cast<Eigen::Index>(i)) =
          stretched_exp(data_[i].t, t2, x(1), x(2), x(3)) - data_[i].p;
    }
    return r.squaredNorm();
  }

  Eigen::MatrixXd jacobian(const Eigen::Vector4d& x) const {
    Eigen::MatrixXd j(static_cast<Eigen::Index>(data_.size()), n_params());
    const double t2 = std::exp(x(0));
    const double n = x(1);
    const double a = x(2);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const double t = std::max(data_[i].t, 0.0);
      if (t == 0.0) {
        j(row, 0) = 0.0;
        j(row, 1) = 0.0;
        j(row, 2) = 1.0;
      } else {
        const double lr = std::log(t / t2);
        const double u = std::exp(n * lr);
        const double e = std::exp(-u);
        j(row, 0) = a * e * u * n;   // d/d ln T2
        j(row, 1) = -a * e * u * lr;  // d/dn
        j(row, 2) = e;
      }
      if (free_baseline_) j(row, 3) = 1.0;
    }
    return j;
  }

 private:
  std::span<const FitSample> data_;
  bool free_baseline_;
};

inline FitResult levenberg_marquardt(const StretchedExpProblem& prob, Eigen::Vector4d x,
                                     const FitOptions& opts) {
  const int np = prob.n_params();
  Eigen::VectorXd r;
  double cost = prob.residuals(x, r);
  double lambda = 1e-3;
  FitResult res;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    res.n_iterations = it;
    const Eigen::MatrixXd j = prob.jacobian(x);
    const Eigen::VectorXd g = j.transpose() * r;
    const double rnorm = std::sqrt(cost);
    double gmax = 0.0;
    for (int c = 0; c < np; ++c) {
      const double denom = j.col(c).norm() * rnorm;
      gmax = std::max(gmax, denom > 0.0 ? std::abs(g(c)) / denom : 0.0);
    }
    res.gradient_norm = gmax;
    if (gmax <= opts.gradient_tolerance || cost == 0.0) {
      res.converged = true;
      break;
    }
    const Eigen::MatrixXd jtj = j.transpose() * j;
    bool improved = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd a = jtj;
      for (int c = 0; c < np; ++c) a(c, c) += lambda * std::max(jtj(c, c), 1e-30);
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      Eigen::Vector4d trial = x;
      trial.head(np) += step;
      trial(1) = std::clamp(trial(1), kMinExponent, kMaxExponent);
      Eigen::VectorXd r_trial;
      const double c_trial = prob.residuals(trial, r_trial);
      if (std::isfinite(c_trial) && c_trial <= cost) {
        const double moved = (trial - x).head(np).norm();
        if (lambda <= 1.0 &&
            moved <= opts.step_tolerance * (x.head(np).norm() + opts.step_tolerance)) {
          res.converged = true;
        }
        x = trial;
        r = r_trial;
        cost = c_trial;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e16) break;
    }
    if (res.converged) break;
    if (!improved) {
      // No descent possible: re-evaluate the gradient test at the final point.
      const Eigen::MatrixXd jf = prob.jacobian(x);
      const Eigen::VectorXd gf = jf.transpose() * r;
      double gm = 0.0;
      for (int c = 0; c < np; ++c) {
        const double denom = jf.col(c).norm() * std::sqrt(cost);
        gm = std::max(gm, denom > 0.0 ? std::abs(gf(c)) / denom : 0.0);
      }
      res.gradient_norm = gm;
      res.converged = gm <= opts.gradient_tolerance;
      break;
    }
  }
  res.t2_s = std::exp(x(0));
  res.exponent_n = x(1);
  res.amplitude = x(2);
  res.baseline = x(3);
  res.rss = cost;
  return res;
}

}  // namespace detail

/// Fits a stretched exponential. Starting values come from a straight-line
/// fit of ln(-ln((p - baseline) / amplitude)) against ln t; if that start
/// does not converge, starts with n = 1, 2, 3 are tried and the best
/// converged fit (lowest rss) is returned.
inline FitResult fit_stretched_exp(std::span<const FitSample> data, const FitOptions& opts = {}) {
  if (data.size() < 4) throw FitError("fit: at least 4 points are required");
  double pmin = data[0].p;
  double pmax = data[0].p;
  double tmax = 0.0;
  for (const auto& s : data) {
    if (!std::isfinite(s.t) || !std::isfinite(s.p)) throw FitError("fit: non-finite data");
    pmin = std::min(pmin, s.p);
    pmax = std::max(pmax, s.p);
    tmax = std::max(tmax, s.t);
  }
  if (pmax - pmin <= 1e-12 * std::max(1.0, std::abs(pmax))) {
    throw FitError("fit: degenerate data (all survival values equal)");
  }
  if (!(tmax > 0.0)) throw FitError("fit: time axis must extend beyond 0");

  const double baseline = opts.fixed_baseline.value_or(pmin);
  auto first = std::min_element(data.begin(), data.end(),
                                [](const FitSample& a, const FitSample& b) { return a.t < b.t; });
  double amplitude = std::max(first->p, pmax) - baseline;
  if (amplitude <= 0.0) amplitude = pmax - pmin;

  const detail::StretchedExpProblem prob(data, opts);

  // Log-log linearization.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& s : data) {
    if (s.t <= 0.0) continue;
    const double frac = (s.p - baseline) / amplitude;
    if (frac <= 0.02 || frac >= 0.98) continue;
    const double x = std::log(s.t);
    const double y = std::log(-std::log(frac));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  std::vector<Eigen::Vector4d> starts;
  if (m >= 2 && sxx * m - sx * sx > 0.0) {
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / m;
    const double n0 = std::clamp(slope, kMinExponent, kMaxExponent);
    const double lnt2 = -intercept / slope;
    if (std::isfinite(lnt2) && slope > 0.0) starts.emplace_back(lnt2, n0, amplitude, baseline);
  }
  // 1/e crossing as a scale estimate for the fallback starts.
  double t_e = tmax / 2.0;
  {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : data) {
      const double d = std::abs((s.p - baseline) / amplitude - std::exp(-1.0));
      if (d < best && s.t > 0.0) {
        best = d;
        t_e = s.t;
      }
    }
  }
  for (double n0 : {1.0, 2.0, 3.0}) starts.emplace_back(std::log(t_e), n0, amplitude, baseline);

  FitResult best;
  bool have = false;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const FitResult r = detail::levenberg_marquardt(prob, starts[i], opts);
    const bool better = !have || (r.converged && !best.converged) ||
                        (r.converged == best.converged && r.rss < best.rss);
    if (better) {
      best = r;
      have = true;
    }
    // The linearized start is tried first; the multi-start only runs if it fails.
    if (i == 0 && r.converged && starts.size() == 4) break;
  }
  const int np = prob.n_params();
  if (static_cast<int>(data.size()) > np) {
    const Eigen::Vector4d x(std::log(best.t2_s), best.exponent_n, best.amplitude, best.baseline);
    const Eigen::MatrixXd j = prob.jacobian(x);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    if (lu.isInvertible()) {
      const Eigen::MatrixXd cov =
          lu.inverse() * (best.rss / static_cast<double>(static_cast<int>(data.size()) - np));
      best.t2_sigma_s = best.t2_s * std::sqrt(std::max(cov(0, 0), 0.0));
      best.exponent_sigma = std::sqrt(std::max(cov(1, 1), 0.0));
    }
  }
  return best;
}

inline FitResult fit_stretched_exp(const std::vector<FitSample>& data, const FitOptions& opts = {}) {
  return fit_stretched_exp(std::span<const FitSample>(data), opts);
}

}  // namespace ddsim
