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

// Experiment drivers (decay curves, pulse-count and error sweeps, Bloch
// scans), revival-envelope extraction, count normalization and Ramsey
// fringes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddsim/bath.hpp"
#include "ddsim/bath_io.hpp"
#include "ddsim/engines.hpp"
#include "ddsim/fit.hpp"
#include "ddsim/parallel.hpp"
#include "ddsim/quantum.hpp"
#include "ddsim/sequence.hpp"

namespace ddsim {

struct CurveMeta {
  std::string sequence;
  int n_pulses = 0;
  std::uint64_t seed = 0;
  std::string bath;
};

struct DecayPoint {
  double time_s = 0.0;
  double survival = 0.0;
  int n_pulses = 0;
  bool flagged = false;
  std::string note;
};

struct DecayCurve {
  std::vector<DecayPoint> points;
  CurveMeta meta;

  /// Points with a finite survival value, as fit input.
  std::vector<FitSample> samples() const {
    std::vector<FitSample> s;
    for (const auto& p : points) {
      if (std::isfinite(p.survival)) s.push_back({p.time_s, p.survival});
    }
    return s;
  }

  bool strictly_increasing() const {
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (!(points[i].time_s > points[i - 1].time_s)) return false;
    }
    return true;
  }
};

struct SweepPoint {
  double value = 0.0;
  double survival = 0.0;
  bool flagged = false;
  std::string note;
};

struct SweepCurve {
  std::string quantity;  // "epsilon" or "offset_hz"
  std::vector<SweepPoint> points;
  CurveMeta meta;
};

struct SurvivalMap {
  std::vector<double> theta_grid;
  std::vector<double> phi_grid;
  Eigen::MatrixXd values;  // rows: theta, cols: phi

  double max() const { return values.maxCoeff(); }
  double min() const { return values.minCoeff(); }

  /// All grid cells within `tol` of the maximum, as (theta index, phi index).
  std::vector<std::pair<int, int>> argmax(double tol = 1e-12) const {
    std::vector<std::pair<int, int>> out;
    const double m = max();
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      for (Eigen::Index j = 0; j < values.cols(); ++j) {
        if (values(i, j) >= m - tol) out.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    }
    return out;
  }

  /// True when every cell equals the maximum within `tol`.
  bool flat(double tol = 1e-12) const { return max() - min() <= tol; }
};

/// Everything a driver needs besides the sequence itself.
struct ExperimentContext {
  BathSpec bath;
  ErrorModel errors;
  EnvelopeParams envelope;
  SimulationOptions sim;
  unsigned threads = 1;  // grid/sweep points evaluated concurrently
};

inline std::string describe_bath(const BathSpec& bath) {
  return std::to_string(bath.size()) + " nuclei, larmor " +
         detail::format_double(bath.larmor_hz(), 9) + " Hz";
}

namespace detail {

inline SimulationOptions point_options(const ExperimentContext& ctx) {
  // Points already run concurrently; keep each engine call single-threaded.
  SimulationOptions o = ctx.sim;
  if (ctx.threads > 1) o.full.threads = 1;
  return o;
}

}  // namespace detail

/// Survival versus total time n * tau for one sequence family and pulse count.
inline DecayCurve decay_curve(SequenceFamily family, int n_pulses,
                              const std::vector<double>& tau_list,
                              const ExperimentContext& ctx, const QubitState& initial) {
  if (!admissible(family, n_pulses)) {
    throw ConfigError(std::string(family_name(family)) + ": pulse count " +
                      std::to_string(n_pulses) + " is not admissible");
  }
  for (std::size_t i = 0; i < tau_list.size(); ++i) {
    if (!(tau_list[i] > 0.0) || (i > 0 && !(tau_list[i] > tau_list[i - 1]))) {
      throw ConfigError("decay_curve: tau list must be positive and strictly ascending");
    }
  }
  DecayCurve curve;
  curve.meta = {std::string(family_name(family)), n_pulses, ctx.sim.full.seed,
                describe_bath(ctx.bath)};
  curve.points.resize(tau_list.size());
  const SimulationOptions opts = detail::point_options(ctx);
  parallel_for(tau_list.size(), ctx.threads, [&](std::size_t i) {
    DecayPoint& pt = curve.points[i];
    pt.time_s = n_pulses * tau_list[i];
    pt.n_pulses = n_pulses;
    try {
      const SequenceSpec seq = make_sequence(family, n_pulses, tau_list[i]);
      pt.survival = survival_for(seq, ctx.bath, ctx.errors, initial, ctx.envelope, opts);
    } catch (const EngineError& e) {
      pt.survival = std::numeric_limits<double>::quiet_NaN();
      pt.flagged = true;
      pt.note = e.what();
    }
  });
  return curve;
}

/// Survival versus pulse count at fixed spacing. Counts the family does not
/// admit are dropped.
inline DecayCurve pulse_count_sweep(SequenceFamily family, const std::vector<int>& n_list,
                                    double tau, const ExperimentContext& ctx,
                                    const QubitState& initial) {
  std::vector<int> ns;
  for (int n : n_list) {
    if (admissible(family, n)) ns.push_back(n);
  }
  DecayCurve curve;
  curve.meta = {std::string(family_name(family)), 0, ctx.sim.full.seed, describe_bath(ctx.bath)};
  curve.points.resize(ns.size());
  const SimulationOptions opts = detail::point_options(ctx);
  parallel_for(ns.size(), ctx.threads, [&](std::size_t i) {
    DecayPoint& pt = curve.points[i];
    pt.n_pulses = ns[i];
    pt.time_s = ns[i] * tau;
    try {
      const SequenceSpec seq = make_sequence(family, ns[i], tau);
      pt.survival = survival_for(seq, ctx.bath, ctx.errors, initial, ctx.envelope, opts);
    } catch (const EngineError& e) {
      pt.survival = std::numeric_limits<double>::quiet_NaN();
      pt.flagged = true;
      pt.note = e.what();
    }
  });
  return curve;
}

/// theta over [0, pi] and phi over [0, 2 pi], both endpoints included, so a
/// 19 x 37 grid has 10 degree steps.
inline SurvivalMap bloch_scan(SequenceFamily family, int n_pulses, double tau,
                              const ExperimentContext& ctx, int theta_steps, int phi_steps) {
  if (theta_steps < 2 || phi_steps < 2) throw ConfigError("bloch_scan: grids need >= 2 points");
  const SequenceSpec seq = make_sequence(family, n_pulses, tau);
  const QubitChannel ch = sequence_channel(seq, ctx.bath, ctx.errors, ctx.sim);
  const double t = executed_time_s(seq, ctx.errors);
  SurvivalMap map;
  for (int i = 0; i < theta_steps; ++i) map.theta_grid.push_back(kPi * i / (theta_steps - 1));
  for (int j = 0; j < phi_steps; ++j) map.phi_grid.push_back(kTwoPi * j / (phi_steps - 1));
  map.values.resize(theta_steps, phi_steps);
  for (int i = 0; i < theta_steps; ++i) {
    for (int j = 0; j < phi_steps; ++j) {
      const auto s = QubitState::from_angles(map.theta_grid[i], map.phi_grid[j]);
      map.values(i, j) = survival_after(ch, s, t, ctx.envelope);
    }
  }
  return map;
}

enum class ErrorSweepKind { kFlipAngle, kOffset };

/// `steps` values evenly spaced over [-max_abs, max_abs].
inline std::vector<double> symmetric_range(double max_abs, int steps) {
  if (steps < 2 || !(max_abs > 0.0)) throw ConfigError("symmetric_range: need steps >= 2, max > 0");
  std::vector<double> v;
  for (int i = 0; i < steps; ++i) v.push_back(-max_abs + 2.0 * max_abs * i / (steps - 1));
  return v;
}

/// Survival versus flip-angle error epsilon or pulse offset (Hz).
inline SweepCurve error_sweep(SequenceFamily family, int n_pulses, double tau, ErrorSweepKind kind,
                              const std::vector<double>& values, const ExperimentContext& ctx,
                              const QubitState& initial) {
  if (values.empty()) throw ConfigError("error_sweep: empty value list");
  double lo = values.front();
  double hi = values.front();
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (std::abs(lo + hi) > 1e-9 * std::max(1.0, std::abs(hi))) {
    throw ConfigError("error_sweep: range must be symmetric around 0");
  }
  const SequenceSpec seq = make_sequence(family, n_pulses, tau);
  SweepCurve curve;
  curve.quantity = kind == ErrorSweepKind::kFlipAngle ? "epsilon" : "offset_hz";
  curve.meta = {std::string(family_name(family)), n_pulses, ctx.sim.full.seed,
                describe_bath(ctx.bath)};
  curve.points.resize(values.size());
  const SimulationOptions opts = detail::point_options(ctx);
  parallel_for(values.size(), ctx.threads, [&](std::size_t i) {
    ErrorModel err = ctx.errors;
    if (kind == ErrorSweepKind::kFlipAngle) {
      err.epsilon = values[i];
    } else {
      err.offset_hz = values[i];
    }
    SweepPoint& pt = curve.points[i];
    pt.value = values[i];
    try {
      pt.survival = survival_for(seq, ctx.bath, err, initial, ctx.envelope, opts);
    } catch (const EngineError& e) {
      pt.survival = std::numeric_limits<double>::quiet_NaN();
      pt.flagged = true;
      pt.note = e.what();
    }
  });
  return curve;
}

// ---------------------------------------------------------------------------
// Revival envelope
// ---------------------------------------------------------------------------

struct RevivalResult {
  DecayCurve envelope;
  std::vector<int> skipped_windows;  // window indices k without samples
};

/// Picks one point per window [c_k - w, c_k + w], c_k = k * 2 N tau_L and
/// w = 0.25 * 2 N tau_L: the highest interior local maximum, or the sample
/// nearest c_k when the window is monotone.
inline RevivalResult revival_maxima(const DecayCurve& curve, int n_pulses, double tau_larmor_s) {
  if (n_pulses < 1 || !(tau_larmor_s > 0.0)) {
    throw ConfigError("revival_maxima: need n_pulses >= 1 and tau_larmor > 0");
  }
  const double spacing = 2.0 * n_pulses * tau_larmor_s;
  const double half_width = 0.25 * spacing;
  RevivalResult out;
  out.envelope.meta = curve.meta;
  const auto& pts = curve.points;
  if (pts.empty()) return out;
  const double t_end = pts.back().time_s;
  for (int k = 0; k * spacing - half_width <= t_end; ++k) {
    const double center = k * spacing;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (std::isfinite(pts[i].survival) && pts[i].time_s >= center - half_width &&
          pts[i].time_s <= center + half_width) {
        idx.push_back(i);
      }
    }
    if (idx.empty()) {
      out.skipped_windows.push_back(k);
      continue;
    }
    std::size_t pick = idx.front();
    bool found = false;
    for (std::size_t m = 1; m + 1 < idx.size(); ++m) {
      const double v = pts[idx[m]].survival;
      if (v >= pts[idx[m - 1]].survival && v >= pts[idx[m + 1]].survival &&
          (v > pts[idx[m - 1]].survival || v > pts[idx[m + 1]].survival)) {
        if (!found || v > pts[pick].survival) {
          pick = idx[m];
          found = true;
        }
      }
    }
    if (!found) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i : idx) {
        const double d = std::abs(pts[i].time_s - center);
        if (d < best) {
          best = d;
          pick = i;
        }
      }
    }
    out.envelope.points.push_back(pts[pick]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Measured data
// ---------------------------------------------------------------------------

struct CountSample {
  double time_s;
  double counts;
};

/// p = (counts - rabi_min) / (rabi_max - rabi_min). Values outside [0, 1]
/// are kept and flagged.
inline DecayCurve normalize_counts(const std::vector<CountSample>& raw, double rabi_max,
                                   double rabi_min) {
  if (!(rabi_max > rabi_min)) throw ConfigError("normalize_counts: rabi_max must exceed rabi_min");
  DecayCurve curve;
  curve.meta.sequence = "measured";
  const double span = rabi_max - rabi_min;
  for (const auto& s : raw) {
    DecayPoint p;
    p.time_s = s.time_s;
    p.survival = (s.counts - rabi_min) / span;
    if (p.survival < 0.0 || p.survival > 1.0) {
      p.flagged = true;
      p.note = "outside [0, 1]";
    }
    curve.points.push_back(p);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Ramsey fringe with the 14N hyperfine triplet
// ---------------------------------------------------------------------------

inline constexpr double kDefaultHyperfine14NHz = 2.16e6;

/// p(t) = (1 + fringe) / 2 with
/// fringe = (1/3) sum_{m=-1,0,1} cos(2 pi (detuning + m a) t) exp(-(t / T2*)^2).
inline DecayCurve ramsey(double detuning_hz, double hyperfine_14n_hz, double t2star_s,
                         const std::vector<double>& t_list) {
  if (!(t2star_s > 0.0)) throw ConfigError("ramsey: T2* must be positive");
  DecayCurve curve;
  curve.meta.sequence = "ramsey";
  for (double t : t_list) {
    double fringe = 0.0;
    for (int m = -1; m <= 1; ++m) {
      fringe += std::cos(kTwoPi * (detuning_hz + m * hyperfine_14n_hz) * t);
    }
    fringe *= std::exp(-std::pow(t / t2star_s, 2)) / 3.0;
    curve.points.push_back({t, 0.5 * (1.0 + fringe), 0, false, {}});
  }
  return curve;
}

struct SpectrumPoint {
  double freq_hz;
  double magnitude;
};

/// Magnitude of the discrete Fourier transform of the mean-removed fringe,
/// for frequencies 0 .. Nyquist. Requires uniformly spaced times.
inline std::vector<SpectrumPoint> ramsey_spectrum(const DecayCurve& curve) {
  const auto& pts = curve.points;
  const std::size_t n = pts.size();
  if (n < 4) throw ConfigError("ramsey_spectrum: need at least 4 samples");
  const double dt = (pts.back().time_s - pts.front().time_s) / static_cast<double>(n - 1);
  if (!(dt > 0.0)) throw ConfigError("ramsey_spectrum: times must increase");
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs((pts[i].time_s - pts[i - 1].time_s) - dt) > 1e-6 * dt) {
      throw ConfigError("ramsey_spectrum: time samples must be uniformly spaced");
    }
  }
  double mean = 0.0;
  for (const auto& p : pts) mean += p.survival;
  mean /= static_cast<double>(n);
  std::vector<SpectrumPoint> out;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    Complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      const double ang = -kTwoPi * static_cast<double>(k * i % n) / static_cast<double>(n);
      acc += (pts[i].survival - mean) * std::polar(1.0, ang);
    }
    out.push_back({static_cast<double>(k) / (static_cast<double>(n) * dt), std::abs(acc)});
  }
  return out;
}

/// Local maxima of the spectrum at or above `rel_threshold` times the
/// global maximum.
inline std::vector<SpectrumPoint> spectral_peaks(const std::vector<SpectrumPoint>& spectrum,
                                                 double rel_threshold = 0.2) {
  std::vector<SpectrumPoint> peaks;
  double top = 0.0;
  for (const auto& s : spectrum) top = std::max(top, s.magnitude);
  for (std::size_t i = 1; i + 1 < spectrum.size(); ++i) {
    const double v = spectrum[i].magnitude;
    if (v >= rel_threshold * top && v > spectrum[i - 1].magnitude &&
        v >= spectrum[i + 1].magnitude) {
      peaks.push_back(spectrum[i]);
    }
  }
  return peaks;
}

}  // namespace ddsim
