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

// Dynamical-decoupling sequences as explicit timelines.
//
// All families share the symmetric schedule
//   tau/2 - P1 - tau - P2 - ... - tau - Pn - tau/2
// and differ only in the phase (rotation-axis azimuth) of each pi pulse.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ddsim/common.hpp"

namespace ddsim {

enum class PulseKind { kInstantaneous, kFinite };

struct PulseEvent {
  double nominal_angle = kPi;
  double phase = 0.0;
  PulseKind kind = PulseKind::kInstantaneous;
};

struct TimedPulse {
  double delay_s = 0.0;  // free evolution preceding the pulse
  PulseEvent pulse;
};

enum class SequenceFamily { kHahn, kCpmg, kXy4, kKdd };

inline std::string_view family_name(SequenceFamily f) {
  switch (f) {
    case SequenceFamily::kHahn:
      return "hahn";
    case SequenceFamily::kCpmg:
      return "cpmg";
    case SequenceFamily::kXy4:
      return "xy4";
    case SequenceFamily::kKdd:
      return "kdd";
  }
  return "?";
}

inline SequenceFamily parse_family(std::string_view name) {
  if (name == "hahn") return SequenceFamily::kHahn;
  if (name == "cpmg") return SequenceFamily::kCpmg;
  if (name == "xy4") return SequenceFamily::kXy4;
  if (name == "kdd") return SequenceFamily::kKdd;
  throw ConfigError("unknown sequence '" + std::string(name) + "' (hahn, cpmg, xy4, kdd)");
}

/// Number of pi pulses per repeating unit.
inline int family_period(SequenceFamily f) {
  switch (f) {
    case SequenceFamily::kHahn:
    case SequenceFamily::kCpmg:
      return 1;
    case SequenceFamily::kXy4:
      return 4;
    case SequenceFamily::kKdd:
      return 10;
  }
  return 1;
}

inline bool admissible(SequenceFamily f, int n) {
  if (n < 1) return false;
  if (f == SequenceFamily::kHahn) return n == 1;
  return n % family_period(f) == 0;
}

struct SequenceSpec {
  std::string name;
  std::vector<TimedPulse> events;
  double trailing_delay_s = 0.0;

  int n_pulses() const { return static_cast<int>(events.size()); }

  /// Sum of delays; pulses are instantaneous at this level.
  double total_time_s() const {
    double t = trailing_delay_s;
    for (const auto& e : events) t += e.delay_s;
    return t;
  }

  /// Times of the pulse centers measured from the start.
  std::vector<double> pulse_centers() const {
    std::vector<double> c;
    double t = 0.0;
    for (const auto& e : events) {
      t += e.delay_s;
      c.push_back(t);
    }
    return c;
  }

  std::vector<double> phases() const {
    std::vector<double> p;
    for (const auto& e : events) p.push_back(e.pulse.phase);
    return p;
  }
};

namespace detail {

inline SequenceSpec schedule(std::string name, const std::vector<double>& phases, double tau) {
  if (phases.empty()) throw ConfigError(name + ": at least one pulse is required");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError(name + ": tau must be positive");
  SequenceSpec s;
  s.name = std::move(name);
  for (std::size_t k = 0; k < phases.size(); ++k) {
    s.events.push_back({k == 0 ? tau / 2.0 : tau, PulseEvent{kPi, phases[k]}});
  }
  s.trailing_delay_s = tau / 2.0;
  return s;
}

}  // namespace detail

/// n pi pulses about y with spacing tau. n = 1 is the Hahn echo.
inline SequenceSpec make_cpmg(int n, double tau) {
  if (n < 1) throw ConfigError("cpmg: pulse count must be >= 1");
  return detail::schedule(n == 1 ? "hahn" : "cpmg", std::vector<double>(n, kPi / 2.0), tau);
}

inline SequenceSpec make_hahn(double tau) { return make_cpmg(1, tau); }

/// Phases cycle x, y, x, y.
inline SequenceSpec make_xy4(int n, double tau) {
  if (n < 4 || n % 4 != 0) throw ConfigError("xy4: pulse count must be a positive multiple of 4");
  std::vector<double> phases;
  for (int k = 0; k < n; ++k) phases.push_back(k % 2 == 0 ? 0.0 : kPi / 2.0);
  return detail::schedule("xy4", phases, tau);
}

/// Knill blocks (pi/6, 0, pi/2, 0, pi/6) + phi, with phi alternating 0, pi/2
/// between consecutive blocks.
inline SequenceSpec make_kdd(int n, double tau) {
  if (n < 10 || n % 10 != 0) {
    throw ConfigError("kdd: pulse count must be a positive multiple of 10");
  }
  static constexpr double kKnill[5] = {kPi / 6.0, 0.0, kPi / 2.0, 0.0, kPi / 6.0};
  std::vector<double> phases;
  for (int block = 0; block < n / 5; ++block) {
    const double phi = block % 2 == 0 ? 0.0 : kPi / 2.0;
    for (double k : kKnill) phases.push_back(k + phi);
  }
  return detail::schedule("kdd", phases, tau);
}

inline SequenceSpec make_sequence(SequenceFamily f, int n, double tau) {
  switch (f) {
    case SequenceFamily::kHahn:
      if (n != 1) throw ConfigError("hahn: pulse count must be 1");
      return make_hahn(tau);
    case SequenceFamily::kCpmg:
      return make_cpmg(n, tau);
    case SequenceFamily::kXy4:
      return make_xy4(n, tau);
    case SequenceFamily::kKdd:
      return make_kdd(n, tau);
  }
  throw ConfigError("unknown sequence family");
}

// ---------------------------------------------------------------------------
// Error models and concrete segments
// ---------------------------------------------------------------------------

inline constexpr double kDefaultRabiHz = 12.5e6;

struct ErrorModel {
  double epsilon = 0.0;  // fractional flip-angle error: alpha -> alpha (1 + epsilon)
  double offset_hz = 0.0;
  double rabi_hz = kDefaultRabiHz;
  bool finite_duration = false;

  /// Duration of a nominal pi pulse, 1 / (2 rabi).
  double pi_duration_s() const { return 1.0 / (2.0 * rabi_hz); }

  bool is_ideal() const { return epsilon == 0.0 && offset_hz == 0.0 && !finite_duration; }

  void validate() const {
    if (!(rabi_hz > 0.0) || !std::isfinite(rabi_hz)) {
      throw ConfigError("error model: rabi_hz must be positive");
    }
    if (!(std::abs(epsilon) < 1.0)) throw ConfigError("error model: |epsilon| must be < 1");
    if (!std::isfinite(offset_hz)) throw ConfigError("error model: offset must be finite");
  }
};

struct FreeSegment {
  double duration_s = 0.0;
  double offset_rad_s = 0.0;
};

/// A pulse as applied. `rabi_rad_s` is the drive amplitude actually
/// delivered, so that `angle / rabi_rad_s` equals the scheduled duration.
struct PulseSegment {
  double angle = kPi;
  double phase = 0.0;
  double offset_rad_s = 0.0;
  double rabi_rad_s = units::hz_to_rad_s(kDefaultRabiHz);
  PulseKind kind = PulseKind::kInstantaneous;

  /// Time the pulse occupies on the schedule (0 for instantaneous pulses).
  double duration_s() const { return kind == PulseKind::kFinite ? angle / rabi_rad_s : 0.0; }
};

using Segment = std::variant<FreeSegment, PulseSegment>;

struct ConcreteSequence {
  std::string name;
  int n_pulses = 0;
  std::vector<Segment> segments;

  double total_time_s() const {
    double t = 0.0;
    for (const auto& s : segments) {
      if (const auto* f = std::get_if<FreeSegment>(&s)) {
        t += f->duration_s;
      } else {
        t += std::get<PulseSegment>(s).duration_s();
      }
    }
    return t;
  }
};

/// Scales every angle by (1 + epsilon), attaches the offset to pulses and
/// free evolution, and for finite pulses takes t_p / 2 from each adjacent
/// delay so the pulse centers stay on the ideal grid.
inline ConcreteSequence apply_errors(const SequenceSpec& seq, const ErrorModel& err) {
  err.validate();
  const double rabi = units::hz_to_rad_s(err.rabi_hz);
  const double offset = units::hz_to_rad_s(err.offset_hz);
  std::vector<double> durations;  // scheduled duration per pulse
  for (const auto& e : seq.events) {
    if (!(e.pulse.nominal_angle > 0.0)) throw ConfigError("pulse angle must be positive");
    const bool finite = err.finite_duration || e.pulse.kind == PulseKind::kFinite;
    durations.push_back(finite ? e.pulse.nominal_angle / rabi : 0.0);
  }

  ConcreteSequence out;
  out.name = seq.name;
  out.n_pulses = seq.n_pulses();
  const std::size_t n = seq.events.size();
  for (std::size_t k = 0; k <= n; ++k) {
    const double delay = k < n ? seq.events[k].delay_s : seq.trailing_delay_s;
    if (delay < 0.0) throw ConfigError("sequence: negative delay");
    const double consumed =
        (k > 0 ? durations[k - 1] / 2.0 : 0.0) + (k < n ? durations[k] / 2.0 : 0.0);
    if (consumed > delay * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "schedule infeasible: delay " << k << " of " << delay * 1e9
          << " ns cannot hold " << consumed * 1e9 << " ns of adjacent pulse time";
      throw EngineError(msg.str());
    }
    out.segments.emplace_back(FreeSegment{std::max(0.0, delay - consumed), offset});
    if (k < n) {
      const auto& p = seq.events[k].pulse;
      const bool finite = durations[k] > 0.0;
      PulseSegment ps;
      ps.angle = p.nominal_angle * (1.0 + err.epsilon);
      ps.phase = p.phase;
      ps.offset_rad_s = offset;
      ps.rabi_rad_s = rabi * (1.0 + err.epsilon);
      ps.kind = finite ? PulseKind::kFinite : PulseKind::kInstantaneous;
      out.segments.emplace_back(ps);
    }
  }
  return out;
}

/// One line per segment: `delay <seconds>` / `pulse <angle_rad> <phase_rad>`.
inline void dump_sequence(std::ostream& out, const SequenceSpec& seq) {
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
  };
  for (const auto& e : seq.events) {
    out << "delay " << num(e.delay_s) << "\n";
    out << "pulse " << num(e.pulse.nominal_angle) << " " << num(e.pulse.phase) << "\n";
  }
  out << "delay " << num(seq.trailing_delay_s) << "\n";
}

}  // namespace ddsim
