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

// CSV and record formats. Comma separated, '.' decimal, header row; times
// in microseconds and frequencies in MHz.
//
//   decay:    total_time_us,survival,sequence,n_pulses
//   map:      theta_rad,phi_rad,survival
//   sweep:    error_value,survival,sequence,n_pulses
//   spectrum: freq_mhz,magnitude
//   counts:   time_us,counts                 (input only)
//   fit:      {"t2_us": .., "exponent_n": .., "amplitude": .., "baseline": .., "rss": .., "converged": ..}

#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ddsim/bath_io.hpp"
#include "ddsim/experiments.hpp"
#include "ddsim/fit.hpp"

namespace ddsim::csv {

inline std::string num(double v) { return detail::format_double(v, 15); }

inline void write_decay(std::ostream& out, const DecayCurve& curve) {
  out << "total_time_us,survival,sequence,n_pulses\n";
  for (const auto& p : curve.points) {
    out << num(units::s_to_us(p.time_s)) << "," << num(p.survival) << "," << curve.meta.sequence
        << "," << p.n_pulses << "\n";
  }
}

inline void write_map(std::ostream& out, const SurvivalMap& map) {
  out << "theta_rad,phi_rad,survival\n";
  for (std::size_t i = 0; i < map.theta_grid.size(); ++i) {
    for (std::size_t j = 0; j < map.phi_grid.size(); ++j) {
      out << num(map.theta_grid[i]) << "," << num(map.phi_grid[j]) << ","
          << num(map.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << "\n";
    }
  }
}

/// Offsets are written in MHz, flip-angle errors as the bare fraction.
inline void write_sweep(std::ostream& out, const SweepCurve& curve) {
  out << "error_value,survival,sequence,n_pulses\n";
  const bool offset = curve.quantity == "offset_hz";
  for (const auto& p : curve.points) {
    out << num(offset ? p.value * 1e-6 : p.value) << "," << num(p.survival) << ","
        << curve.meta.sequence << "," << curve.meta.n_pulses << "\n";
  }
}

inline void write_spectrum(std::ostream& out, const std::vector<SpectrumPoint>& spectrum) {
  out << "freq_mhz,magnitude\n";
  for (const auto& s : spectrum) out << num(s.freq_hz * 1e-6) << "," << num(s.magnitude) << "\n";
}

inline void write_fit(std::ostream& out, const FitResult& fit) {
  out << "{\"t2_us\": " << num(units::s_to_us(fit.t2_s)) << ", \"exponent_n\": "
      << num(fit.exponent_n) << ", \"amplitude\": " << num(fit.amplitude)
      << ", \"baseline\": " << num(fit.baseline) << ", \"rss\": " << num(fit.rss)
      << ", \"converged\": " << (fit.converged ? "true" : "false") << "}\n";
}

namespace detail {

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cols;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) cols.push_back(ddsim::detail::trim(c));
  return cols;
}

/// Rows of a CSV whose header starts with the given column names.
inline std::vector<std::vector<std::string>> read_table(std::istream& in,
                                                        const std::vector<std::string>& header,
                                                        const std::string& what) {
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool have_header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (ddsim::detail::trim(line).empty() || line[0] == '#') continue;
    auto cols = split(line);
    if (!have_header) {
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (i >= cols.size() || cols[i] != header[i]) {
          throw ConfigError(what + ": header must start with '" + header[0] + "," +
                            (header.size() > 1 ? header[1] : "") + "'");
        }
      }
      have_header = true;
      continue;
    }
    if (cols.size() < header.size()) {
      throw ConfigError(what + " line " + std::to_string(lineno) + ": too few columns");
    }
    rows.push_back(std::move(cols));
  }
  if (!have_header) throw ConfigError(what + ": empty file");
  return rows;
}

}  // namespace detail

/// Reads `time_us,counts`.
inline std::vector<CountSample> read_counts(std::istream& in) {
  std::vector<CountSample> out;
  for (const auto& row : detail::read_table(in, {"time_us", "counts"}, "counts csv")) {
    out.push_back({units::us_to_s(ddsim::detail::parse_double(row[0], "time_us")),
                   ddsim::detail::parse_double(row[1], "counts")});
  }
  return out;
}

/// Reads the decay format written by write_decay.
inline DecayCurve read_decay(std::istream& in) {
  DecayCurve curve;
  for (const auto& row : detail::read_table(in, {"total_time_us", "survival"}, "decay csv")) {
    DecayPoint p;
    p.time_s = units::us_to_s(ddsim::detail::parse_double(row[0], "total_time_us"));
    p.survival = row[1] == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                 : ddsim::detail::parse_double(row[1], "survival");
    if (row.size() > 2) curve.meta.sequence = row[2];
    if (row.size() > 3) {
      p.n_pulses = static_cast<int>(ddsim::detail::parse_double(row[3], "n_pulses"));
      curve.meta.n_pulses = p.n_pulses;
    }
    curve.points.push_back(p);
  }
  return curve;
}

}  // namespace ddsim::csv
