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

// Bath file format. Human-editable key = value header followed by a
// whitespace-separated nuclei table:
//
//   # comment
//   b_field_t = 0.0068
//   larmor_hz = 72817.12        (optional override)
//   hyperfine_sign = 1          (optional, default 1)
//   [nuclei]
//   a_par_hz a_perp_hz label
//   -1520.3 812.4 C1
//
// The label column is optional. Lines starting with '#' are comments.

#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ddsim/bath.hpp"

namespace ddsim {

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

inline double parse_double(const std::string& text, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw ConfigError(what + ": '" + text + "' is not a number");
  }
  if (pos != text.size()) throw ConfigError(what + ": '" + text + "' is not a number");
  return v;
}

}  // namespace detail

inline BathSpec read_bath(std::istream& in) {
  BathSpec bath;
  bool in_table = false;
  bool header_seen = false;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError("bath file line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = detail::trim(line.substr(0, hash));
    if (body.empty()) continue;
    if (body == "[nuclei]") {
      in_table = true;
      continue;
    }
    if (!in_table) {
      const auto eq = body.find('=');
      if (eq == std::string::npos) fail("expected 'key = value'");
      const std::string key = detail::trim(body.substr(0, eq));
      const std::string value = detail::trim(body.substr(eq + 1));
      if (key == "b_field_t") {
        bath.b_field_t = detail::parse_double(value, key);
      } else if (key == "larmor_hz") {
        bath.larmor_override_hz = detail::parse_double(value, key);
      } else if (key == "hyperfine_sign") {
        bath.hyperfine_sign = static_cast<int>(detail::parse_double(value, key));
      } else if (key == "nuclei_cap") {
        bath.nuclei_cap = static_cast<std::size_t>(detail::parse_double(value, key));
      } else {
        fail("unknown key '" + key + "'");
      }
      continue;
    }
    std::istringstream row(body);
    std::vector<std::string> cols;
    for (std::string tok; row >> tok;) cols.push_back(tok);
    if (!header_seen) {
      if (cols.size() < 2 || cols[0] != "a_par_hz" || cols[1] != "a_perp_hz") {
        fail("nuclei table must start with header 'a_par_hz a_perp_hz label'");
      }
      header_seen = true;
      continue;
    }
    if (cols.size() < 2 || cols.size() > 3) fail("expected 2 or 3 columns");
    NucleusParams n;
    n.a_par_hz = detail::parse_double(cols[0], "a_par_hz");
    n.a_perp_hz = detail::parse_double(cols[1], "a_perp_hz");
    n.label = cols.size() == 3 ? cols[2] : "C" + std::to_string(bath.nuclei.size() + 1);
    bath.nuclei.push_back(std::move(n));
  }
  bath.validate();
  return bath;
}

inline BathSpec read_bath_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open bath file '" + path + "'");
  return read_bath(in);
}

inline void write_bath(std::ostream& out, const BathSpec& bath,
                       const std::vector<std::string>& provenance = {}) {
  out << "# ddsim bath file\n";
  for (const auto& p : provenance) out << "# " << p << "\n";
  out << "b_field_t = " << detail::format_double(bath.b_field_t) << "\n";
  if (bath.larmor_override_hz) {
    out << "larmor_hz = " << detail::format_double(*bath.larmor_override_hz) << "\n";
  }
  out << "hyperfine_sign = " << bath.hyperfine_sign << "\n";
  if (bath.nuclei_cap != kDefaultNucleiCap) out << "nuclei_cap = " << bath.nuclei_cap << "\n";
  out << "[nuclei]\n";
  out << "a_par_hz a_perp_hz label\n";
  for (const auto& n : bath.nuclei) {
    out << detail::format_double(n.a_par_hz) << " " << detail::format_double(n.a_perp_hz) << " "
        << (n.label.empty() ? "-" : n.label) << "\n";
  }
}

/// Sampler output: the bath table plus seed and positions as comments.
inline void write_sampled_bath(std::ostream& out, const SampledBath& sampled,
                               const LatticeSamplerConfig& cfg) {
  std::vector<std::string> prov;
  prov.push_back("sampler seed = " + std::to_string(cfg.seed));
  prov.push_back("sampler abundance = " + detail::format_double(cfg.abundance));
  prov.push_back("sampler radius_nm = " + detail::format_double(cfg.radius_nm));
  prov.push_back("sampler min_coupling_hz = " + detail::format_double(cfg.min_coupling_cutoff_hz));
  prov.push_back("sampler max_coupling_hz = " + detail::format_double(cfg.max_coupling_cutoff_hz));
  prov.push_back("sampler candidates_in_band = " + std::to_string(sampled.candidates_in_band));
  if (sampled.empty) prov.push_back("empty bath: no nuclei survived the sampler");
  for (std::size_t i = 0; i < sampled.positions_nm.size(); ++i) {
    const auto& p = sampled.positions_nm[i];
    prov.push_back("position_nm " + sampled.bath.nuclei[i].label + " " +
                   detail::format_double(p.x(), 9) + " " + detail::format_double(p.y(), 9) + " " +
                   detail::format_double(p.z(), 9));
  }
  write_bath(out, sampled.bath, prov);
}

}  // namespace ddsim
