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

// Batch front end: key = value configuration, command dispatch and output
// files with a `<output>.meta.json` sidecar.
//
// Config files hold one `key = value` per line; '#' starts a comment.
// Physical quantities carry their unit in the key name (tau_us, offset_mhz).
// Command-line flags of the same name override file values.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddsim/bath.hpp"
#include "ddsim/bath_io.hpp"
#include "ddsim/common.hpp"
#include "ddsim/csv.hpp"
#include "ddsim/engines.hpp"
#include "ddsim/experiments.hpp"
#include "ddsim/fit.hpp"
#include "ddsim/sequence.hpp"

namespace ddsim::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitEngine = 3,
  kExitFit = 4,
  kExitOutput = 5,
};

/// Raised when an output file cannot be written.
class OutputError : public Error {
 public:
  using Error::Error;
};

enum class KeyKind { kString, kInt, kDouble, kBool, kIntList, kDoubleList };

struct KeySpec {
  const char* name;
  KeyKind kind;
  const char* default_value;  // nullptr: no default
  const char* help;
};

// clang-format off
inline const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> keys = {
      {"sequence", KeyKind::kString, nullptr, "hahn | cpmg | xy4 | kdd"},
      {"n_pulses", KeyKind::kInt, nullptr, "number of pi pulses"},
      {"n_list", KeyKind::kIntList, nullptr, "pulse counts for sweep-pulses, comma separated"},
      {"tau_us", KeyKind::kDouble, "0.8", "pulse spacing"},
      {"tau_min_us", KeyKind::kDouble, nullptr, "first spacing of a decay scan"},
      {"tau_max_us", KeyKind::kDouble, nullptr, "last spacing of a decay scan"},
      {"tau_steps", KeyKind::kInt, nullptr, "number of spacings in a decay scan"},
      {"tau_list_us", KeyKind::kDoubleList, nullptr, "explicit spacings, replaces min/max/steps"},
      {"b_field_mt", KeyKind::kDouble, "6.8", "static field along the NV axis"},
      {"tau_larmor_us", KeyKind::kDouble, nullptr, "pins the Larmor period instead of deriving it from the field"},
      {"bath_source", KeyKind::kString, "none", "none | file | sample"},
      {"bath_file", KeyKind::kString, nullptr, "bath table for bath_source = file"},
      {"abundance", KeyKind::kDouble, "0.011", "13C abundance for the sampler"},
      {"radius_nm", KeyKind::kDouble, "2", "sampling radius"},
      {"min_coupling_hz", KeyKind::kDouble, "0", "lower hyperfine cutoff"},
      {"max_coupling_hz", KeyKind::kDouble, "inf", "upper hyperfine cutoff"},
      {"bath_seed", KeyKind::kInt, "1", "sampler seed"},
      {"nuclei_cap", KeyKind::kInt, "14", "maximum number of nuclei kept"},
      {"hyperfine_sign", KeyKind::kInt, "1", "+1 or -1"},
      {"epsilon", KeyKind::kDouble, "0", "fractional flip-angle error"},
      {"offset_mhz", KeyKind::kDouble, "0", "drive frequency offset"},
      {"rabi_mhz", KeyKind::kDouble, "12.5", "Rabi frequency"},
      {"finite_duration", KeyKind::kBool, "false", "pulses last pi / Rabi instead of zero time"},
      {"theta_rad", KeyKind::kDouble, "1.5707963267948966", "initial state polar angle"},
      {"phi_rad", KeyKind::kDouble, "1.5707963267948966", "initial state azimuth"},
      {"t1_ms", KeyKind::kDouble, "4", "longitudinal relaxation time"},
      {"t_markov_ms", KeyKind::kDouble, "inf", "extra exponential coherence decay"},
      {"engine", KeyKind::kString, "auto", "auto | analytic | full"},
      {"bath_samples", KeyKind::kInt, "256", "sampled nuclear basis states when enumeration is too large"},
      {"seed", KeyKind::kInt, "1", "seed for sampled nuclear states"},
      {"theta_steps", KeyKind::kInt, "19", "polar grid points of bloch-scan"},
      {"phi_steps", KeyKind::kInt, "37", "azimuth grid points of bloch-scan"},
      {"sweep_kind", KeyKind::kString, "flip", "flip | offset"},
      {"sweep_epsilon_max", KeyKind::kDouble, "0.2", "flip-angle sweep half range"},
      {"sweep_offset_max_mhz", KeyKind::kDouble, "5", "offset sweep half range"},
      {"sweep_steps", KeyKind::kInt, "41", "number of sweep values"},
      {"input", KeyKind::kString, nullptr, "data file for fit"},
      {"input_format", KeyKind::kString, "decay", "decay | counts"},
      {"rabi_max_counts", KeyKind::kDouble, nullptr, "counts of the bright reference"},
      {"rabi_min_counts", KeyKind::kDouble, nullptr, "counts of the dark reference"},
      {"fit_baseline", KeyKind::kString, "0.5", "fixed baseline, or 'free'"},
      {"fit_revivals", KeyKind::kBool, "false", "fit the revival maxima instead of every point"},
      {"fit_t_max_us", KeyKind::kDouble, "inf", "ignore points later than this"},
      {"detuning_mhz", KeyKind::kDouble, "5", "Ramsey detuning"},
      {"hyperfine_14n_mhz", KeyKind::kDouble, "2.16", "14N hyperfine splitting"},
      {"t2star_us", KeyKind::kDouble, "2", "Ramsey Gaussian decay time"},
      {"t_max_us", KeyKind::kDouble, "10", "Ramsey record length"},
      {"t_steps", KeyKind::kInt, "501", "Ramsey samples"},
      {"spectrum_output", KeyKind::kString, nullptr, "optional spectrum file for ramsey"},
      {"output", KeyKind::kString, nullptr, "output path ('-' for stdout where allowed)"},
  };
  return keys;
}
// clang-format on

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"decay", "sweep-pulses", "bloch-scan", "error-sweep",
                                             "fit",   "ramsey",       "bath-sample", "dump-sequence"};
  return c;
}

inline const KeySpec* find_key(const std::string& name) {
  for (const auto& k : schema()) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

namespace detail {

inline const std::set<std::string>& unit_suffixes() {
  static const std::set<std::string> u = {"s",  "ms", "us",  "ns", "hz", "khz", "mhz",
                                          "ghz", "t", "mt", "nm", "rad", "deg", "counts"};
  return u;
}

/// Splits `tau_us` into ("tau", "us"); keys without a unit give (key, "").
inline std::pair<std::string, std::string> split_unit(const std::string& key) {
  const auto pos = key.rfind('_');
  if (pos != std::string::npos && unit_suffixes().count(key.substr(pos + 1))) {
    return {key.substr(0, pos), key.substr(pos + 1)};
  }
  return {key, ""};
}

/// Error text for a key that is not in the schema.
inline std::string unknown_key_message(const std::string& key) {
  const auto [stem, unit] = split_unit(key);
  for (const auto& k : schema()) {
    const auto [kstem, kunit] = split_unit(k.name);
    if (kstem == stem && !kunit.empty() && kunit != unit) {
      return "unit-suffix mismatch for key '" + key + "': expected '" + k.name + "'";
    }
  }
  return "unknown key '" + key + "'";
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    item = ddsim::detail::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  const double v = ddsim::detail::parse_double(text, "key '" + key + "'");
  if (!std::isfinite(v)) throw ConfigError("key '" + key + "': value must be finite or 'inf'");
  return v;
}

inline long long to_int(const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) {
    throw ConfigError("key '" + key + "': '" + text + "' is not an integer");
  }
  return v;
}

inline bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("key '" + key + "': '" + text + "' is not a boolean");
}

inline void check_value(const KeySpec& k, const std::string& text) {
  switch (k.kind) {
    case KeyKind::kString:
      if (text.empty()) throw ConfigError("key '" + std::string(k.name) + "': empty value");
      break;
    case KeyKind::kInt:
      to_int(k.name, text);
      break;
    case KeyKind::kDouble:
      to_double(k.name, text);
      break;
    case KeyKind::kBool:
      to_bool(k.name, text);
      break;
    case KeyKind::kIntList:
      for (const auto& s : split_list(text)) to_int(k.name, s);
      break;
    case KeyKind::kDoubleList:
      for (const auto& s : split_list(text)) to_double(k.name, s);
      break;
  }
}

}  // namespace detail

/// Fully resolved configuration. `values` holds every key that has a value
/// (explicit or default) as text; it is what the sidecar records and what
/// replay feeds back in.
struct RunConfig {
  std::string command;
  std::map<std::string, std::string> values;
  unsigned threads = 1;

  bool has(const std::string& key) const { return values.count(key) != 0; }

  const std::string& text(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
  }
  double real(const std::string& key) const { return detail::to_double(key, text(key)); }
  long long integer(const std::string& key) const { return detail::to_int(key, text(key)); }
  bool flag(const std::string& key) const { return detail::to_bool(key, text(key)); }
  std::vector<long long> int_list(const std::string& key) const {
    std::vector<long long> out;
    for (const auto& s : detail::split_list(text(key))) out.push_back(detail::to_int(key, s));
    return out;
  }
  std::vector<double> real_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : detail::split_list(text(key))) out.push_back(detail::to_double(key, s));
    return out;
  }
};

/// Parses `key = value` lines. Unknown keys and duplicates are errors.
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = ddsim::detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = ddsim::detail::trim(line.substr(0, eq));
    const std::string value = ddsim::detail::trim(line.substr(eq + 1));
    if (!find_key(key)) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " +
                        detail::unknown_key_message(key));
    }
    if (out.count(key)) {
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    out[key] = value;
  }
  return out;
}

/// Keys a command cannot run without, given the values present so far.
inline std::vector<std::string> required_keys(const std::string& command,
                                              const std::map<std::string, std::string>& v) {
  std::vector<std::string> req;
  if (command == "decay") {
    req = {"sequence", "n_pulses", "output"};
    if (!v.count("tau_list_us")) {
      for (const char* k : {"tau_min_us", "tau_max_us", "tau_steps"}) req.push_back(k);
    }
  } else if (command == "sweep-pulses") {
    req = {"sequence", "n_list", "output"};
  } else if (command == "bloch-scan" || command == "error-sweep" || command == "dump-sequence") {
    req = {"sequence", "n_pulses"};
    if (command != "dump-sequence") req.push_back("output");
  } else if (command == "fit") {
    req = {"input", "output"};
    auto fmt = v.find("input_format");
    if (fmt != v.end() && fmt->second == "counts") {
      req.push_back("rabi_max_counts");
      req.push_back("rabi_min_counts");
    }
  } else if (command == "ramsey" || command == "bath-sample") {
    req = {"output"};
  }
  auto bs = v.find("bath_source");
  if (bs != v.end() && bs->second == "file") req.push_back("bath_file");
  return req;
}

/// Merges file values, flag overrides (which win) and schema defaults, then
/// validates types and required keys.
inline RunConfig parse_config(const std::string& command, const std::string& file_text,
                              const std::map<std::string, std::string>& overrides,
                              unsigned threads = 1) {
  bool known = false;
  for (const auto& c : commands()) known = known || c == command;
  if (!known) throw ConfigError("unknown command '" + command + "'");

  RunConfig cfg;
  cfg.command = command;
  cfg.threads = std::max(1u, threads);
  cfg.values = parse_config_text(file_text);
  for (const auto& [k, v] : overrides) {
    if (!find_key(k)) throw ConfigError(detail::unknown_key_message(k));
    cfg.values[k] = v;
  }
  for (const auto& k : schema()) {
    if (k.default_value && !cfg.values.count(k.name)) cfg.values[k.name] = k.default_value;
  }
  for (const auto& [k, v] : cfg.values) detail::check_value(*find_key(k), v);

  std::vector<std::string> missing;
  for (const auto& k : required_keys(command, cfg.values)) {
    if (!cfg.values.count(k)) missing.push_back(k);
  }
  if (!missing.empty()) {
    std::string msg = "command '" + command + "' is missing required keys:";
    for (const auto& k : missing) msg += " " + k;
    throw ConfigError(msg);
  }

  auto one_of = [&](const std::string& key, std::initializer_list<const char*> options) {
    const std::string& val = cfg.text(key);
    for (const char* o : options) {
      if (val == o) return;
    }
    throw ConfigError("key '" + key + "': unsupported value '" + val + "'");
  };
  if (cfg.has("sequence")) one_of("sequence", {"hahn", "cpmg", "xy4", "kdd"});
  one_of("bath_source", {"none", "file", "sample"});
  one_of("engine", {"auto", "analytic", "full"});
  one_of("sweep_kind", {"flip", "offset"});
  one_of("input_format", {"decay", "counts"});
  if (cfg.text("fit_baseline") != "free") detail::to_double("fit_baseline", cfg.text("fit_baseline"));
  return cfg;
}

// ---------------------------------------------------------------------------
// Translation into library types
// ---------------------------------------------------------------------------

inline BathSpec resolve_bath(const RunConfig& cfg) {
  const double b_t = units::mt_to_t(cfg.real("b_field_mt"));
  const std::string& source = cfg.text("bath_source");
  BathSpec bath;
  if (source == "file") {
    bath = read_bath_file(cfg.text("bath_file"));
  } else if (source == "sample") {
    LatticeSamplerConfig sc;
    sc.abundance = cfg.real("abundance");
    sc.radius_nm = cfg.real("radius_nm");
    sc.min_coupling_cutoff_hz = cfg.real("min_coupling_hz");
    sc.max_coupling_cutoff_hz = cfg.real("max_coupling_hz");
    sc.seed = static_cast<std::uint64_t>(cfg.integer("bath_seed"));
    sc.nuclei_cap = static_cast<std::size_t>(cfg.integer("nuclei_cap"));
    bath = sample_bath(sc, b_t).bath;
  }
  if (source != "file") {
    bath.b_field_t = b_t;
    bath.hyperfine_sign = static_cast<int>(cfg.integer("hyperfine_sign"));
    bath.nuclei_cap = static_cast<std::size_t>(cfg.integer("nuclei_cap"));
  }
  if (cfg.has("tau_larmor_us")) {
    bath.larmor_override_hz = 1.0 / units::us_to_s(cfg.real("tau_larmor_us"));
  }
  bath.validate();
  return bath;
}

inline ExperimentContext resolve_context(const RunConfig& cfg) {
  ExperimentContext ctx;
  ctx.bath = resolve_bath(cfg);
  ctx.errors.epsilon = cfg.real("epsilon");
  ctx.errors.offset_hz = units::mhz_to_hz(cfg.real("offset_mhz"));
  ctx.errors.rabi_hz = units::mhz_to_hz(cfg.real("rabi_mhz"));
  ctx.errors.finite_duration = cfg.flag("finite_duration");
  ctx.errors.validate();
  ctx.envelope.t1_s = units::ms_to_s(cfg.real("t1_ms"));
  ctx.envelope.t_markov_s = units::ms_to_s(cfg.real("t_markov_ms"));
  ctx.envelope.validate();
  const std::string& engine = cfg.text("engine");
  ctx.sim.engine = engine == "analytic" ? EngineChoice::kAnalytic
                   : engine == "full"   ? EngineChoice::kFull
                                        : EngineChoice::kAuto;
  ctx.sim.full.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  const long long samples = cfg.integer("bath_samples");
  if (samples < 1) throw ConfigError("key 'bath_samples' must be >= 1");
  ctx.sim.full.bath_samples = static_cast<std::size_t>(samples);
  ctx.sim.full.threads = cfg.threads;
  ctx.threads = cfg.threads;
  return ctx;
}

inline QubitState resolve_initial(const RunConfig& cfg) {
  return QubitState::from_angles(cfg.real("theta_rad"), cfg.real("phi_rad"));
}

inline int resolve_n_pulses(const RunConfig& cfg) {
  const long long n = cfg.integer("n_pulses");
  const SequenceFamily f = parse_family(cfg.text("sequence"));
  if (n < 1 || n > 100000 || !admissible(f, static_cast<int>(n))) {
    throw ConfigError("key 'n_pulses': " + std::to_string(n) + " is not admissible for " +
                      cfg.text("sequence"));
  }
  return static_cast<int>(n);
}

inline std::vector<double> resolve_tau_list_s(const RunConfig& cfg) {
  std::vector<double> taus;
  if (cfg.has("tau_list_us")) {
    for (double t : cfg.real_list("tau_list_us")) taus.push_back(units::us_to_s(t));
  } else {
    const double lo = cfg.real("tau_min_us");
    const double hi = cfg.real("tau_max_us");
    const long long steps = cfg.integer("tau_steps");
    if (steps < 1 || steps > 10000000) throw ConfigError("key 'tau_steps' must be >= 1");
    if (steps == 1) {
      taus.push_back(units::us_to_s(lo));
    } else {
      if (!(hi > lo)) throw ConfigError("key 'tau_max_us' must exceed 'tau_min_us'");
      for (long long i = 0; i < steps; ++i) {
        taus.push_back(units::us_to_s(lo + (hi - lo) * static_cast<double>(i) /
                                               static_cast<double>(steps - 1)));
      }
    }
  }
  if (taus.empty()) throw ConfigError("key 'tau_list_us' is empty");
  return taus;
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

/// Files produced by one run, kept in memory until everything succeeded.
struct RunOutputs {
  std::vector<std::pair<std::string, std::string>> files;  // path, content
  std::string stdout_text;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string read_text_file(const std::string& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + what + " '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void note_flags(const DecayCurve& curve, RunOutputs& out) {
  std::size_t flagged = 0;
  for (const auto& p : curve.points) flagged += p.flagged ? 1 : 0;
  if (flagged == 0) return;
  std::string first;
  for (const auto& p : curve.points) {
    if (p.flagged) {
      first = p.note;
      break;
    }
  }
  if (flagged == curve.points.size()) throw EngineError("every point failed: " + first);
  out.warnings.push_back(std::to_string(flagged) + " point(s) flagged as NaN: " + first);
}

inline FitOptions fit_options(const RunConfig& cfg) {
  FitOptions o;
  const std::string& b = cfg.text("fit_baseline");
  if (b == "free") {
    o.fixed_baseline.reset();
  } else {
    o.fixed_baseline = to_double("fit_baseline", b);
  }
  return o;
}

}  // namespace detail

/// Computes all outputs of a command without touching the filesystem
/// (inputs named in the config are read).
inline RunOutputs compute(const RunConfig& cfg) {
  RunOutputs out;
  std::ostringstream main;
  const std::string& cmd = cfg.command;

  if (cmd == "dump-sequence") {
    const int n = resolve_n_pulses(cfg);
    const auto seq = make_sequence(parse_family(cfg.text("sequence")), n,
                                   units::us_to_s(cfg.real("tau_us")));
    dump_sequence(main, seq);
    if (!cfg.has("output") || cfg.text("output") == "-") {
      out.stdout_text = main.str();
    } else {
      out.files.emplace_back(cfg.text("output"), main.str());
    }
    return out;
  }

  if (cmd == "bath-sample") {
    LatticeSamplerConfig sc;
    sc.abundance = cfg.real("abundance");
    sc.radius_nm = cfg.real("radius_nm");
    sc.min_coupling_cutoff_hz = cfg.real("min_coupling_hz");
    sc.max_coupling_cutoff_hz = cfg.real("max_coupling_hz");
    sc.seed = static_cast<std::uint64_t>(cfg.integer("bath_seed"));
    sc.nuclei_cap = static_cast<std::size_t>(cfg.integer("nuclei_cap"));
    SampledBath sampled = sample_bath(sc, units::mt_to_t(cfg.real("b_field_mt")));
    sampled.bath.hyperfine_sign = static_cast<int>(cfg.integer("hyperfine_sign"));
    if (cfg.has("tau_larmor_us")) {
      sampled.bath.larmor_override_hz = 1.0 / units::us_to_s(cfg.real("tau_larmor_us"));
    }
    sampled.bath.validate();
    if (sampled.empty) out.warnings.push_back("sampled bath is empty");
    write_sampled_bath(main, sampled, sc);
    out.files.emplace_back(cfg.text("output"), main.str());
    return out;
  }

  if (cmd == "ramsey") {
    const long long steps = cfg.integer("t_steps");
    const double t_max = units::us_to_s(cfg.real("t_max_us"));
    if (steps < 4 || !(t_max > 0.0)) throw ConfigError("ramsey: need t_steps >= 4 and t_max_us > 0");
    std::vector<double> ts;
    for (long long i = 0; i < steps; ++i) {
      ts.push_back(t_max * static_cast<double>(i) / static_cast<double>(steps - 1));
    }
    const DecayCurve fringe = ramsey(units::mhz_to_hz(cfg.real("detuning_mhz")),
                                     units::mhz_to_hz(cfg.real("hyperfine_14n_mhz")),
                                     units::us_to_s(cfg.real("t2star_us")), ts);
    csv::write_decay(main, fringe);
    out.files.emplace_back(cfg.text("output"), main.str());
    if (cfg.has("spectrum_output")) {
      std::ostringstream spec;
      csv::write_spectrum(spec, ramsey_spectrum(fringe));
      out.files.emplace_back(cfg.text("spectrum_output"), spec.str());
    }
    return out;
  }

  if (cmd == "fit") {
    std::istringstream in(detail::read_text_file(cfg.text("input"), "input"));
    DecayCurve curve;
    if (cfg.text("input_format") == "counts") {
      curve = normalize_counts(csv::read_counts(in), cfg.real("rabi_max_counts"),
                               cfg.real("rabi_min_counts"));
      std::size_t outside = 0;
      for (const auto& p : curve.points) outside += p.flagged ? 1 : 0;
      if (outside) {
        out.warnings.push_back(std::to_string(outside) + " normalized point(s) outside [0, 1]");
      }
    } else {
      curve = csv::read_decay(in);
    }
    if (cfg.flag("fit_revivals")) {
      const int n = curve.meta.n_pulses > 0 ? curve.meta.n_pulses
                                            : static_cast<int>(cfg.integer("n_pulses"));
      const BathSpec bath = resolve_bath(cfg);
      curve = revival_maxima(curve, n, bath.larmor_period_s()).envelope;
    }
    const double t_cut = units::us_to_s(cfg.real("fit_t_max_us"));
    std::vector<FitSample> samples;
    for (const auto& s : curve.samples()) {
      if (s.t <= t_cut) samples.push_back(s);
    }
    csv::write_fit(main, fit_stretched_exp(samples, detail::fit_options(cfg)));
    out.files.emplace_back(cfg.text("output"), main.str());
    return out;
  }

  const ExperimentContext ctx = resolve_context(cfg);
  const SequenceFamily family = parse_family(cfg.text("sequence"));
  const QubitState initial = resolve_initial(cfg);
  if (ctx.bath.larmor_inconsistency() > 0.01) {
    out.warnings.push_back("tau_larmor_us differs from the field-derived Larmor period by " +
                           ddsim::detail::format_double(100.0 * ctx.bath.larmor_inconsistency(), 3) +
                           "%");
  }

  if (cmd == "decay") {
    const DecayCurve curve =
        decay_curve(family, resolve_n_pulses(cfg), resolve_tau_list_s(cfg), ctx, initial);
    detail::note_flags(curve, out);
    csv::write_decay(main, curve);
  } else if (cmd == "sweep-pulses") {
    std::vector<int> ns;
    for (long long n : cfg.int_list("n_list")) {
      if (n < 1 || n > 100000) throw ConfigError("key 'n_list': pulse count out of range");
      ns.push_back(static_cast<int>(n));
    }
    const DecayCurve curve =
        pulse_count_sweep(family, ns, units::us_to_s(cfg.real("tau_us")), ctx, initial);
    if (curve.points.empty()) throw ConfigError("key 'n_list': no admissible pulse count");
    detail::note_flags(curve, out);
    csv::write_decay(main, curve);
  } else if (cmd == "bloch-scan") {
    const SurvivalMap map =
        bloch_scan(family, resolve_n_pulses(cfg), units::us_to_s(cfg.real("tau_us")), ctx,
                   static_cast<int>(cfg.integer("theta_steps")),
                   static_cast<int>(cfg.integer("phi_steps")));
    csv::write_map(main, map);
  } else if (cmd == "error-sweep") {
    const bool flip = cfg.text("sweep_kind") == "flip";
    const double max_abs = flip ? cfg.real("sweep_epsilon_max")
                                : units::mhz_to_hz(cfg.real("sweep_offset_max_mhz"));
    const auto values = symmetric_range(max_abs, static_cast<int>(cfg.integer("sweep_steps")));
    const SweepCurve curve =
        error_sweep(family, resolve_n_pulses(cfg), units::us_to_s(cfg.real("tau_us")),
                    flip ? ErrorSweepKind::kFlipAngle : ErrorSweepKind::kOffset, values, ctx,
                    initial);
    std::size_t flagged = 0;
    for (const auto& p : curve.points) flagged += p.flagged ? 1 : 0;
    if (flagged == curve.points.size()) throw EngineError("every sweep point failed");
    if (flagged) out.warnings.push_back(std::to_string(flagged) + " sweep point(s) flagged");
    csv::write_sweep(main, curve);
  }
  out.files.emplace_back(cfg.text("output"), main.str());
  return out;
}

/// Sidecar JSON for one output file.
inline std::string sidecar_json(const RunConfig& cfg, double wall_time_s,
                                const std::vector<std::string>& outputs) {
  nlohmann::ordered_json j;
  j["ddsim_version"] = kVersion;
  j["command"] = cfg.command;
  j["seed"] = cfg.text("seed");
  j["config"] = cfg.values;
  j["outputs"] = outputs;
  j["threads"] = cfg.threads;
  j["wall_time_s"] = wall_time_s;
  return j.dump(2) + "\n";
}

/// Rebuilds the configuration recorded in a sidecar. `output` replaces the
/// recorded output path when given.
inline RunConfig config_from_sidecar(const std::string& json_text,
                                     const std::optional<std::string>& output, unsigned threads) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("sidecar: ") + e.what());
  }
  if (!j.contains("command") || !j.contains("config") || !j["config"].is_object()) {
    throw ConfigError("sidecar: missing 'command' or 'config'");
  }
  std::map<std::string, std::string> values;
  for (auto it = j["config"].begin(); it != j["config"].end(); ++it) {
    if (!it.value().is_string()) throw ConfigError("sidecar: config values must be strings");
    values[it.key()] = it.value().get<std::string>();
  }
  if (output) values["output"] = *output;
  return parse_config(j["command"].get<std::string>(), "", values, threads);
}

/// Writes all files, then their sidecars. On failure every file this call
/// created is removed.
inline void write_outputs(const RunConfig& cfg, const RunOutputs& res, double wall_time_s) {
  std::vector<std::string> written;
  auto put = [&](const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (f) written.push_back(path);
    if (f) f << content;
    if (f) f.flush();
    if (!f) throw OutputError("cannot write output file '" + path + "'");
  };
  std::vector<std::string> paths;
  for (const auto& [p, c] : res.files) paths.push_back(p);
  try {
    for (const auto& [p, c] : res.files) put(p, c);
    for (const auto& [p, c] : res.files) {
      put(p + ".meta.json", sidecar_json(cfg, wall_time_s, paths));
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) std::filesystem::remove(p, ec);
    throw;
  }
}

/// Runs a command end to end and maps failures onto exit codes.
inline int run(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const auto start = std::chrono::steady_clock::now();
    const RunOutputs res = compute(cfg);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& w : res.warnings) err << "warning: " << w << "\n";
    write_outputs(cfg, res, wall);
    out << res.stdout_text;
    return kExitOk;
  } catch (const OutputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitOutput;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const EngineError& e) {
    err << "engine error: " << e.what() << "\n";
    return kExitEngine;
  } catch (const FitError& e) {
    err << "fit error: " << e.what() << "\n";
    return kExitFit;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace ddsim::cli
