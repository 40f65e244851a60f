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

#pragma once

#include <numbers>
#include <stdexcept>
#include <string>

namespace ddsim {

inline constexpr const char* kVersion = "0.3.0";

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Base class of every error raised by the library. The CLI maps the
/// subclasses onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed configuration, invalid parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A simulation could not be carried out (infeasible schedule, dimension
/// over cap, operator outside the engine's domain).
class EngineError : public Error {
 public:
  using Error::Error;
};

/// Curve fitting failed on degenerate input.
class FitError : public Error {
 public:
  using Error::Error;
};

// Frequencies cross the public boundary in Hz and are angular (rad/s)
// everywhere inside the engines. These are the only conversions.
namespace units {

constexpr double hz_to_rad_s(double hz) { return kTwoPi * hz; }
constexpr double rad_s_to_hz(double w) { return w / kTwoPi; }
constexpr double mhz_to_hz(double mhz) { return mhz * 1e6; }
constexpr double us_to_s(double us) { return us * 1e-6; }
constexpr double s_to_us(double s) { return s * 1e6; }
constexpr double ms_to_s(double ms) { return ms * 1e-3; }
constexpr double mt_to_t(double mt) { return mt * 1e-3; }

}  // namespace units

namespace constants {

// Gyromagnetic ratios divided by 2π, in Hz/T.
inline constexpr double kGammaElectronHzPerT = 28.02495e9;
inline constexpr double kGammaC13HzPerT = 10.7084e6;
// CODATA 2022.
inline constexpr double kHbar = 6.62607015e-34 / (2.0 * 3.14159265358979323846);  // J s
inline constexpr double kMu0Over4Pi = 1.25663706127e-6 / (4.0 * 3.14159265358979323846);  // T m / A
inline constexpr double kDiamondLatticeNm = 0.357;

}  // namespace constants

}  // namespace ddsim
