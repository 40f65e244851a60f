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

// Nuclear-spin environment of the electron qubit.
//
// Each 13C nucleus j sees an electron-state-conditional Hamiltonian
//   m_s = 0  (branch 0):  w_L Iz
//   m_s = -1 (branch 1):  (w_L + s a_par) Iz + s a_perp Ix
// where s = BathSpec::hyperfine_sign selects the hyperfine branch convention.
// Nuclear-nuclear couplings are not part of the model.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddsim/common.hpp"
#include "ddsim/quantum.hpp"

namespace ddsim {

struct NucleusParams {
  double a_par_hz = 0.0;
  double a_perp_hz = 0.0;  // >= 0; the transverse phase is absorbed into the nuclear frame
  std::string label;

  double magnitude_hz() const { return std::hypot(a_par_hz, a_perp_hz); }
};

inline constexpr std::size_t kDefaultNucleiCap = 14;

struct BathSpec {
  double b_field_t = 0.0;
  std::vector<NucleusParams> nuclei;
  /// Overrides gamma_C * B when set, so the revival spacing can be pinned
  /// independently of the field.
  std::optional<double> larmor_override_hz;
  /// +1 or -1; flips the sign of the hyperfine terms in branch 1.
  int hyperfine_sign = 1;
  std::size_t nuclei_cap = kDefaultNucleiCap;

  double larmor_hz() const {
    return larmor_override_hz ? *larmor_override_hz : constants::kGammaC13HzPerT * b_field_t;
  }

  /// Larmor period 1 / f_L; infinite at zero field.
  double larmor_period_s() const {
    const double f = larmor_hz();
    return f != 0.0 ? 1.0 / std::abs(f) : std::numeric_limits<double>::infinity();
  }

  std::size_t size() const { return nuclei.size(); }

  /// Relative mismatch between the override and gamma_C * B, 0 when there
  /// is no override.
  double larmor_inconsistency() const {
    if (!larmor_override_hz || b_field_t <= 0.0) return 0.0;
    const double derived = constants::kGammaC13HzPerT * b_field_t;
    return std::abs(*larmor_override_hz - derived) / derived;
  }

  void validate() const {
    if (!std::isfinite(b_field_t) || b_field_t < 0.0) {
      throw ConfigError("bath: b_field_t must be finite and non-negative");
    }
    if (hyperfine_sign != 1 && hyperfine_sign != -1) {
      throw ConfigError("bath: hyperfine_sign must be +1 or -1");
    }
    if (larmor_override_hz && !(std::isfinite(*larmor_override_hz) && *larmor_override_hz > 0.0)) {
      throw ConfigError("bath: larmor override must be positive");
    }
    if (nuclei.size() > nuclei_cap) {
      throw ConfigError("bath: " + std::to_string(nuclei.size()) +
                        " nuclei exceed the cap of " + std::to_string(nuclei_cap));
    }
    for (const auto& n : nuclei) {
      if (!std::isfinite(n.a_par_hz) || !std::isfinite(n.a_perp_hz)) {
        throw ConfigError("bath: non-finite hyperfine coupling");
      }
      if (n.a_perp_hz < 0.0) throw ConfigError("bath: a_perp_hz must be >= 0");
    }
  }
};

/// Rotation vector (rad/s) of the single-nucleus generator w . I in the
/// given electron branch.
inline std::array<double, 3> nuclear_field(const BathSpec& bath, const NucleusParams& n,
                                           int branch) {
  const double wl = units::hz_to_rad_s(bath.larmor_hz());
  if (branch == 0) return {0.0, 0.0, wl};
  const double s = static_cast<double>(bath.hyperfine_sign);
  return {s * units::hz_to_rad_s(n.a_perp_hz), 0.0, wl + s * units::hz_to_rad_s(n.a_par_hz)};
}

namespace detail {

/// 1 (x) ... (x) op at position `site` (x) ... (x) 1 over `count` spin-1/2 factors.
inline Matrix embed_single(const Matrix& op, std::size_t site, std::size_t count) {
  Matrix out = Matrix::Identity(1, 1);
  for (std::size_t k = 0; k < count; ++k) {
    out = kron(out, k == site ? op : Matrix(Matrix::Identity(2, 2)));
  }
  return out;
}

}  // namespace detail

/// Conditional nuclear Hamiltonian (rad/s) over the 2^K nuclear space.
/// Nucleus 0 is the most significant factor.
inline HermitianOp free_hamiltonian(const BathSpec& bath, int branch) {
  if (branch != 0 && branch != 1) throw ConfigError("free_hamiltonian: branch must be 0 or 1");
  const std::size_t k = bath.size();
  const Eigen::Index dim = Eigen::Index{1} << k;
  Matrix h = Matrix::Zero(dim, dim);
  const Matrix ix = spin_half(Axis::kX).matrix();
  const Matrix iy = spin_half(Axis::kY).matrix();
  const Matrix iz = spin_half(Axis::kZ).matrix();
  for (std::size_t j = 0; j < k; ++j) {
    const auto w = nuclear_field(bath, bath.nuclei[j], branch);
    const Matrix local = w[0] * ix + w[1] * iy + w[2] * iz;
    h += detail::embed_single(local, j, k);
  }
  return HermitianOp(std::move(h));
}

/// Electron (x) bath Hamiltonian in the rotating frame, dim 2 * 2^K:
///   offset Sz (x) 1 + |1><1| (x) (h1 - h0) + 1 (x) h0.
/// Block-diagonal in the electron basis.
inline HermitianOp full_hamiltonian(const BathSpec& bath, double offset_rad_s) {
  const Matrix h0 = free_hamiltonian(bath, 0).matrix();
  const Matrix h1 = free_hamiltonian(bath, 1).matrix();
  const Eigen::Index d = h0.rows();
  Matrix h = Matrix::Zero(2 * d, 2 * d);
  h.topLeftCorner(d, d) = h0 + Matrix::Identity(d, d) * (0.5 * offset_rad_s);
  h.bottomRightCorner(d, d) = h1 - Matrix::Identity(d, d) * (0.5 * offset_rad_s);
  return HermitianOp(std::move(h));
}

// ---------------------------------------------------------------------------
// Point-dipole couplings and lattice sampling
// ---------------------------------------------------------------------------

inline constexpr double kMinNucleusDistanceNm = 0.1;

struct HyperfinePair {
  double a_par_hz = 0.0;
  double a_perp_hz = 0.0;
};

/// Dipolar prefactor (mu0/4pi) gamma_e gamma_C hbar / r^3 in Hz.
inline double dipolar_prefactor_hz(double r_nm) {
  const double r = r_nm * 1e-9;
  const double ge = units::hz_to_rad_s(constants::kGammaElectronHzPerT);
  const double gc = units::hz_to_rad_s(constants::kGammaC13HzPerT);
  return units::rad_s_to_hz(constants::kMu0Over4Pi * ge * gc * constants::kHbar / (r * r * r));
}

/// Secular point-dipole hyperfine components for a nucleus at distance
/// r_nm and polar angle theta_r from the NV axis:
///   a_par = d (1 - 3 cos^2), a_perp = 3 d |sin cos|.
inline HyperfinePair hyperfine_point_dipole(double r_nm, double theta_r) {
  if (!(r_nm >= kMinNucleusDistanceNm) || !std::isfinite(r_nm)) {
    throw ConfigError("hyperfine_point_dipole: distance below 0.1 nm floor");
  }
  const double d = dipolar_prefactor_hz(r_nm);
  const double c = std::cos(theta_r);
  const double s = std::sin(theta_r);
  return {d * (1.0 - 3.0 * c * c), 3.0 * d * std::abs(s * c)};
}

struct LatticeSamplerConfig {
  double abundance = 0.011;
  double radius_nm = 2.0;
  double min_coupling_cutoff_hz = 0.0;
  double max_coupling_cutoff_hz = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 1;
  std::size_t nuclei_cap = kDefaultNucleiCap;

  void validate() const {
    if (!(abundance >= 0.0 && abundance <= 1.0)) {
      throw ConfigError("sampler: abundance must lie in [0, 1]");
    }
    if (!(radius_nm > 0.0) || !std::isfinite(radius_nm)) {
      throw ConfigError("sampler: radius_nm must be positive");
    }
    if (!(min_coupling_cutoff_hz >= 0.0) || !(min_coupling_cutoff_hz <= max_coupling_cutoff_hz)) {
      throw ConfigError("sampler: coupling cutoffs must satisfy 0 <= min <= max");
    }
  }
};

struct SampledBath {
  BathSpec bath;
  std::vector<Eigen::Vector3d> positions_nm;  // one per nucleus, NV frame (z along [111])
  std::size_t candidates_in_band = 0;         // occupied sites passing the coupling band
  bool empty = true;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform [0, 1) draw tied to one lattice site, independent of visit order.
inline double site_uniform(std::uint64_t seed, int i, int j, int k, int basis) {
  std::uint64_t h = splitmix64(seed);
  for (int v : {i, j, k, basis}) {
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
  }
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Occupies diamond-lattice sites around the NV with 13C at the given
/// abundance and keeps nuclei whose |A| lies inside the coupling band. When
/// more than `nuclei_cap` survive, the most strongly coupled are kept.
inline SampledBath sample_bath(const LatticeSamplerConfig& cfg, double b_field_t) {
  cfg.validate();
  const double a = constants::kDiamondLatticeNm;
  // Two-point FCC basis of the diamond structure, in units of the cubic cell.
  static constexpr std::array<std::array<double, 3>, 8> kBasis{{{0.0, 0.0, 0.0},
                                                                {0.0, 0.5, 0.5},
                                                                {0.5, 0.0, 0.5},
                                                                {0.5, 0.5, 0.0},
                                                                {0.25, 0.25, 0.25},
                                                                {0.25, 0.75, 0.75},
                                                                {0.75, 0.25, 0.75},
                                                                {0.75, 0.75, 0.25}}};
  // Vacancy at the origin, nitrogen on the neighbouring site along [111].
  const Eigen::Vector3d axis = Eigen::Vector3d(1.0, 1.0, 1.0).normalized();
  // Orthonormal frame with z along the NV axis.
  const Eigen::Vector3d ex = Eigen::Vector3d(1.0, -1.0, 0.0).normalized();
  const Eigen::Vector3d ey = axis.cross(ex);

  struct Candidate {
    Eigen::Vector3d pos;
    HyperfinePair hf;
    std::array<int, 4> site;
  };
  std::vector<Candidate> kept;
  const int n_cells = static_cast<int>(std::ceil(cfg.radius_nm / a)) + 1;
  for (int i = -n_cells; i <= n_cells; ++i) {
    for (int j = -n_cells; j <= n_cells; ++j) {
      for (int k = -n_cells; k <= n_cells; ++k) {
        for (int b = 0; b < static_cast<int>(kBasis.size()); ++b) {
          const Eigen::Vector3d cube(i + kBasis[b][0], j + kBasis[b][1], k + kBasis[b][2]);
          const bool is_vacancy = i == 0 && j == 0 && k == 0 && b == 0;
          const bool is_nitrogen = i == 0 && j == 0 && k == 0 && b == 4;
          if (is_vacancy || is_nitrogen) continue;
          const Eigen::Vector3d r = cube * a;
          const double dist = r.norm();
          if (dist > cfg.radius_nm || dist < kMinNucleusDistanceNm) continue;
          if (detail::site_uniform(cfg.seed, i, j, k, b) >= cfg.abundance) continue;
          const double theta = std::acos(std::clamp(r.dot(axis) / dist, -1.0, 1.0));
          const HyperfinePair hf = hyperfine_point_dipole(dist, theta);
          const double mag = std::hypot(hf.a_par_hz, hf.a_perp_hz);
          if (mag < cfg.min_coupling_cutoff_hz || mag > cfg.max_coupling_cutoff_hz) continue;
          kept.push_back({Eigen::Vector3d(r.dot(ex), r.dot(ey), r.dot(axis)), hf, {i, j, k, b}});
        }
      }
    }
  }
  std::sort(kept.begin(), kept.end(), [](const Candidate& x, const Candidate& y) {
    const double mx = std::hypot(x.hf.a_par_hz, x.hf.a_perp_hz);
    const double my = std::hypot(y.hf.a_par_hz, y.hf.a_perp_hz);
    if (mx != my) return mx > my;
    return x.site < y.site;
  });

  SampledBath out;
  out.candidates_in_band = kept.size();
  out.bath.b_field_t = b_field_t;
  out.bath.nuclei_cap = cfg.nuclei_cap;
  const std::size_t n = std::min(kept.size(), cfg.nuclei_cap);
  for (std::size_t idx = 0; idx < n; ++idx) {
    out.bath.nuclei.push_back(
        {kept[idx].hf.a_par_hz, kept[idx].hf.a_perp_hz, "C" + std::to_string(idx + 1)});
    out.positions_nm.push_back(kept[idx].pos);
  }
  out.empty = out.bath.nuclei.empty();
  return out;
}

}  // namespace ddsim
