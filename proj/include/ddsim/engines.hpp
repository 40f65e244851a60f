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

// Evolution engines for the electron qubit coupled to the nuclear bath.
//
// analytic: ideal instantaneous pi pulses. Each nucleus carries two
//   conditional propagators V0, V1 (one per starting electron branch); the
//   infinite-temperature bath average of the coherence is
//   L = prod_j Tr(V0_j^dagger V1_j) / 2.
// full: exact piecewise-constant evolution of electron (x) bath with
//   imperfect pulses, averaged over nuclear computational-basis states.
//
// Both produce a QubitChannel; the Markovian envelope (T1, t_markov) is
// applied to the reduced state at the end of the sequence.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <tuple>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ddsim/bath.hpp"
#include "ddsim/common.hpp"
#include "ddsim/parallel.hpp"
#include "ddsim/quantum.hpp"
#include "ddsim/sequence.hpp"

namespace ddsim {

struct EnvelopeParams {
  double t1_s = 4e-3;
  double t_markov_s = std::numeric_limits<double>::infinity();

  static EnvelopeParams none() {
    return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }

  void validate() const {
    if (!(t1_s > 0.0) || !(t_markov_s > 0.0)) {
      throw ConfigError("envelope: t1 and t_markov must be positive (or infinite)");
    }
  }
};

/// Linear map on qubit operators, rho -> sum_ab rho_ab M_ab where M_ab is
/// the image of |a><b|.
struct QubitChannel {
  std::array<Matrix2, 4> images{};  // index 2 a + b

  static QubitChannel from_unitary(const Matrix2& u) {
    QubitChannel ch;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) ch.images[2 * a + b] = u.col(a) * u.col(b).adjoint();
    }
    return ch;
  }

  Matrix2 apply(const Matrix2& rho) const {
    Matrix2 out = Matrix2::Zero();
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) out += rho(a, b) * images[2 * a + b];
    }
    return out;
  }

  DensityMatrix apply(const QubitState& s) const {
    return DensityMatrix(Matrix(apply(Matrix2(s.projector()))));
  }
};

// ---------------------------------------------------------------------------
// Analytic conditional-propagator engine
// ---------------------------------------------------------------------------

struct CoherenceResult {
  Complex l_complex{1.0, 0.0};
  Matrix2 pulse_product = Matrix2::Identity();  // ideal pulse train, later pulses on the left
  int n_pulses = 0;

  /// Populations (p0, p1) reached from |0>: unchanged for even pulse counts,
  /// swapped for odd.
  std::array<double, 2> populations() const {
    const double p0 = std::norm(pulse_product(0, 0));
    return {p0, 1.0 - p0};
  }

  QubitChannel channel() const {
    // rho_01 is multiplied by conj(L) before the pulse product acts.
    QubitChannel ch;
    const Complex factor[4] = {1.0, std::conj(l_complex), l_complex, 1.0};
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        ch.images[2 * a + b] =
            factor[2 * a + b] * (pulse_product.col(a) * pulse_product.col(b).adjoint());
      }
    }
    return ch;
  }

  DensityMatrix final_state(const QubitState& initial) const { return channel().apply(initial); }
};

inline Matrix2 ideal_pi_pulse(double phase) {
  return Matrix2(rotation(kPi, phase, 0.0, 1.0).matrix());
}

inline void require_analytic_domain(const SequenceSpec& seq) {
  for (const auto& e : seq.events) {
    if (std::abs(e.pulse.nominal_angle - kPi) > 1e-12 ||
        e.pulse.kind != PulseKind::kInstantaneous) {
      throw EngineError(
          "analytic engine requires ideal instantaneous pi pulses; use the full engine");
    }
  }
}

inline CoherenceResult analytic_coherence(const SequenceSpec& seq, const BathSpec& bath) {
  bath.validate();
  require_analytic_domain(seq);
  CoherenceResult r;
  r.n_pulses = seq.n_pulses();
  for (const auto& e : seq.events) r.pulse_product = ideal_pi_pulse(e.pulse.phase) * r.pulse_product;

  std::vector<double> delays;
  for (const auto& e : seq.events) delays.push_back(e.delay_s);
  delays.push_back(seq.trailing_delay_s);

  Complex l{1.0, 0.0};
  for (const auto& nucleus : bath.nuclei) {
    const auto w0 = nuclear_field(bath, nucleus, 0);
    const auto w1 = nuclear_field(bath, nucleus, 1);
    std::array<Matrix2, 2> v{Matrix2::Identity(), Matrix2::Identity()};
    for (int start = 0; start < 2; ++start) {
      int branch = start;
      for (double t : delays) {
        const auto& w = branch == 0 ? w0 : w1;
        v[start] = spin_half_exp(w[0], w[1], w[2], t) * v[start];
        branch ^= 1;
      }
    }
    l *= 0.5 * (v[0].adjoint() * v[1]).trace();
  }
  r.l_complex = l;
  return r;
}

// ---------------------------------------------------------------------------
// Full engine
// ---------------------------------------------------------------------------

struct FullEngineOptions {
  std::size_t bath_samples = 256;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  /// Nuclear basis states are enumerated exactly when 2^K is at most
  /// max(enumerate_limit, bath_samples).
  std::size_t enumerate_limit = 4096;
  /// Finite pulses use a dense eigendecomposition up to this Hilbert-space
  /// dimension and a Lanczos propagator above it.
  Eigen::Index dense_pulse_limit = 256;
};

namespace detail {

/// Applies a 2x2 gate to bit `bit` of the index range [begin, begin + len).
inline void apply_bit_gate(Vector& psi, Eigen::Index begin, Eigen::Index len, int bit,
                           const Matrix2& u) {
  const Eigen::Index stride = Eigen::Index{1} << bit;
  for (Eigen::Index base = begin; base < begin + len; base += 2 * stride) {
    for (Eigen::Index i = base; i < base + stride; ++i) {
      const Complex a = psi(i);
      const Complex b = psi(i + stride);
      psi(i) = u(0, 0) * a + u(0, 1) * b;
      psi(i + stride) = u(1, 0) * a + u(1, 1) * b;
    }
  }
}

struct FreeOp {
  std::vector<std::array<Matrix2, 2>> nuclear;  // per nucleus, per branch
  std::array<Complex, 2> electron_phase{1.0, 1.0};
};

struct ElectronOp {
  Matrix2 u;
};

struct DenseOp {
  std::shared_ptr<const Matrix> u;
};

struct KrylovOp {
  double duration_s;
  double drive_rad_s;
  double phase;
  double offset_rad_s;
};

using CompiledOp = std::variant<FreeOp, ElectronOp, DenseOp, KrylovOp>;

/// Structured action of the pulse Hamiltonian
///   offset Sz + drive (cos phase Sx + sin phase Sy) + sum_j [branch-conditional w_j . I_j].
inline Vector apply_pulse_hamiltonian(const Vector& psi, const BathSpec& bath,
                                      const KrylovOp& op) {
  const std::size_t k = bath.size();
  const Eigen::Index half = Eigen::Index{1} << k;
  Vector out(psi.size());
  out.head(half) = (0.5 * op.offset_rad_s) * psi.head(half) +
                   (0.5 * op.drive_rad_s * std::polar(1.0, -op.phase)) * psi.tail(half);
  out.tail(half) = (-0.5 * op.offset_rad_s) * psi.tail(half) +
                   (0.5 * op.drive_rad_s * std::polar(1.0, op.phase)) * psi.head(half);
  for (int e = 0; e < 2; ++e) {
    const Eigen::Index begin = e * half;
    for (std::size_t j = 0; j < k; ++j) {
      const auto w = nuclear_field(bath, bath.nuclei[j], e);
      Matrix2 g;
      g << 0.5 * w[2], Complex{0.5 * w[0], -0.5 * w[1]}, Complex{0.5 * w[0], 0.5 * w[1]},
          -0.5 * w[2];
      const int bit = static_cast<int>(k - 1 - j);
      const Eigen::Index stride = Eigen::Index{1} << bit;
      for (Eigen::Index base = begin; base < begin + half; base += 2 * stride) {
        for (Eigen::Index i = base; i < base + stride; ++i) {
          const Complex a = psi(i);
          const Complex b = psi(i + stride);
          out(i) += g(0, 0) * a + g(0, 1) * b;
          out(i + stride) += g(1, 0) * a + g(1, 1) * b;
        }
      }
    }
  }
  return out;
}

inline double pulse_hamiltonian_bound(const BathSpec& bath, const KrylovOp& op) {
  double bound = 0.5 * (std::abs(op.offset_rad_s) + std::abs(op.drive_rad_s));
  for (const auto& n : bath.nuclei) {
    double m = 0.0;
    for (int e = 0; e < 2; ++e) {
      const auto w = nuclear_field(bath, n, e);
      m = std::max(m, std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]));
    }
    bound += 0.5 * m;
  }
  return bound;
}

/// exp(-i H t) psi by Lanczos with time stepping.
inline void krylov_propagate(Vector& psi, const BathSpec& bath, const KrylovOp& op) {
  constexpr int kMaxDim = 30;
  const double bound = pulse_hamiltonian_bound(bath, op);
  const int steps = std::max(1, static_cast<int>(std::ceil(bound * op.duration_s / 4.0)));
  const double dt = op.duration_s / steps;
  for (int s = 0; s < steps; ++s) {
    const double beta0 = psi.norm();
    if (beta0 == 0.0) return;
    std::vector<Vector> basis;
    std::vector<double> alpha;
    std::vector<double> beta;
    basis.push_back(psi / beta0);
    for (int m = 0; m < kMaxDim; ++m) {
      Vector w = apply_pulse_hamiltonian(basis[m], bath, op);
      const double a = basis[m].dot(w).real();
      alpha.push_back(a);
      w -= a * basis[m];
      if (m > 0) w -= beta[m - 1] * basis[m - 1];
      // Full reorthogonalization; the Krylov spaces here are tiny.
      for (const auto& q : basis) w -= q.dot(w) * q;
      const double b = w.norm();
      if (b < 1e-13 * (std::abs(a) + 1.0) || m + 1 == kMaxDim) break;
      beta.push_back(b);
      basis.push_back(w / b);
    }
    const int dim = static_cast<int>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < dim) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    Vector coeff(dim);
    for (int i = 0; i < dim; ++i) {
      Complex c{0.0, 0.0};
      for (int j = 0; j < dim; ++j) {
        c += es.eigenvectors()(i, j) * std::polar(1.0, -es.eigenvalues()(j) * dt) *
             es.eigenvectors()(0, j);
      }
      coeff(i) = c;
    }
    Vector next = Vector::Zero(psi.size());
    for (int i = 0; i < dim; ++i) next += coeff(i) * basis[i];
    psi = beta0 * next;
  }
}

/// Segment list lowered to operators, sharing one propagator per distinct
/// segment.
class CompiledSequence {
 public:
  CompiledSequence(const ConcreteSequence& seq, const BathSpec& bath,
                   const FullEngineOptions& opts)
      : bath_(bath), k_(bath.size()) {
    const Eigen::Index dim = Eigen::Index{2} << k_;
    for (const auto& seg : seq.segments) {
      if (const auto* f = std::get_if<FreeSegment>(&seg)) {
        if (f->duration_s == 0.0) continue;
        const auto key = std::make_tuple(f->duration_s, f->offset_rad_s);
        auto it = free_cache_.find(key);
        if (it == free_cache_.end()) {
          FreeOp op;
          for (const auto& n : bath.nuclei) {
            std::array<Matrix2, 2> per_branch;
            for (int e = 0; e < 2; ++e) {
              const auto w = nuclear_field(bath, n, e);
              per_branch[e] = spin_half_exp(w[0], w[1], w[2], f->duration_s);
            }
            op.nuclear.push_back(per_branch);
          }
          op.electron_phase = {std::polar(1.0, -0.5 * f->offset_rad_s * f->duration_s),
                               std::polar(1.0, 0.5 * f->offset_rad_s * f->duration_s)};
          it = free_cache_.emplace(key, ops_.size()).first;
          ops_.emplace_back(std::move(op));
        }
        program_.push_back(it->second);
        continue;
      }
      const auto& p = std::get<PulseSegment>(seg);
      const auto key = std::make_tuple(p.angle, p.phase, p.offset_rad_s, p.rabi_rad_s,
                                       static_cast<int>(p.kind));
      auto it = pulse_cache_.find(key);
      if (it == pulse_cache_.end()) {
        CompiledOp op;
        if (p.kind == PulseKind::kInstantaneous || k_ == 0) {
          // Without nuclei a finite pulse is just the tilted 2x2 rotation.
          op = ElectronOp{Matrix2(rotation(p.angle, p.phase, p.offset_rad_s, p.rabi_rad_s).matrix())};
        } else if (dim <= opts.dense_pulse_limit) {
          Matrix drive = kron(Matrix(p.rabi_rad_s * (std::cos(p.phase) * spin_half(Axis::kX).matrix() +
                                                     std::sin(p.phase) * spin_half(Axis::kY).matrix())),
                              Matrix(Matrix::Identity(dim / 2, dim / 2)));
          const HermitianOp h(full_hamiltonian(bath, p.offset_rad_s).matrix() + drive);
          op = DenseOp{std::make_shared<const Matrix>(propagator(h, p.duration_s()).matrix())};
        } else {
          op = KrylovOp{p.duration_s(), p.rabi_rad_s, p.phase, p.offset_rad_s};
        }
        it = pulse_cache_.emplace(key, ops_.size()).first;
        ops_.push_back(std::move(op));
      }
      program_.push_back(it->second);
    }
  }

  std::size_t distinct_segments() const { return ops_.size(); }
  std::size_t program_length() const { return program_.size(); }

  void evolve(Vector& psi) const {
    const Eigen::Index half = Eigen::Index{1} << k_;
    for (std::size_t idx : program_) {
      const CompiledOp& op = ops_[idx];
      if (const auto* f = std::get_if<FreeOp>(&op)) {
        for (int e = 0; e < 2; ++e) {
          const Eigen::Index begin = e * half;
          for (std::size_t j = 0; j < k_; ++j) {
            apply_bit_gate(psi, begin, half, static_cast<int>(k_ - 1 - j), f->nuclear[j][e]);
          }
          psi.segment(begin, half) *= f->electron_phase[e];
        }
      } else if (const auto* el = std::get_if<ElectronOp>(&op)) {
        apply_bit_gate(psi, 0, 2 * half, static_cast<int>(k_), el->u);
      } else if (const auto* d = std::get_if<DenseOp>(&op)) {
        psi = (*d->u) * psi;
      } else {
        krylov_propagate(psi, bath_, std::get<KrylovOp>(op));
      }
    }
  }

 private:
  const BathSpec& bath_;
  std::size_t k_;
  std::vector<CompiledOp> ops_;
  std::vector<std::size_t> program_;
  std::map<std::tuple<double, double>, std::size_t> free_cache_;
  std::map<std::tuple<double, double, double, double, int>, std::size_t> pulse_cache_;
};

inline void check_dimension(const BathSpec& bath) {
  if (bath.size() > bath.nuclei_cap) {
    const double dim = std::ldexp(2.0, static_cast<int>(bath.size()));
    std::ostringstream msg;
    msg << "full engine: " << bath.size() << " nuclei exceed the cap of " << bath.nuclei_cap
        << " (state dimension " << dim << ", about " << dim * 16.0 * 4.0 / (1 << 20)
        << " MiB of working vectors per worker)";
    throw EngineError(msg.str());
  }
}

}  // namespace detail

/// Nuclear basis states used by the full engine with their weights.
inline std::vector<std::uint64_t> nuclear_basis_states(std::size_t k,
                                                       const FullEngineOptions& opts) {
  const double count = std::ldexp(1.0, static_cast<int>(k));
  std::vector<std::uint64_t> states;
  if (count <= static_cast<double>(std::max(opts.enumerate_limit, opts.bath_samples))) {
    for (std::uint64_t s = 0; s < static_cast<std::uint64_t>(count); ++s) states.push_back(s);
    return states;
  }
  const std::uint64_t mask = (std::uint64_t{1} << k) - 1;
  for (std::size_t i = 0; i < opts.bath_samples; ++i) {
    states.push_back(detail::splitmix64(opts.seed ^ detail::splitmix64(i)) & mask);
  }
  return states;
}

/// Evolves |electron> (x) |nuclear basis state> through the sequence and
/// returns the full state vector (electron is the most significant factor).
inline Vector evolve_pure(const ConcreteSequence& seq, const BathSpec& bath,
                          const Eigen::Vector2cd& electron, std::uint64_t nuclear_state,
                          const FullEngineOptions& opts = {}) {
  detail::check_dimension(bath);
  const detail::CompiledSequence program(seq, bath, opts);
  const Eigen::Index half = Eigen::Index{1} << bath.size();
  Vector psi = Vector::Zero(2 * half);
  psi(static_cast<Eigen::Index>(nuclear_state)) = electron(0);
  psi(half + static_cast<Eigen::Index>(nuclear_state)) = electron(1);
  program.evolve(psi);
  return psi;
}

/// Bath-averaged qubit channel of a concrete sequence.
inline QubitChannel full_channel(const ConcreteSequence& seq, const BathSpec& bath,
                                 const FullEngineOptions& opts = {}) {
  bath.validate();
  detail::check_dimension(bath);
  const detail::CompiledSequence program(seq, bath, opts);
  const Eigen::Index half = Eigen::Index{1} << bath.size();
  const auto states = nuclear_basis_states(bath.size(), opts);

  std::vector<QubitChannel> partial(states.size());
  parallel_for(states.size(), opts.threads, [&](std::size_t i) {
    std::array<Vector, 2> out;
    for (int a = 0; a < 2; ++a) {
      out[a] = Vector::Zero(2 * half);
      out[a](a * half + static_cast<Eigen::Index>(states[i])) = 1.0;
      program.evolve(out[a]);
    }
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        Matrix2 m;
        for (int e = 0; e < 2; ++e) {
          for (int f = 0; f < 2; ++f) {
            m(e, f) = out[b].segment(f * half, half).dot(out[a].segment(e * half, half));
          }
        }
        partial[i].images[2 * a + b] = m;
      }
    }
  });

  QubitChannel total;
  for (auto& m : total.images) m.setZero();
  for (const auto& p : partial) {
    for (int c = 0; c < 4; ++c) total.images[c] += p.images[c];
  }
  const double w = 1.0 / static_cast<double>(states.size());
  for (auto& m : total.images) m *= w;
  return total;
}

inline DensityMatrix full_evolve(const ConcreteSequence& seq, const BathSpec& bath,
                                 const QubitState& initial, const FullEngineOptions& opts = {}) {
  return full_channel(seq, bath, opts).apply(initial);
}

// ---------------------------------------------------------------------------
// Markovian envelope
// ---------------------------------------------------------------------------

/// Off-diagonals decay by exp(-t/t_markov - t/(2 T1)); populations relax
/// toward (1/2, 1/2) by exp(-t/T1).
inline Matrix2 apply_envelope(const Matrix2& rho, double total_time_s, const EnvelopeParams& env) {
  env.validate();
  const double t = total_time_s;
  const double pop = std::exp(-t / env.t1_s);
  const double coh = std::exp(-t / env.t_markov_s - t / (2.0 * env.t1_s));
  Matrix2 out;
  const double p0 = rho(0, 0).real();
  const double p1 = rho(1, 1).real();
  const double mean = 0.5 * (p0 + p1);
  out(0, 0) = mean + (p0 - mean) * pop;
  out(1, 1) = mean + (p1 - mean) * pop;
  out(0, 1) = rho(0, 1) * coh;
  out(1, 0) = rho(1, 0) * coh;
  return out;
}

inline DensityMatrix apply_envelope(const DensityMatrix& rho, double total_time_s,
                                    const EnvelopeParams& env) {
  if (rho.dim() != 2) throw EngineError("apply_envelope: qubit density matrix required");
  return DensityMatrix(Matrix(apply_envelope(Matrix2(rho.matrix()), total_time_s, env)));
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

enum class EngineChoice { kAuto, kAnalytic, kFull };

struct SimulationOptions {
  EngineChoice engine = EngineChoice::kAuto;
  FullEngineOptions full;
};

inline bool analytic_applicable(const SequenceSpec& seq, const ErrorModel& err) {
  if (!err.is_ideal()) return false;
  for (const auto& e : seq.events) {
    if (std::abs(e.pulse.nominal_angle - kPi) > 1e-12 ||
        e.pulse.kind != PulseKind::kInstantaneous) {
      return false;
    }
  }
  return true;
}

/// Qubit channel of the sequence under the error model, without envelope.
inline QubitChannel sequence_channel(const SequenceSpec& seq, const BathSpec& bath,
                                     const ErrorModel& err, const SimulationOptions& opts = {}) {
  const bool analytic = opts.engine == EngineChoice::kAnalytic ||
                        (opts.engine == EngineChoice::kAuto && analytic_applicable(seq, err));
  if (analytic) {
    if (!err.is_ideal()) throw EngineError("analytic engine requires the zero error model");
    return analytic_coherence(seq, bath).channel();
  }
  return full_channel(apply_errors(seq, err), bath, opts.full);
}

/// Total elapsed time of the sequence as executed.
inline double executed_time_s(const SequenceSpec& seq, const ErrorModel& err) {
  return apply_errors(seq, err).total_time_s();
}

inline double survival_after(const QubitChannel& ch, const QubitState& initial,
                             double total_time_s, const EnvelopeParams& env) {
  const Matrix2 rho = apply_envelope(ch.apply(Matrix2(initial.projector())), total_time_s, env);
  return survival(initial, DensityMatrix(Matrix(rho)));
}

inline double survival_for(const SequenceSpec& seq, const BathSpec& bath, const ErrorModel& err,
                           const QubitState& initial, const EnvelopeParams& env,
                           const SimulationOptions& opts = {}) {
  const QubitChannel ch = sequence_channel(seq, bath, err, opts);
  return survival_after(ch, initial, executed_time_s(seq, err), env);
}

}  // namespace ddsim
