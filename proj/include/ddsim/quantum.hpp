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

// Small-Hilbert-space linear algebra: qubit states, Hermitian generators,
// unitaries and density matrices, plus the handful of operations the
// engines are built from.
//
// Basis convention for the electron qubit: |0> is m_s = 0 (bright state),
// |1> is m_s = -1. Spin operators are S = sigma / 2.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

#include "ddsim/common.hpp"

namespace ddsim {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Matrix2 = Eigen::Matrix2cd;

inline constexpr Complex kI{0.0, 1.0};

namespace detail {

inline double hermitian_residual(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    std::ostringstream msg;
    msg << what << ": expected a non-empty square matrix, got " << m.rows()
        << "x" << m.cols();
    throw EngineError(msg.str());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// QubitState
// ---------------------------------------------------------------------------

/// Pure qubit state cos(theta/2)|0> + sin(theta/2) e^{i phi}|1>.
class QubitState {
 public:
  QubitState() : QubitState(Complex{1.0, 0.0}, Complex{0.0, 0.0}) {}

  /// Normalizes the amplitude pair; a zero vector is rejected.
  QubitState(Complex a0, Complex a1) {
    const double norm = std::sqrt(std::norm(a0) + std::norm(a1));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw ConfigError("QubitState: amplitudes must be finite and non-zero");
    }
    amps_ << a0 / norm, a1 / norm;
  }

  static QubitState from_angles(double theta, double phi) {
    return QubitState(Complex{std::cos(theta / 2.0), 0.0},
                      std::polar(std::sin(theta / 2.0), phi));
  }

  static QubitState zero() { return from_angles(0.0, 0.0); }
  static QubitState one() { return from_angles(kPi, 0.0); }
  /// (|0> + |1>)/sqrt(2)
  static QubitState x() { return from_angles(kPi / 2.0, 0.0); }
  /// (|0> + i|1>)/sqrt(2)
  static QubitState y() { return from_angles(kPi / 2.0, kPi / 2.0); }

  const Eigen::Vector2cd& amplitudes() const { return amps_; }
  Complex a0() const { return amps_(0); }
  Complex a1() const { return amps_(1); }

  /// Polar angle in [0, pi].
  double theta() const {
    return 2.0 * std::atan2(std::abs(amps_(1)), std::abs(amps_(0)));
  }

  /// Azimuth in [0, 2pi); 0 at the poles where it is undefined.
  double phi() const {
    if (std::abs(amps_(0)) < 1e-300 || std::abs(amps_(1)) < 1e-300) return 0.0;
    double p = std::arg(amps_(1)) - std::arg(amps_(0));
    p = std::fmod(p, kTwoPi);
    if (p < 0.0) p += kTwoPi;
    return p;
  }

  Matrix projector() const { return amps_ * amps_.adjoint(); }

 private:
  Eigen::Vector2cd amps_;
};

// ---------------------------------------------------------------------------
// Operator wrappers
// ---------------------------------------------------------------------------

/// Hermitian operator. Construction checks the symmetry residual and then
/// symmetrizes exactly.
class HermitianOp {
 public:
  static constexpr double kTolerance = 1e-8;

  HermitianOp() : m_(Matrix::Zero(1, 1)) {}

  explicit HermitianOp(Matrix m) : m_(std::move(m)) {
    detail::require_square(m_, "HermitianOp");
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    const double res = detail::hermitian_residual(m_);
    if (!(res <= kTolerance * scale)) {
      std::ostringstream msg;
      msg << "HermitianOp: matrix is not Hermitian (residual " << res << ")";
      throw EngineError(msg.str());
    }
    m_ = (0.5 * (m_ + m_.adjoint())).eval();
  }

  static HermitianOp zero(Eigen::Index dim) { return HermitianOp(Matrix::Zero(dim, dim)); }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }

  friend HermitianOp operator+(const HermitianOp& a, const HermitianOp& b) {
    return HermitianOp(a.m_ + b.m_);
  }
  friend HermitianOp operator-(const HermitianOp& a, const HermitianOp& b) {
    return HermitianOp(a.m_ - b.m_);
  }
  friend HermitianOp operator*(double s, const HermitianOp& a) { return HermitianOp(s * a.m_); }

 private:
  Matrix m_;
};

/// Unitary operator.
class Unitary {
 public:
  static constexpr double kTolerance = 1e-10;

  Unitary() : m_(Matrix::Identity(1, 1)) {}

  /// Checks U^dagger U = 1 within kTolerance.
  explicit Unitary(Matrix m) : m_(std::move(m)) {
    detail::require_square(m_, "Unitary");
    const double res =
        (m_.adjoint() * m_ - Matrix::Identity(m_.rows(), m_.cols())).cwiseAbs().maxCoeff();
    if (!(res <= kTolerance)) {
      std::ostringstream msg;
      msg << "Unitary: matrix is not unitary (residual " << res << ")";
      throw EngineError(msg.str());
    }
  }

  /// For matrices that are unitary by construction (exponentials, products).
  static Unitary trusted(Matrix m) {
    Unitary u;
    u.m_ = std::move(m);
    return u;
  }

  static Unitary identity(Eigen::Index dim) { return trusted(Matrix::Identity(dim, dim)); }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  Unitary adjoint() const { return trusted(m_.adjoint()); }

  friend Unitary operator*(const Unitary& a, const Unitary& b) { return trusted(a.m_ * b.m_); }

 private:
  Matrix m_;
};

/// Density matrix: Hermitian, unit trace, positive semidefinite.
class DensityMatrix {
 public:
  static constexpr double kTolerance = 1e-10;
  static constexpr double kEigenFloor = -1e-9;

  DensityMatrix() : m_(Matrix::Identity(2, 2) * 0.5) {}

  explicit DensityMatrix(Matrix m) : m_(std::move(m)) {
    detail::require_square(m_, "DensityMatrix");
    if (detail::hermitian_residual(m_) > kTolerance) {
      throw EngineError("DensityMatrix: matrix is not Hermitian");
    }
    m_ = (0.5 * (m_ + m_.adjoint())).eval();
    if (std::abs(m_.trace() - Complex{1.0, 0.0}) > kTolerance) {
      std::ostringstream msg;
      msg << "DensityMatrix: trace " << m_.trace().real() << " != 1";
      throw EngineError(msg.str());
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < kEigenFloor) {
      throw EngineError("DensityMatrix: negative eigenvalue");
    }
  }

  static DensityMatrix pure(const QubitState& s) { return DensityMatrix(s.projector()); }
  static DensityMatrix maximally_mixed(Eigen::Index dim) {
    return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

// ---------------------------------------------------------------------------
// Elementary operations
// ---------------------------------------------------------------------------

enum class Axis { kX, kY, kZ };

/// 2x2 Pauli matrix (not halved).
inline HermitianOp pauli(Axis axis) {
  Matrix m(2, 2);
  switch (axis) {
    case Axis::kX:
      m << 0.0, 1.0, 1.0, 0.0;
      break;
    case Axis::kY:
      m << 0.0, -kI, kI, 0.0;
      break;
    case Axis::kZ:
      m << 1.0, 0.0, 0.0, -1.0;
      break;
  }
  return HermitianOp(std::move(m));
}

/// Spin-1/2 operator sigma/2.
inline HermitianOp spin_half(Axis axis) { return 0.5 * pauli(axis); }

/// Kronecker product; the left factor is the most significant subsystem.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline HermitianOp kron(const HermitianOp& a, const HermitianOp& b) {
  return HermitianOp(kron(a.matrix(), b.matrix()));
}

inline Unitary kron(const Unitary& a, const Unitary& b) {
  return Unitary::trusted(kron(a.matrix(), b.matrix()));
}

/// exp(-i h t) from the eigendecomposition of h. `h` is angular (rad/s),
/// `t` in seconds.
inline Unitary propagator(const HermitianOp& h, double t) {
  if (t == 0.0) return Unitary::identity(h.dim());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.matrix());
  if (es.info() != Eigen::Success) {
    throw EngineError("propagator: eigendecomposition failed");
  }
  const Eigen::VectorXd& evals = es.eigenvalues();
  Vector phases(evals.size());
  for (Eigen::Index k = 0; k < evals.size(); ++k) {
    phases(k) = std::polar(1.0, -evals(k) * t);
  }
  const Matrix& v = es.eigenvectors();
  return Unitary::trusted(v * phases.asDiagonal() * v.adjoint());
}

/// Closed-form exp(-i (w . S) t) for a 2x2 generator w_x Sx + w_y Sy + w_z Sz.
inline Matrix2 spin_half_exp(double wx, double wy, double wz, double t) {
  const double w = std::sqrt(wx * wx + wy * wy + wz * wz);
  Matrix2 u;
  if (w * std::abs(t) < 1e-300) {
    u.setIdentity();
    return u;
  }
  const double half = 0.5 * w * t;
  const double c = std::cos(half);
  const double s = std::sin(half) / w;
  // cos(wt/2) 1 - i sin(wt/2) (n . sigma)
  u(0, 0) = Complex{c, -s * wz};
  u(1, 1) = Complex{c, s * wz};
  u(0, 1) = Complex{-s * wy, -s * wx};
  u(1, 0) = Complex{s * wy, -s * wx};
  return u;
}

/// Rectangular pulse: generator rabi (cos(phase) Sx + sin(phase) Sy) + offset Sz
/// applied for angle / rabi seconds. With zero offset this is the ideal
/// rotation by `angle` about the in-plane axis at azimuth `phase`.
inline Unitary rotation(double angle, double phase, double offset_rad_s, double rabi_rad_s) {
  if (!(rabi_rad_s > 0.0)) throw ConfigError("rotation: rabi frequency must be positive");
  const double tp = angle / rabi_rad_s;
  const Matrix2 u = spin_half_exp(rabi_rad_s * std::cos(phase), rabi_rad_s * std::sin(phase),
                                  offset_rad_s, tp);
  return Unitary::trusted(Matrix(u));
}

/// <psi| rho |psi>, clamped into [0, 1].
inline double survival(const QubitState& initial, const DensityMatrix& final_reduced) {
  if (final_reduced.dim() != 2) {
    throw EngineError("survival: final state must be a qubit density matrix");
  }
  const auto& a = initial.amplitudes();
  const double p = (a.adjoint() * final_reduced.matrix() * a)(0, 0).real();
  return std::clamp(p, 0.0, 1.0);
}

/// Traces out the right (least significant) factor of a bipartite operator.
inline Matrix partial_trace_right(const Matrix& rho, Eigen::Index dim_left,
                                  Eigen::Index dim_right) {
  if (rho.rows() != dim_left * dim_right || rho.cols() != rho.rows()) {
    throw EngineError("partial_trace_right: dimension mismatch");
  }
  Matrix out = Matrix::Zero(dim_left, dim_left);
  for (Eigen::Index i = 0; i < dim_left; ++i) {
    for (Eigen::Index j = 0; j < dim_left; ++j) {
      out(i, j) = rho.block(i * dim_right, j * dim_right, dim_right, dim_right).trace();
    }
  }
  return out;
}

/// Phase-insensitive gate fidelity |Tr(A^dagger B)| / d.
inline double gate_fidelity(const Unitary& a, const Unitary& b) {
  return std::abs((a.matrix().adjoint() * b.matrix()).trace()) / static_cast<double>(a.dim());
}

/// |<a|b>|^2
inline double state_fidelity(const QubitState& a, const QubitState& b) {
  return std::norm(a.amplitudes().dot(b.amplitudes()));
}

}  // namespace ddsim
