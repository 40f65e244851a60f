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


#include <gtest/gtest.h>

#include <random>

#include "ddsim/quantum.hpp"

namespace ddsim {
namespace {

constexpr double kTight = 1e-12;

Matrix2 as2(const Unitary& u) { return Matrix2(u.matrix()); }

TEST(PauliTest, SquaresToIdentity) {
  for (Axis a : {Axis::kX, Axis::kY, Axis::kZ}) {
    const Matrix p = pauli(a).matrix();
    EXPECT_LT((p * p - Matrix::Identity(2, 2)).norm(), kTight);
  }
}

TEST(PauliTest, CommutatorXY) {
  const Matrix x = pauli(Axis::kX).matrix();
  const Matrix y = pauli(Axis::kY).matrix();
  const Matrix z = pauli(Axis::kZ).matrix();
  EXPECT_LT((x * y - y * x - Complex(0, 2) * z).norm(), kTight);
}

TEST(KronTest, DimensionsAndOrdering) {
  const Matrix z = pauli(Axis::kZ).matrix();
  const Matrix i2 = Matrix::Identity(2, 2);
  const Matrix k = kron(z, i2);
  ASSERT_EQ(k.rows(), 4);
  // Left factor is the most significant index.
  EXPECT_NEAR(k(0, 0).real(), 1.0, kTight);
  EXPECT_NEAR(k(1, 1).real(), 1.0, kTight);
  EXPECT_NEAR(k(2, 2).real(), -1.0, kTight);
  EXPECT_NEAR(k(3, 3).real(), -1.0, kTight);
}

TEST(KronTest, MixedProduct) {
  const Matrix a = pauli(Axis::kX).matrix();
  const Matrix b = pauli(Axis::kY).matrix();
  const Matrix c = pauli(Axis::kZ).matrix();
  const Matrix d = pauli(Axis::kX).matrix();
  EXPECT_LT((kron(a, b) * kron(c, d) - kron(a * c, b * d)).norm(), kTight);
}

TEST(HermitianOpTest, RejectsNonHermitian) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  EXPECT_THROW(HermitianOp{m}, EngineError);
}

TEST(PropagatorTest, ZeroTimeIsIdentity) {
  const Unitary u = propagator(spin_half(Axis::kX), 0.0);
  EXPECT_LT((u.matrix() - Matrix::Identity(2, 2)).norm(), kTight);
}

TEST(PropagatorTest, Semigroup) {
  const HermitianOp h = 3.0 * spin_half(Axis::kX) + (-1.5) * spin_half(Axis::kZ);
  const Matrix lhs = propagator(h, 0.7).matrix() * propagator(h, 0.4).matrix();
  EXPECT_LT((lhs - propagator(h, 1.1).matrix()).norm(), 1e-12);
}

TEST(PropagatorTest, MatchesClosedFormSpinHalf) {
  const HermitianOp h = 0.3 * spin_half(Axis::kX) + 1.1 * spin_half(Axis::kY) +
                        (-0.4) * spin_half(Axis::kZ);
  const Matrix2 closed = spin_half_exp(0.3, 1.1, -0.4, 2.3);
  EXPECT_LT((Matrix(closed) - propagator(h, 2.3).matrix()).norm(), 1e-12);
}

TEST(PropagatorTest, RandomHermitianIsUnitary) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10000; ++trial) {
    const int dim = 2 + trial % 7;
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) m(i, j) = Complex(g(rng), g(rng));
    }
    const HermitianOp h(Matrix(m + m.adjoint()));
    const Matrix u = propagator(h, g(rng)).matrix();
    ASSERT_LT((u.adjoint() * u - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff(), 1e-10)
        << "trial " << trial;
  }
}

TEST(RotationTest, PiAboutXFlipsZero) {
  const Matrix2 u = as2(rotation(kPi, 0.0, 0.0, 1.0));
  EXPECT_NEAR(std::norm(u(1, 0)), 1.0, kTight);
}

TEST(RotationTest, PiHalfAboutYTakesZeroToX) {
  const Matrix2 u = as2(rotation(kPi / 2.0, kPi / 2.0, 0.0, 1.0));
  const Eigen::Vector2cd out = u * QubitState::zero().amplitudes();
  const QubitState s(out(0), out(1));
  EXPECT_NEAR(state_fidelity(s, QubitState::x()), 1.0, 1e-12);
}

TEST(RotationTest, OffsetPiPulseFlipProbability) {
  // Frozen from an independent closed-form evaluation: Omega = 2 pi 12.5 MHz,
  // Delta = 2 pi 2 MHz, duration pi / Omega.
  const Matrix2 u = as2(rotation(kPi, 0.0, kTwoPi * 2e6, kTwoPi * 12.5e6));
  EXPECT_NEAR(std::norm(u(1, 0)), 0.9746498511024216, 1e-12);
}

TEST(RotationTest, RejectsNonPositiveRabi) {
  EXPECT_THROW(rotation(kPi, 0.0, 0.0, 0.0), ConfigError);
}

TEST(SurvivalTest, Examples) {
  EXPECT_NEAR(survival(QubitState::zero(), DensityMatrix::pure(QubitState::zero())), 1.0, kTight);
  EXPECT_NEAR(survival(QubitState::zero(), DensityMatrix::pure(QubitState::one())), 0.0, kTight);
  EXPECT_NEAR(survival(QubitState::x(), DensityMatrix::maximally_mixed(2)), 0.5, kTight);
  EXPECT_NEAR(survival(QubitState::x(), DensityMatrix::pure(QubitState::y())), 0.5, kTight);
}

TEST(SurvivalTest, RejectsWrongDimension) {
  EXPECT_THROW(survival(QubitState::x(), DensityMatrix::maximally_mixed(4)), EngineError);
}

TEST(QubitStateTest, AnglesRoundTrip) {
  for (double th : {0.3, 1.2, 2.8}) {
    for (double ph : {0.1, 2.0, 5.5}) {
      const auto s = QubitState::from_angles(th, ph);
      EXPECT_NEAR(s.theta(), th, 1e-12);
      EXPECT_NEAR(s.phi(), ph, 1e-12);
    }
  }
}

TEST(DensityMatrixTest, RejectsBadTrace) {
  EXPECT_THROW(DensityMatrix(Matrix(Matrix::Identity(2, 2))), EngineError);
}

TEST(PartialTraceTest, ProductState) {
  const Matrix a = QubitState::x().projector();
  const Matrix b = QubitState::one().projector();
  const Matrix r = partial_trace_right(kron(a, b), 2, 2);
  EXPECT_LT((r - a).norm(), kTight);
}

TEST(GateFidelityTest, IdentityAndPhase) {
  const Unitary x = rotation(kPi, 0.0, 0.0, 1.0);
  EXPECT_NEAR(gate_fidelity(x, x), 1.0, kTight);
  EXPECT_NEAR(gate_fidelity(x, rotation(kPi, kPi / 2.0, 0.0, 1.0)), 0.0, kTight);
}

}  // namespace
}  // namespace ddsim
