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

#include "ddsim/fit.hpp"

namespace ddsim {
namespace {

std::vector<FitSample> synth(double t2, double n, double a, double b, int count, double t_max,
                             double sigma = 0.0, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
  std::vector<FitSample> out;
  for (int i = 0; i < count; ++i) {
    const double t = t_max * (i + 1) / count;
    out.push_back({t, stretched_exp(t, t2, n, a, b) + (sigma > 0.0 ? noise(rng) : 0.0)});
  }
  return out;
}

TEST(FitTest, NoiselessRecovery) {
  for (double n : {0.8, 1.0, 2.0, 3.0}) {
    const auto data = synth(1e-3, n, 0.5, 0.5, 60, 3e-3);
    const FitResult r = fit_stretched_exp(data);
    EXPECT_TRUE(r.converged) << "n = " << n;
    EXPECT_NEAR(r.t2_s / 1e-3, 1.0, 1e-6) << "n = " << n;
    EXPECT_NEAR(r.exponent_n, n, 1e-6 * n);
    EXPECT_NEAR(r.amplitude, 0.5, 1e-6);
    EXPECT_EQ(r.baseline, 0.5);
  }
}

TEST(FitTest, FreeBaseline) {
  const auto data = synth(2e-4, 1.5, 0.4, 0.55, 80, 1e-3);
  FitOptions o;
  o.fixed_baseline.reset();
  const FitResult r = fit_stretched_exp(data, o);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.baseline, 0.55, 1e-6);
  EXPECT_NEAR(r.exponent_n, 1.5, 1e-5);
}

TEST(FitTest, ExponentClamped) {
  const auto data = synth(1e-3, 12.0, 0.5, 0.5, 100, 2e-3);
  const FitResult r = fit_stretched_exp(data);
  EXPECT_LE(r.exponent_n, kMaxExponent);
}

TEST(FitTest, NoisyCalibration) {
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto data = synth(1e-3, 2.0, 0.5, 0.5, 60, 3e-3, 0.01, seed);
    const FitResult r = fit_stretched_exp(data);
    if (std::abs(r.t2_s / 1e-3 - 1.0) < 0.05 && std::abs(r.exponent_n / 2.0 - 1.0) < 0.10) ++ok;
  }
  EXPECT_GE(ok, 19);
}

TEST(FitTest, SigmaMatchesScatter) {
  std::vector<double> t2;
  double sigma_sum = 0.0;
  const int runs = 60;
  for (int seed = 1; seed <= runs; ++seed) {
    const auto r = fit_stretched_exp(synth(1e-3, 1.5, 0.5, 0.5, 50, 3e-3, 0.01, seed));
    t2.push_back(r.t2_s);
    sigma_sum += r.t2_sigma_s;
  }
  double mean = 0.0;
  for (double v : t2) mean += v / runs;
  double var = 0.0;
  for (double v : t2) var += (v - mean) * (v - mean) / (runs - 1);
  const double ratio = (sigma_sum / runs) / std::sqrt(var);
  EXPECT_GT(ratio, 0.7);
  EXPECT_LT(ratio, 1.4);
}

TEST(FitTest, TooFewPoints) {
  std::vector<FitSample> d = {{1, 1}, {2, 0.8}, {3, 0.6}};
  EXPECT_THROW(fit_stretched_exp(d), FitError);
}

TEST(FitTest, DegenerateData) {
  std::vector<FitSample> d = {{1, 0.7}, {2, 0.7}, {3, 0.7}, {4, 0.7}};
  EXPECT_THROW(fit_stretched_exp(d), FitError);
}

TEST(FitTest, NonFiniteData) {
  std::vector<FitSample> d = {{1, 1}, {2, NAN}, {3, 0.6}, {4, 0.5}};
  EXPECT_THROW(fit_stretched_exp(d), FitError);
}

}  // namespace
}  // namespace ddsim
