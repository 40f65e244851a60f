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

#include "ddsim/experiments.hpp"

namespace ddsim {
namespace {

ExperimentContext no_bath(double epsilon = 0.0) {
  ExperimentContext ctx;
  ctx.errors.epsilon = epsilon;
  ctx.envelope = EnvelopeParams::none();
  return ctx;
}

DecayCurve curve_from(const std::vector<std::pair<double, double>>& pts) {
  DecayCurve c;
  for (const auto& [t, p] : pts) c.points.push_back({t, p, 1, false, {}});
  return c;
}

TEST(DecayCurveTest, CpmgClosedForm) {
  const auto curve = decay_curve(SequenceFamily::kCpmg, 10, {1e-6, 2e-6, 3e-6}, no_bath(0.05),
                                 QubitState::x());
  ASSERT_EQ(curve.points.size(), 3u);
  const double expect = std::pow(std::cos(10 * kPi * 0.05 / 2.0), 2);
  for (const auto& p : curve.points) EXPECT_NEAR(p.survival, expect, 1e-9);
  EXPECT_TRUE(curve.strictly_increasing());
  EXPECT_NEAR(curve.points[1].time_s, 20e-6, 1e-18);
}

TEST(DecayCurveTest, InfeasiblePointsAreFlagged) {
  ExperimentContext ctx = no_bath();
  ctx.errors.finite_duration = true;
  const auto curve = decay_curve(SequenceFamily::kCpmg, 4, {30e-9, 1e-6}, ctx, QubitState::y());
  EXPECT_TRUE(curve.points[0].flagged);
  EXPECT_TRUE(std::isnan(curve.points[0].survival));
  EXPECT_FALSE(curve.points[1].flagged);
  EXPECT_EQ(curve.samples().size(), 1u);
}

TEST(DecayCurveTest, RejectsBadInputs) {
  EXPECT_THROW(decay_curve(SequenceFamily::kKdd, 12, {1e-6}, no_bath(), QubitState::x()),
               ConfigError);
  EXPECT_THROW(decay_curve(SequenceFamily::kCpmg, 2, {2e-6, 1e-6}, no_bath(), QubitState::x()),
               ConfigError);
}

TEST(PulseCountSweepTest, DropsInadmissibleCounts) {
  const auto c = pulse_count_sweep(SequenceFamily::kXy4, {2, 4, 6, 8}, 1e-6, no_bath(),
                                   QubitState::x());
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_EQ(c.points[0].n_pulses, 4);
  EXPECT_EQ(c.points[1].n_pulses, 8);
}

TEST(BlochScanTest, GridAndFlatMap) {
  const auto map = bloch_scan(SequenceFamily::kKdd, 20, 0.8e-6, no_bath(), 19, 37);
  ASSERT_EQ(map.values.rows(), 19);
  ASSERT_EQ(map.values.cols(), 37);
  EXPECT_NEAR(map.theta_grid[9], kPi / 2.0, 1e-15);
  EXPECT_NEAR(map.phi_grid[36], kTwoPi, 1e-15);
  EXPECT_TRUE(map.flat(1e-9));
}

TEST(BlochScanTest, CpmgPeaksOnRotationAxis) {
  const auto map = bloch_scan(SequenceFamily::kCpmg, 20, 0.8e-6, no_bath(0.05), 19, 37);
  const auto best = map.argmax(1e-9);
  bool has_y = false;
  for (const auto& [i, j] : best) has_y = has_y || (i == 9 && j == 9);
  EXPECT_TRUE(has_y);
}

TEST(ErrorSweepTest, SymmetricRange) {
  const auto v = symmetric_range(0.1, 5);
  ASSERT_EQ(v.size(), 5u);
  EXPECT_DOUBLE_EQ(v.front(), -0.1);
  EXPECT_DOUBLE_EQ(v[2], 0.0);
  EXPECT_THROW(symmetric_range(0.1, 1), ConfigError);
}

TEST(ErrorSweepTest, RejectsAsymmetricRange) {
  EXPECT_THROW(error_sweep(SequenceFamily::kCpmg, 2, 1e-6, ErrorSweepKind::kFlipAngle,
                           {0.0, 0.1}, no_bath(), QubitState::x()),
               ConfigError);
}

TEST(ErrorSweepTest, CpmgProtectedAxisFlat) {
  const auto c = error_sweep(SequenceFamily::kCpmg, 20, 0.8e-6, ErrorSweepKind::kFlipAngle,
                             symmetric_range(0.1, 21), no_bath(), QubitState::y());
  for (const auto& p : c.points) EXPECT_NEAR(p.survival, 1.0, 1e-9);
  EXPECT_EQ(c.quantity, "epsilon");
}

TEST(ErrorSweepTest, ThreadCountDoesNotChangeResults) {
  ExperimentContext a = no_bath();
  a.bath.b_field_t = 6.8e-3;
  a.bath.nuclei = {{20e3, 10e3, "C1"}, {-5e3, 7e3, "C2"}};
  a.errors.finite_duration = true;
  ExperimentContext b = a;
  b.threads = 3;
  const auto values = symmetric_range(3e6, 7);
  const auto ca = error_sweep(SequenceFamily::kXy4, 8, 1e-6, ErrorSweepKind::kOffset, values, a,
                              QubitState::x());
  const auto cb = error_sweep(SequenceFamily::kXy4, 8, 1e-6, ErrorSweepKind::kOffset, values, b,
                              QubitState::x());
  for (std::size_t i = 0; i < values.size(); ++i) {
    EXPECT_EQ(ca.points[i].survival, cb.points[i].survival);
  }
}

TEST(RevivalTest, PicksInteriorMaximaPerWindow) {
  // spacing 2 N tau_L = 10 with N = 1, tau_L = 5.
  const auto c = curve_from({{0, 1.0}, {2, 0.6}, {4, 0.5}, {9, 0.7}, {10, 0.9}, {11, 0.8},
                             {15, 0.2}, {19, 0.5}, {20.5, 0.8}, {21, 0.6}});
  const auto r = revival_maxima(c, 1, 5.0);
  ASSERT_EQ(r.envelope.points.size(), 3u);
  EXPECT_DOUBLE_EQ(r.envelope.points[0].time_s, 0.0);
  EXPECT_DOUBLE_EQ(r.envelope.points[1].time_s, 10.0);
  EXPECT_DOUBLE_EQ(r.envelope.points[2].time_s, 20.5);
}

TEST(RevivalTest, MonotoneWindowFallsBackToCenter) {
  const auto c = curve_from({{8, 0.9}, {9.5, 0.8}, {11, 0.7}, {12, 0.6}});
  const auto r = revival_maxima(c, 1, 5.0);
  ASSERT_EQ(r.envelope.points.size(), 1u);
  EXPECT_DOUBLE_EQ(r.envelope.points[0].time_s, 9.5);
  EXPECT_EQ(r.skipped_windows, std::vector<int>{0});
}

TEST(RevivalTest, CosineModulationFoundWithinOneStep) {
  // Period 2 N tau_L = 12 with N = 3, tau_L = 2.
  const double period = 12.0;
  const double step = 0.173;
  DecayCurve c;
  for (double t = 0.0; t < 5.3 * period; t += step) {
    c.points.push_back({t, 0.5 + 0.4 * std::exp(-t / 40.0) * std::cos(kTwoPi * t / period), 3,
                        false, {}});
  }
  const auto r = revival_maxima(c, 3, 2.0);
  ASSERT_GE(r.envelope.points.size(), 5u);
  for (std::size_t k = 0; k < r.envelope.points.size(); ++k) {
    EXPECT_NEAR(r.envelope.points[k].time_s, k * period, step) << "window " << k;
  }
}

ExperimentContext weak_bath_context() {
  LatticeSamplerConfig cfg;
  cfg.radius_nm = 2.5;
  cfg.max_coupling_cutoff_hz = 30e3;
  cfg.nuclei_cap = 6;
  cfg.seed = 7;
  ExperimentContext ctx;
  ctx.bath = sample_bath(cfg, 6.8e-3).bath;
  return ctx;
}

DecayCurve fine_scan(SequenceFamily f, int n, const ExperimentContext& ctx, double t_end) {
  const double step = 2.0 * n * ctx.bath.larmor_period_s() / 211.7;
  std::vector<double> taus;
  for (double t = step; t <= t_end; t += step) taus.push_back(t / n);
  return decay_curve(f, n, taus, ctx, QubitState::y());
}

double mean_spacing(const DecayCurve& env) {
  const auto& p = env.points;
  return (p.back().time_s - p[1].time_s) / static_cast<double>(p.size() - 2);
}

TEST(RevivalTest, HahnVersusCpmg8SpacingRatio) {
  const ExperimentContext ctx = weak_bath_context();
  const double tl = ctx.bath.larmor_period_s();
  const auto hahn = revival_maxima(fine_scan(SequenceFamily::kHahn, 1, ctx, 40 * 2 * tl), 1, tl);
  const auto cpmg = revival_maxima(fine_scan(SequenceFamily::kCpmg, 8, ctx, 5 * 16 * tl), 8, tl);
  ASSERT_GE(hahn.envelope.points.size(), 4u);
  ASSERT_GE(cpmg.envelope.points.size(), 4u);
  EXPECT_NEAR(mean_spacing(cpmg.envelope) / mean_spacing(hahn.envelope), 8.0, 0.08);
}

TEST(RevivalTest, HahnEnvelopeExponent) {
  // Envelope of the simulated Hahn echo: fitted exponent expected in [2, 4].
  ExperimentContext ctx = weak_bath_context();
  ctx.envelope.t_markov_s = 2.2e-3;
  const double tl = ctx.bath.larmor_period_s();
  const auto env = revival_maxima(fine_scan(SequenceFamily::kHahn, 1, ctx, 8e-3), 1, tl).envelope;
  const FitResult r = fit_stretched_exp(env.samples());
  EXPECT_GE(r.exponent_n, 2.0);
  EXPECT_LE(r.exponent_n, 4.0);
}

TEST(RevivalTest, RejectsBadParameters) {
  EXPECT_THROW(revival_maxima(DecayCurve{}, 0, 1.0), ConfigError);
  EXPECT_THROW(revival_maxima(DecayCurve{}, 1, 0.0), ConfigError);
}

TEST(NormalizeCountsTest, MapsReferencesToUnitInterval) {
  const auto c = normalize_counts({{1e-6, 100.0}, {2e-6, 70.0}, {3e-6, 40.0}}, 100.0, 40.0);
  EXPECT_DOUBLE_EQ(c.points[0].survival, 1.0);
  EXPECT_DOUBLE_EQ(c.points[1].survival, 0.5);
  EXPECT_DOUBLE_EQ(c.points[2].survival, 0.0);
}

TEST(NormalizeCountsTest, AffineInvariance) {
  const std::vector<CountSample> raw = {{1e-6, 93.0}, {2e-6, 81.5}, {3e-6, 60.2}};
  std::vector<CountSample> scaled;
  for (const auto& s : raw) scaled.push_back({s.time_s, 3.0 * s.counts + 17.0});
  const auto a = normalize_counts(raw, 100.0, 50.0);
  const auto b = normalize_counts(scaled, 317.0, 167.0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    EXPECT_NEAR(a.points[i].survival, b.points[i].survival, 1e-12);
  }
}

TEST(NormalizeCountsTest, FlagsOutOfRange) {
  const auto c = normalize_counts({{1e-6, 110.0}, {2e-6, 50.0}}, 100.0, 40.0);
  EXPECT_TRUE(c.points[0].flagged);
  EXPECT_FALSE(c.points[1].flagged);
  EXPECT_THROW(normalize_counts({}, 40.0, 100.0), ConfigError);
}

TEST(RamseyTest, TripletPeaks) {
  std::vector<double> t;
  for (int i = 0; i < 1000; ++i) t.push_back(i * 10e-9);
  const auto fringe = ramsey(5e6, kDefaultHyperfine14NHz, 5e-6, t);
  EXPECT_NEAR(fringe.points[0].survival, 1.0, 1e-15);
  const auto peaks = spectral_peaks(ramsey_spectrum(fringe), 0.2);
  ASSERT_EQ(peaks.size(), 3u);
  const double expect[3] = {2.84e6, 5e6, 7.16e6};
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(peaks[i].freq_hz, expect[i], 0.11e6);
}

TEST(RamseyTest, NonUniformSpacingRejected) {
  const auto fringe = ramsey(5e6, 2.16e6, 1e-6, {0.0, 1e-8, 2e-8, 4e-8, 5e-8});
  EXPECT_THROW(ramsey_spectrum(fringe), ConfigError);
}

}  // namespace
}  // namespace ddsim
