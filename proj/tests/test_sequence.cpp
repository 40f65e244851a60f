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

#include <fstream>
#include <sstream>

#include "ddsim/sequence.hpp"

namespace ddsim {
namespace {

TEST(SequenceTest, CpmgStructure) {
  const auto s = make_cpmg(4, 1e-6);
  ASSERT_EQ(s.n_pulses(), 4);
  EXPECT_DOUBLE_EQ(s.events[0].delay_s, 0.5e-6);
  for (int k = 1; k < 4; ++k) EXPECT_DOUBLE_EQ(s.events[k].delay_s, 1e-6);
  EXPECT_DOUBLE_EQ(s.trailing_delay_s, 0.5e-6);
  for (double p : s.phases()) EXPECT_DOUBLE_EQ(p, kPi / 2.0);
  EXPECT_NEAR(s.total_time_s(), 4e-6, 1e-18);
}

TEST(SequenceTest, HahnIsSingleCpmgPulse) {
  const auto s = make_hahn(2e-6);
  EXPECT_EQ(s.name, "hahn");
  ASSERT_EQ(s.n_pulses(), 1);
  EXPECT_DOUBLE_EQ(s.events[0].delay_s, 1e-6);
  EXPECT_DOUBLE_EQ(s.trailing_delay_s, 1e-6);
}

TEST(SequenceTest, PulseCentersOnGrid) {
  const auto s = make_xy4(8, 0.8e-6);
  const auto c = s.pulse_centers();
  for (std::size_t k = 0; k < c.size(); ++k) {
    EXPECT_NEAR(c[k], (static_cast<double>(k) + 0.5) * 0.8e-6, 1e-18);
  }
}

TEST(SequenceTest, Xy4Phases) {
  const auto p = make_xy4(8, 1e-6).phases();
  const double expect[4] = {0.0, kPi / 2.0, 0.0, kPi / 2.0};
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_DOUBLE_EQ(p[k], expect[k % 4]);
}

TEST(SequenceTest, KddPhaseTable) {
  const auto p = make_kdd(20, 1e-6).phases();
  ASSERT_EQ(p.size(), 20u);
  const double knill[5] = {kPi / 6.0, 0.0, kPi / 2.0, 0.0, kPi / 6.0};
  for (int block = 0; block < 4; ++block) {
    const double phi = block % 2 == 0 ? 0.0 : kPi / 2.0;
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(p[5 * block + j], knill[j] + phi, 1e-15);
  }
}

TEST(SequenceTest, EqualTotalTimeAcrossFamilies) {
  const double tau = 0.8e-6;
  const double t = make_cpmg(20, tau).total_time_s();
  EXPECT_NEAR(make_xy4(20, tau).total_time_s(), t, 1e-18);
  EXPECT_NEAR(make_kdd(20, tau).total_time_s(), t, 1e-18);
}

TEST(SequenceTest, AdmissibleCounts) {
  EXPECT_TRUE(admissible(SequenceFamily::kHahn, 1));
  EXPECT_FALSE(admissible(SequenceFamily::kHahn, 2));
  EXPECT_TRUE(admissible(SequenceFamily::kCpmg, 3));
  EXPECT_FALSE(admissible(SequenceFamily::kXy4, 6));
  EXPECT_TRUE(admissible(SequenceFamily::kKdd, 20));
  EXPECT_FALSE(admissible(SequenceFamily::kKdd, 15));
  EXPECT_THROW(make_kdd(15, 1e-6), ConfigError);
  EXPECT_THROW(make_xy4(6, 1e-6), ConfigError);
  EXPECT_THROW(make_cpmg(2, -1e-6), ConfigError);
}

TEST(SequenceTest, ParseFamily) {
  EXPECT_EQ(parse_family("kdd"), SequenceFamily::kKdd);
  EXPECT_EQ(family_name(SequenceFamily::kXy4), "xy4");
  EXPECT_THROW(parse_family("xy8"), ConfigError);
}

TEST(ApplyErrorsTest, FlipAngleScalesAngles) {
  ErrorModel err;
  err.epsilon = 0.05;
  const auto c = apply_errors(make_cpmg(2, 1e-6), err);
  int pulses = 0;
  for (const auto& s : c.segments) {
    if (const auto* p = std::get_if<PulseSegment>(&s)) {
      EXPECT_NEAR(p->angle, 1.05 * kPi, 1e-15);
      ++pulses;
    }
  }
  EXPECT_EQ(pulses, 2);
}

TEST(ApplyErrorsTest, FinitePulsesConsumeDelays) {
  ErrorModel err;
  err.finite_duration = true;
  EXPECT_NEAR(err.pi_duration_s(), 40e-9, 1e-18);
  const auto c = apply_errors(make_cpmg(2, 1e-6), err);
  ASSERT_EQ(c.segments.size(), 5u);
  EXPECT_NEAR(std::get<FreeSegment>(c.segments[0]).duration_s, 0.5e-6 - 20e-9, 1e-15);
  EXPECT_NEAR(std::get<PulseSegment>(c.segments[1]).duration_s(), 40e-9, 1e-15);
  EXPECT_NEAR(std::get<FreeSegment>(c.segments[2]).duration_s, 1e-6 - 40e-9, 1e-15);
  EXPECT_NEAR(c.total_time_s(), 2e-6, 1e-15);
}

TEST(ApplyErrorsTest, FlipErrorKeepsScheduledDuration) {
  ErrorModel err;
  err.finite_duration = true;
  err.epsilon = 0.1;
  const auto c = apply_errors(make_cpmg(2, 1e-6), err);
  EXPECT_NEAR(std::get<PulseSegment>(c.segments[1]).duration_s(), 40e-9, 1e-15);
  EXPECT_NEAR(c.total_time_s(), 2e-6, 1e-15);
}

TEST(ApplyErrorsTest, InfeasibleScheduleRejected) {
  ErrorModel err;
  err.finite_duration = true;
  try {
    apply_errors(make_cpmg(4, 30e-9), err);
    FAIL() << "expected EngineError";
  } catch (const EngineError& e) {
    EXPECT_NE(std::string(e.what()).find("infeasible"), std::string::npos);
  }
}

TEST(ApplyErrorsTest, OffsetAttachedEverywhere) {
  ErrorModel err;
  err.offset_hz = 1e6;
  const auto c = apply_errors(make_xy4(4, 1e-6), err);
  for (const auto& s : c.segments) {
    const double off = std::holds_alternative<FreeSegment>(s)
                           ? std::get<FreeSegment>(s).offset_rad_s
                           : std::get<PulseSegment>(s).offset_rad_s;
    EXPECT_NEAR(off, kTwoPi * 1e6, 1e-6);
  }
}

TEST(ApplyErrorsTest, InvalidModelRejected) {
  ErrorModel err;
  err.rabi_hz = 0.0;
  EXPECT_THROW(apply_errors(make_cpmg(2, 1e-6), err), ConfigError);
}

TEST(DumpTest, CpmgTwoGolden) {
  std::ostringstream out;
  dump_sequence(out, make_cpmg(2, 0.8e-6));
  std::ifstream golden(DDSIM_TEST_DATA_DIR "/dump_cpmg2.txt");
  ASSERT_TRUE(golden.good());
  std::stringstream expect;
  expect << golden.rdbuf();
  EXPECT_EQ(out.str(), expect.str());
}

}  // namespace
}  // namespace ddsim
