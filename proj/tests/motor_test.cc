// Copyright 2026 The cmaze Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cmaze/motor.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace cmaze {
namespace {

constexpr double kDt = 1.0 / 30.0;

PlatformPlant ServoPlant(const ServoParams& servo) {
  return [servo](PlatformAngles a, const Action& u, double dt) {
    return ServoStep(a, u, dt, servo);
  };
}

ExcitationPlan TwoTone() {
  ExcitationPlan plan;
  plan.x_axis = {{0.6, 0.3, 0.0}, {0.5, 1.1, 0.4}};
  plan.y_axis = {{0.6, 0.4, 1.0}, {0.5, 0.9, 2.0}};
  plan.duration = 20.0;
  return plan;
}

TEST(ServoStepTest, FixedPoint) {
  const ServoParams servo;
  const PlatformAngles a{0.06, -0.03};
  const PlatformAngles b = ServoStep(
      a, {a.beta / servo.max_tilt, a.gamma / servo.max_tilt}, kDt, servo);
  EXPECT_NEAR(b.beta, a.beta, 1e-17);
  EXPECT_NEAR(b.gamma, a.gamma, 1e-17);
}

TEST(ServoStepTest, StepResponseFollowsTheClosedForm) {
  const ServoParams servo;
  const double c = 0.4;
  PlatformAngles a;
  for (int k = 1; k <= 20; ++k) {
    a = ServoStep(a, {c, -c}, kDt, servo);
    const double expected =
        c * servo.max_tilt * (1.0 - std::exp(-k * kDt / servo.tau));
    EXPECT_NEAR(a.beta, expected, 1e-14);
    EXPECT_NEAR(a.gamma, -expected, 1e-14);
  }
}

TEST(ServoStepTest, VanishingLagJumpsToTarget) {
  ServoParams servo;
  servo.tau = 1e-9;
  const PlatformAngles a = ServoStep({}, {0.5, -0.5}, kDt, servo);
  EXPECT_NEAR(a.beta, 0.5 * servo.max_tilt, 1e-15);
  EXPECT_NEAR(a.gamma, -0.5 * servo.max_tilt, 1e-15);
}

TEST(ServoStepTest, BoundedAndSlewLimited) {
  ServoParams servo;
  servo.tau = 1e-3;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> uni(-2, 2);
  PlatformAngles a;
  for (int k = 0; k < 1000; ++k) {
    const PlatformAngles b = ServoStep(a, {uni(rng), uni(rng)}, kDt, servo);
    EXPECT_LE(std::abs(b.beta), servo.max_tilt);
    EXPECT_LE(std::abs(b.gamma), servo.max_tilt);
    EXPECT_LE(std::abs(b.beta - a.beta), servo.rate_limit * kDt + 1e-15);
    EXPECT_LE(std::abs(b.gamma - a.gamma), servo.rate_limit * kDt + 1e-15);
    a = b;
  }
}

TEST(ExciteAndCollectTest, ZeroAmplitudeStaysLevel) {
  ExcitationPlan plan;
  plan.x_axis = {{0.0, 0.5, 0.0}};
  plan.y_axis = {{0.0, 0.5, 0.0}};
  const auto data = ExciteAndCollect(ServoPlant(ServoParams{}), plan);
  for (const auto& s : data.samples) {
    EXPECT_EQ(s.command.ux, 0.0);
    EXPECT_EQ(s.next.beta, 0.0);
    EXPECT_EQ(s.next.gamma, 0.0);
  }
}

TEST(ExciteAndCollectTest, SampleCount) {
  ExcitationPlan plan;
  plan.x_axis = {{0.5, 0.5, 0.0}};
  plan.duration = 10.0;
  EXPECT_EQ(ExciteAndCollect(ServoPlant(ServoParams{}), plan).samples.size(),
            300u);
}

TEST(ExciteAndCollectTest, TwoTonesCoverTheTiltRange) {
  const ServoParams servo;
  const auto data = ExciteAndCollect(ServoPlant(servo), TwoTone());
  double lo = 0, hi = 0;
  for (const auto& s : data.samples) {
    lo = std::min(lo, s.next.beta);
    hi = std::max(hi, s.next.beta);
  }
  EXPECT_GE((hi - lo) / (2 * servo.max_tilt), 0.9);
}

TEST(ExciteAndCollectTest, AboveNyquistThrows) {
  ExcitationPlan plan;
  plan.x_axis = {{0.5, 15.0, 0.0}};
  EXPECT_THROW(ExciteAndCollect(ServoPlant(ServoParams{}), plan),
               std::invalid_argument);
}

TEST(FitArxTest, RecoversAnExactArxPlant) {
  const PlatformPlant arx = [](PlatformAngles a, const Action& u, double) {
    return PlatformAngles{0.8 * a.beta + 0.1 * u.ux, 0.7 * a.gamma - 0.05 * u.uy};
  };
  const ArxModel m = FitArx(ExciteAndCollect(arx, TwoTone()));
  EXPECT_NEAR(m.beta.a, 0.8, 1e-10);
  EXPECT_NEAR(m.beta.b, 0.1, 1e-10);
  EXPECT_NEAR(m.gamma.a, 0.7, 1e-10);
  EXPECT_NEAR(m.gamma.b, -0.05, 1e-10);
}

TEST(FitArxTest, ServoExcitationFitsWell) {
  const auto data = ExciteAndCollect(ServoPlant(ServoParams{}), TwoTone());
  const ArxModel m = FitArx(data);
  double mean = 0, sq = 0;
  for (const auto& s : data.samples) mean += s.next.beta;
  mean /= data.samples.size();
  for (const auto& s : data.samples) sq += std::pow(s.next.beta - mean, 2);
  const double std_dev = std::sqrt(sq / data.samples.size());
  EXPECT_LT(ArxResidualRms(m, data), 0.05 * std_dev);
}

TEST(FitArxTest, ZeroCommandsAreUnidentifiable) {
  const ServoParams servo;
  ExcitationDataset data;
  PlatformAngles a{0.1, -0.1};
  for (int k = 0; k < 50; ++k) {
    const PlatformAngles next = ServoStep(a, {}, kDt, servo);
    data.samples.push_back({k * kDt, a, {}, next});
    a = next;
  }
  EXPECT_THROW(FitArx(data), FitError);
}

TEST(FitArxTest, TooFewSamplesThrow) {
  auto data = ExciteAndCollect(ServoPlant(ServoParams{}), TwoTone());
  data.samples.resize(5);
  EXPECT_THROW(FitArx(data), FitError);
}

TEST(FitArxTest, ScaledCommandsScaleTheGain) {
  const auto data = ExciteAndCollect(ServoPlant(ServoParams{}), TwoTone());
  ExcitationDataset scaled = data;
  const double c = 2.5;
  for (auto& s : scaled.samples) {
    s.command.ux *= c;
    s.command.uy *= c;
  }
  const ArxModel m = FitArx(data);
  const ArxModel ms = FitArx(scaled);
  EXPECT_NEAR(ms.beta.a, m.beta.a, 1e-8);
  EXPECT_NEAR(ms.beta.b, m.beta.b / c, 1e-8);
  EXPECT_NEAR(ms.gamma.b, m.gamma.b / c, 1e-8);
}

TEST(ImmInvertTest, NaturalDecayNeedsNoCommand) {
  const ArxModel m{{0.5, 0.07}, {0.4, 0.08}};
  const PlatformAngles cur{0.1, -0.05};
  const Action u = ImmInvert(m, cur, {0.5 * 0.1, 0.4 * -0.05});
  EXPECT_NEAR(u.ux, 0.0, 1e-15);
  EXPECT_NEAR(u.uy, 0.0, 1e-15);
}

TEST(ImmInvertTest, RoundTripIsIdentity) {
  const ArxModel m{{0.51, 0.073}, {0.49, 0.075}};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> uni(-0.3, 0.3);
  for (int i = 0; i < 1000; ++i) {
    const PlatformAngles cur{uni(rng), uni(rng)};
    const PlatformAngles want{uni(rng), uni(rng)};
    const PlatformAngles got = m.Predict(cur, ImmInvertUnclamped(m, cur, want));
    EXPECT_NEAR(got.beta, want.beta, 1e-10);
    EXPECT_NEAR(got.gamma, want.gamma, 1e-10);
  }
}

TEST(ImmInvertTest, UnreachableRequestClampsAndApproachesMonotonically) {
  const ArxModel m{{0.5, 0.07}, {0.5, 0.07}};
  const PlatformAngles want{0.5, -0.5};
  PlatformAngles cur;
  double gap = std::abs(want.beta - cur.beta);
  for (int k = 0; k < 20; ++k) {
    const Action u = ImmInvert(m, cur, want);
    EXPECT_EQ(u.ux, 1.0);
    EXPECT_EQ(u.uy, -1.0);
    cur = m.Predict(cur, u);
    const double next_gap = std::abs(want.beta - cur.beta);
    EXPECT_LE(next_gap, gap);
    EXPECT_LT(cur.beta, want.beta);
    gap = next_gap;
  }
}

TEST(ImmInvertTest, ZeroGainThrows) {
  const ArxModel m{{0.5, 0.0}, {0.5, 0.1}};
  EXPECT_THROW(ImmInvert(m, {}, {0.1, 0.1}), FitError);
}

TEST(ArxModelTest, JsonRoundTrip) {
  const ArxModel m{{0.51, 0.073}, {0.49, -0.075}};
  const ArxModel back = nlohmann::json(m).get<ArxModel>();
  EXPECT_EQ(back.beta.a, m.beta.a);
  EXPECT_EQ(back.gamma.b, m.gamma.b);
}

}  // namespace
}  // namespace cmaze
