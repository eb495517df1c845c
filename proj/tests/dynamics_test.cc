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

#include "cmaze/dynamics.h"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

namespace cmaze {
namespace {

// Explicit Euler at a fine step on the reduced ODE with a level-holding
// platform; kinetic friction opposes the motion, or the drive at rest.
double FineTheta(double gamma, double theta0, const FrictionParams& mu,
                 const MazeGeometry& geom, double duration) {
  const double r = geom.Radius(RingIndex{0});
  const double m = geom.marble_mass;
  const double h = 1e-5;
  double theta = theta0;
  double rate = 0.0;
  const int steps = static_cast<int>(std::lround(duration / h));
  for (int i = 0; i < steps; ++i) {
    const double drive = kGravity / r * std::sin(gamma) * std::cos(theta);
    const double coulomb = kGravity * mu.slide / r;
    double acc;
    if (rate == 0.0) {
      acc = std::abs(drive) <= coulomb
                ? 0.0
                : drive - coulomb * (drive > 0 ? 1.0 : -1.0);
    } else {
      acc = drive - coulomb * (rate > 0 ? 1.0 : -1.0) -
            mu.roll / (m * r * r) * rate;
    }
    theta += h * rate;
    rate += h * acc;
  }
  return theta;
}

PlantSpec Plant() { return PlantSpec{}; }

// command that holds the platform at gamma
Action Holding(double gamma, const PlantSpec& plant) {
  return {0.0, gamma / plant.servo.max_tilt};
}

TEST(TangentialAccelTest, LevelPlatformIsZero) {
  for (double theta : {-2.0, 0.0, 1.3}) {
    EXPECT_EQ(TangentialAccel(0, 0, theta, 0.1), 0.0);
  }
}

TEST(TangentialAccelTest, KnownValue) {
  EXPECT_NEAR(TangentialAccel(0, 0.1, 0, 0.1), 9.81 * std::sin(0.1) / 0.1,
              1e-12);
  EXPECT_NEAR(TangentialAccel(0, 0.1, 0, 0.1), 9.7937, 1e-4);
}

TEST(TangentialAccelTest, MatchesPotentialGradient) {
  // potential per unit mass of a marble at (r, theta) on the tilted plane
  const double r = 0.08;
  const auto potential = [r](double beta, double gamma, double theta) {
    return -kGravity * r *
           (std::sin(gamma) * std::sin(theta) + std::sin(beta) * std::cos(theta));
  };
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-1, 1);
  for (int i = 0; i < 50; ++i) {
    const double beta = 0.15 * uni(rng), gamma = 0.15 * uni(rng);
    const double theta = kPi * uni(rng);
    const double e = 1e-6;
    const double grad = (potential(beta, gamma, theta + e) -
                         potential(beta, gamma, theta - e)) /
                        (2 * e);
    EXPECT_NEAR(TangentialAccel(beta, gamma, theta, r), -grad / (r * r), 1e-6);
  }
}

TEST(TangentialAccelTest, OddInTilt) {
  EXPECT_NEAR(TangentialAccel(0.05, -0.1, 0.7, 0.1),
              -TangentialAccel(-0.05, 0.1, 0.7, 0.1), 1e-14);
}

TEST(TangentialAccelTest, NonPositiveRadiusThrows) {
  EXPECT_THROW(TangentialAccel(0, 0, 0, 0.0), std::domain_error);
  EXPECT_THROW(TangentialAccel(0, 0, 0, -1.0), std::domain_error);
}

TEST(StepReducedTest, LevelAtRestIsUnchanged) {
  const ReducedState x{0, 0, 0.4, 0, RingIndex{1}};
  EXPECT_EQ(StepReduced(x, {}, FrictionParams::ReducedDefaults(), Plant()), x);
}

TEST(StepReducedTest, FrictionlessCoasting) {
  const ReducedState x{0, 0, 0.0, 1.0, RingIndex{0}};
  const ReducedState y = StepReduced(x, {}, FrictionParams{}, Plant());
  EXPECT_NEAR(y.theta, 1.0 / 30.0, 1e-15);
  EXPECT_EQ(y.theta_dot, 1.0);
}

TEST(StepReducedTest, MatchesFineIntegrator) {
  const PlantSpec plant = Plant();
  const double gamma = 0.05;
  for (const FrictionParams& mu :
       {FrictionParams::ReducedDefaults(), FrictionParams{0.01, 0, 1e-6, 0},
        FrictionParams{0, 0, 0, 0}}) {
    const ReducedState x{0, gamma, 0.0, 0.0, RingIndex{0}};
    const ReducedState y = StepReduced(x, Holding(gamma, plant), mu, plant);
    EXPECT_NEAR(y.theta, FineTheta(gamma, 0.0, mu, plant.geom, plant.dt), 1e-4)
        << "slide " << mu.slide;
  }
}

TEST(StepReducedTest, StictionHoldsExactly) {
  PlantSpec plant = Plant();
  const FrictionParams mu{0, 0, 0, 0.05};
  // drive g/r sin(gamma) stays below floss g / r
  const double gamma = 0.2 * plant.servo.max_tilt;
  ReducedState x{0, gamma, 0.3, 0.0, RingIndex{0}};
  const double theta0 = x.theta;
  for (int k = 0; k < 2000; ++k) {
    x = StepReduced(x, Holding(gamma, plant), mu, plant);
    ASSERT_EQ(x.theta, theta0);
    ASSERT_EQ(x.theta_dot, 0.0);
  }
}

TEST(StepReducedTest, PassiveEnergyNeverIncreases) {
  const PlantSpec plant = Plant();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uni(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const FrictionParams mu{0.01 * (1 + uni(rng)), 0, 1e-6 * (1 + uni(rng)),
                            1e-4};
    ReducedState x{0.1 * uni(rng), 0.1 * uni(rng), kPi * uni(rng),
                   3 * uni(rng), RingIndex{trial % kNumRings}};
    // let the servo bring the platform level first
    for (int k = 0; k < 60; ++k) x = StepReduced(x, {}, mu, plant);
    double energy = EnergyProxy(x, plant.geom);
    for (int k = 0; k < 1000; ++k) {
      x = StepReduced(x, {}, mu, plant);
      const double next = EnergyProxy(x, plant.geom);
      ASSERT_LE(next, energy + 1e-15) << "trial " << trial << " step " << k;
      energy = next;
    }
  }
}

TEST(StepReducedTest, HalvingTheStepConverges) {
  const PlantSpec coarse = Plant();
  PlantSpec fine = coarse;
  fine.sim.substeps *= 2;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const Action u{uni(rng), uni(rng)};
    ReducedState a{0, 0, kPi * uni(rng), 2 * uni(rng),
                   RingIndex{trial % kNumRings}};
    ReducedState b = a;
    const FrictionParams mu = FrictionParams::FullDefaults();
    for (int k = 0; k < 30; ++k) {
      a = StepReduced(a, u, mu, coarse);
      b = StepReduced(b, u, mu, fine);
    }
    EXPECT_LT(std::abs(WrapAngle(a.theta - b.theta)), 1e-3);
  }
}

TEST(StepReducedTest, NonFiniteStateThrows) {
  ReducedState x;
  x.theta_dot = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(StepReduced(x, {}, {}, Plant()), IntegrationError);
}

TEST(StepFullTest, CenteredAtRestIsUnchanged) {
  const PlantSpec plant = Plant();
  const FullState x = Embed(ReducedState{0, 0, 1.0, 0, RingIndex{0}}, plant.geom);
  EXPECT_EQ(StepFull(x, {}, FrictionParams::FullDefaults(), plant), x);
}

TEST(StepFullTest, SpinDecaysInFreeFlight) {
  const PlantSpec plant = Plant();
  FullState x = Embed(ReducedState{0, 0, 1.0, 0, RingIndex{0}}, plant.geom);
  x.spin = 1.0;
  const FullState y = StepFull(x, {}, FrictionParams::FullDefaults(), plant);
  EXPECT_NEAR(y.spin, std::exp(-1e-6 * plant.dt), 1e-14);
}

TEST(StepFullTest, StaysInsideTheChannel) {
  const PlantSpec plant = Plant();
  const MazeGeometry& g = plant.geom;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> uni(-1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    FullState x;
    x.ring = RingIndex{0};
    // away from the gates at 0 and pi
    x.theta = kPi / 2 * (trial % 2 ? 1 : -1) + 0.5 * uni(rng);
    x.theta_dot = 3 * uni(rng);
    x.rho = trial % 3 ? g.MaxRho(x.ring) : g.MinRho(x.ring);
    x.rho_dot = (x.rho == g.MaxRho(x.ring) ? -1 : 1) * std::abs(uni(rng));
    const FullState y = StepFull(x, {uni(rng), uni(rng)},
                                 FrictionParams::FullDefaults(), plant);
    EXPECT_GE(y.rho, g.MinRho(x.ring));
    EXPECT_LE(y.rho, g.MaxRho(x.ring));
  }
}

TEST(StepFullTest, DiffersFromTheReducedEngine) {
  const PlantSpec plant = Plant();
  const FrictionParams mu = FrictionParams::FullDefaults();
  FullState full = Embed(ReducedState{0, 0, 0.5, 2.0, RingIndex{1}}, plant.geom);
  double gap = 0.0;
  for (int k = 0; k < 30; ++k) {
    const Action u{0.3, -0.2};
    const ReducedState predicted = StepReduced(Observe(full), u, mu, plant);
    full = StepFull(full, u, mu, plant);
    gap = std::max(gap, std::abs(WrapAngle(predicted.theta - full.theta)));
  }
  EXPECT_GT(gap, 1e-6);
}

TEST(StepFullTest, SeededRolloutsAreBitIdentical) {
  const PlantSpec plant = Plant();
  const auto run = [&] {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1, 1);
    FullState x = Embed(ReducedState{0, 0, 0.2, 0, RingIndex{0}}, plant.geom);
    for (int k = 0; k < 300; ++k) {
      x = StepFull(x, {uni(rng), uni(rng)}, FrictionParams::FullDefaults(),
                   plant);
    }
    return x;
  };
  EXPECT_EQ(run(), run());
}

TEST(ObserveTest, ProjectsAwayHiddenState) {
  FullState a;
  a.theta = 0.3;
  a.theta_dot = -1;
  a.ring = RingIndex{2};
  a.rho = 0.06;
  FullState b = a;
  b.spin = 5;
  b.rho = 0.063;
  b.rho_dot = 0.2;
  EXPECT_EQ(Observe(a), Observe(b));
}

TEST(ObserveTest, RetractsEmbed) {
  const ReducedState x{0.01, -0.02, 2.0, 0.5, RingIndex{3}};
  const FullState f = Embed(x, MazeGeometry{});
  EXPECT_EQ(Observe(f), x);
  EXPECT_EQ(f.rho, 0.04);
  EXPECT_EQ(f.rho_dot, 0.0);
  EXPECT_EQ(f.spin, 0.0);
}

TEST(InjectNoiseTest, ZeroSigmaIsIdentity) {
  const ReducedState x{0, 0, 1.0, 2.0, RingIndex{0}};
  EXPECT_EQ(InjectNoise(x, NoiseSigma{0, 0}, 11), x);
}

TEST(InjectNoiseTest, SeedDetermines) {
  const ReducedState x{0, 0, 1.0, 2.0, RingIndex{0}};
  EXPECT_EQ(InjectNoise(x, NoiseSigma{}, 11), InjectNoise(x, NoiseSigma{}, 11));
  EXPECT_NE(InjectNoise(x, NoiseSigma{}, 11), InjectNoise(x, NoiseSigma{}, 12));
}

TEST(InjectNoiseTest, SampleMeanIsNearZero) {
  const NoiseSigma sigma{0.1, 0.2};
  const ReducedState x{0, 0, 0.0, 0.0, RingIndex{0}};
  std::mt19937_64 rng(13);
  const int n = 100000;
  double sum_theta = 0, sum_rate = 0;
  for (int i = 0; i < n; ++i) {
    const ReducedState y = InjectNoise(x, sigma, rng);
    sum_theta += y.theta;
    sum_rate += y.theta_dot;
  }
  EXPECT_LT(std::abs(sum_theta / n), 3 * sigma.theta / std::sqrt(n));
  EXPECT_LT(std::abs(sum_rate / n), 3 * sigma.theta_dot / std::sqrt(n));
}

TEST(InjectNoiseTest, NegativeSigmaThrows) {
  EXPECT_THROW(InjectNoise(ReducedState{}, NoiseSigma{-1, 0}, 1),
               std::invalid_argument);
}

}  // namespace
}  // namespace cmaze
