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


#include "cmaze/calibration.h"

#include <algorithm>
#include <cmath>
#include <random>

namespace cmaze {

namespace {

// Smoothed random command: Ornstein-Uhlenbeck per axis.
class RandomPolicy {
 public:
  RandomPolicy(const ExplorationConfig& c, double dt, uint64_t seed)
      : rng_(seed),
        decay_(std::exp(-dt / c.time_constant)),
        scale_(c.sigma * std::sqrt(1.0 - decay_ * decay_)) {
    std::normal_distribution<double> n(0.0, c.sigma);
    x_ = n(rng_);
    y_ = n(rng_);
  }

  Action Next() {
    std::normal_distribution<double> n(0.0, 1.0);
    x_ = decay_ * x_ + scale_ * n(rng_);
    y_ = decay_ * y_ + scale_ * n(rng_);
    return Action{x_, y_}.Clamped();
  }

 private:
  std::mt19937_64 rng_;
  double decay_;
  double scale_;
  double x_ = 0.0;
  double y_ = 0.0;
};

TransitionBuffer Sample(const TransitionBuffer& pool, int count,
                        std::mt19937_64& rng) {
  TransitionBuffer out;
  if (pool.empty()) return out;
  std::vector<size_t> idx(pool.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(idx.size(), static_cast<size_t>(count)));
  std::sort(idx.begin(), idx.end());
  for (size_t i : idx) out.items.push_back(pool.items[i]);
  return out;
}

}  // namespace

TransitionBuffer CollectRandomPolicy(const PlantSpec& plant,
                                     const FrictionParams& real_mu,
                                     const NoiseSigma& noise, RingIndex ring,
                                     int rollouts, int ticks,
                                     const CalibrationConfig& config,
                                     uint64_t seed) {
  TransitionBuffer out;
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> rate(-config.max_initial_rate,
                                              config.max_initial_rate);
  for (int r = 0; r < rollouts; ++r) {
    std::mt19937_64 rng(DeriveSeed(seed, ring.value, r));
    FullState s;
    s.ring = ring;
    s.rho = plant.geom.Radius(ring);
    s.theta = WrapAngle(angle(rng));
    s.theta_dot = rate(rng);
    RandomPolicy policy(config.policy, plant.dt, DeriveSeed(seed, 50 + ring.value, r));
    ReducedState obs = InjectNoise(Observe(s), noise, rng);
    for (int k = 0; k < ticks; ++k) {
      const Action u = policy.Next();
      const FullState next = StepFull(s, u, real_mu, plant);
      const ReducedState next_obs = InjectNoise(Observe(next), noise, rng);
      if (next.ring != ring) break;
      out.items.push_back({obs, u, next_obs, r, k});
      s = next;
      obs = next_obs;
    }
  }
  return out;
}

TrajectoryComparison CompareTrajectories(const PlantSpec& plant,
                                         const FrictionParams& real_mu,
                                         const FrictionParams& optimized,
                                         const FrictionParams& defaults,
                                         int ticks, uint64_t seed) {
  TrajectoryComparison c;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  FullState real;
  real.rho = plant.geom.Radius(real.ring);
  real.theta = WrapAngle(angle(rng));
  ReducedState opt = Observe(real);
  ReducedState def = opt;
  RandomPolicy policy(ExplorationConfig{0.7, 0.3}, plant.dt, DeriveSeed(seed, 3, 0));
  for (int k = 0; k <= ticks && !real.ring.IsGoal(); ++k) {
    c.t.push_back(k * plant.dt);
    c.theta_real.push_back(real.theta);
    c.theta_optimized.push_back(opt.theta);
    c.theta_default.push_back(def.theta);
    if (k == ticks) break;
    const Action u = policy.Next();
    c.actions.push_back(u);
    real = StepFull(real, u, real_mu, plant);
    opt = StepReduced(opt, u, optimized, plant);
    def = StepReduced(def, u, defaults, plant);
    // the reduced engines stay in the ring the real marble is in
    opt.ring = def.ring = real.ring;
    if (real.ring.IsGoal()) break;
  }
  return c;
}

CalibrationReport RunCalibration(const PlantSpec& plant,
                                 const FrictionParams& real_mu,
                                 const FrictionParams& mu_init,
                                 const NoiseSigma& noise,
                                 const CalibrationConfig& config) {
  CalibrationReport rep;
  std::mt19937_64 pick(DeriveSeed(config.seed, 9, 0));
  for (int r = 0; r < kNumRings; ++r) {
    const RingIndex ring{r};
    const TransitionBuffer train_pool = CollectRandomPolicy(
        plant, real_mu, noise, ring, 4, config.rollout_ticks, config,
        DeriveSeed(config.seed, 1, r));
    rep.train.Append(Sample(train_pool, config.transitions_per_ring, pick));
    const int holdout_rollouts =
        std::max(1, (config.holdout_per_ring + config.rollout_ticks - 1) /
                        config.rollout_ticks);
    const TransitionBuffer hold_pool = CollectRandomPolicy(
        plant, real_mu, noise, ring, holdout_rollouts + 1, config.rollout_ticks,
        config, DeriveSeed(config.seed, 2, r));
    rep.holdout.Append(Sample(hold_pool, config.holdout_per_ring, pick));
  }
  EstimationConfig est = config.estimation;
  est.cmaes.seed = config.seed;
  rep.estimation = EstimateParameters(rep.train, mu_init, plant, est);
  rep.rmse_before = OneStepThetaRmse(rep.holdout, mu_init, plant);
  rep.rmse_after = OneStepThetaRmse(rep.holdout, rep.estimation.mu, plant);
  rep.comparison = CompareTrajectories(plant, real_mu, rep.estimation.mu,
                                       mu_init, 90, DeriveSeed(config.seed, 4, 0));
  return rep;
}

}  // namespace cmaze
