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


#ifndef CMAZE_CALIBRATION_H_
#define CMAZE_CALIBRATION_H_

#include <cstdint>
#include <vector>

#include "cmaze/estimation.h"
#include "cmaze/pipeline.h"

namespace cmaze {

// Random-policy calibration: short rollouts of the full engine from random
// points of every ring under a smoothed random command, a small training
// sample per ring and a larger held-out set.
struct CalibrationConfig {
  int transitions_per_ring = 10;
  int holdout_per_ring = 200;
  int rollout_ticks = 60;
  double max_initial_rate = 2.0;   // rad/s
  ExplorationConfig policy{0.7, 0.3};
  EstimationConfig estimation;
  uint64_t seed = 0;
};

// Transitions of `rollouts` random-policy rollouts started in `ring`,
// keeping only steps that stay in the ring.
TransitionBuffer CollectRandomPolicy(const PlantSpec& plant,
                                     const FrictionParams& real_mu,
                                     const NoiseSigma& noise, RingIndex ring,
                                     int rollouts, int ticks,
                                     const CalibrationConfig& config,
                                     uint64_t seed);

struct TrajectoryComparison {
  std::vector<double> t;
  std::vector<double> theta_real;
  std::vector<double> theta_optimized;
  std::vector<double> theta_default;
  std::vector<Action> actions;
};

struct CalibrationReport {
  TransitionBuffer train;
  TransitionBuffer holdout;
  EstimationResult estimation;
  double rmse_before = 0.0;   // held-out one-step theta RMSE at mu_init
  double rmse_after = 0.0;    // same at the estimate
  TrajectoryComparison comparison;
};

// Collects data, runs the estimator once and scores both parameter sets on
// the held-out transitions.
CalibrationReport RunCalibration(const PlantSpec& plant,
                                 const FrictionParams& real_mu,
                                 const FrictionParams& mu_init,
                                 const NoiseSigma& noise,
                                 const CalibrationConfig& config);

// Open-loop rollout of the real engine and of the reduced engine at both
// parameter sets under one random command sequence.
TrajectoryComparison CompareTrajectories(const PlantSpec& plant,
                                         const FrictionParams& real_mu,
                                         const FrictionParams& optimized,
                                         const FrictionParams& defaults,
                                         int ticks, uint64_t seed);

}  // namespace cmaze

#endif  // CMAZE_CALIBRATION_H_
