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

#ifndef CMAZE_MOTOR_H_
#define CMAZE_MOTOR_H_

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmaze/state.h"

namespace cmaze {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Position-controlled hobby servo: first-order lag toward the commanded
// tilt, slew capped at rate_limit.
struct ServoParams {
  double tau = 0.05;         // s
  double max_tilt = 0.15;    // rad
  double rate_limit = 4.0;   // rad/s

  void Validate() const;
};

struct PlatformAngles {
  double beta = 0.0;
  double gamma = 0.0;
};

PlatformAngles ServoStep(PlatformAngles angles, const Action& command,
                         double dt, const ServoParams& servo);

// beta_{k+1} = a * beta_k + b * u_k per axis, u the normalized command.
struct ArxAxis {
  double a = 0.0;
  double b = 0.0;
};

struct ArxModel {
  ArxAxis beta;
  ArxAxis gamma;

  PlatformAngles Predict(PlatformAngles current, const Action& command) const;
};

struct ExcitationSample {
  double t = 0.0;
  PlatformAngles angles;
  Action command;
  PlatformAngles next;
};

struct ExcitationDataset {
  double dt = 1.0 / 30.0;
  std::vector<ExcitationSample> samples;
};

// One sinusoidal component: amplitude (normalized command units), frequency
// in Hz and phase in radians.
struct Sinusoid {
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
};

struct ExcitationPlan {
  std::vector<Sinusoid> x_axis;
  std::vector<Sinusoid> y_axis;
  double duration = 10.0;   // s
  double dt = 1.0 / 30.0;   // s
};

// The excited system: maps (angles, command, dt) to the next angles.
using PlatformPlant =
    std::function<PlatformAngles(PlatformAngles, const Action&, double)>;

// Drives both axes with sums of sinusoids and logs one sample per tick.
// Throws std::invalid_argument if a frequency is at or above Nyquist.
ExcitationDataset ExciteAndCollect(const PlatformPlant& plant,
                                   const ExcitationPlan& plan);

// Per-axis least squares. Throws FitError on too few samples or a
// rank-deficient regressor (e.g. constant-zero commands).
ArxModel FitArx(const ExcitationDataset& data);

// Residual RMSE of the fitted model over the data, per axis combined.
double ArxResidualRms(const ArxModel& arx, const ExcitationDataset& data);

// Command that the ARX model predicts will move the platform from
// `current` to `desired` in one tick, before clamping.
Action ImmInvertUnclamped(const ArxModel& arx, PlatformAngles current,
                          PlatformAngles desired);

// Clamped motor command for the same request. Throws FitError if b == 0.
Action ImmInvert(const ArxModel& arx, PlatformAngles current,
                 PlatformAngles desired);

void to_json(nlohmann::json& j, const ServoParams& s);
void from_json(const nlohmann::json& j, ServoParams& s);
void to_json(nlohmann::json& j, const ArxModel& m);
void from_json(const nlohmann::json& j, ArxModel& m);

}  // namespace cmaze

#endif  // CMAZE_MOTOR_H_
