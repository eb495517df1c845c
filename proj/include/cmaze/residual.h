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


#ifndef CMAZE_RESIDUAL_H_
#define CMAZE_RESIDUAL_H_

#include <array>

#include <Eigen/Core>
#include <json.hpp>

#include "cmaze/dynamics.h"
#include "cmaze/estimation.h"
#include "cmaze/gp.h"

namespace cmaze {

// GP input for a transition: (beta, gamma, cos theta, sin theta,
// theta_dot, ux, uy).
inline constexpr int kResidualFeatures = 7;
Eigen::VectorXd ResidualFeatures(const ReducedState& x, const Action& u);

// Correction heads for one ring. Inactive heads contribute zero.
struct RingResidual {
  bool active = false;
  GpModel theta;
  GpModel theta_dot;
};

// Reduced engine at calibrated friction plus per-ring GP mean corrections
// on theta and theta_dot.
struct HybridModel {
  PlantSpec plant;
  FrictionParams mu;
  std::array<RingResidual, kNumRings> rings;

  // Engine-only model.
  static HybridModel EngineOnly(const PlantSpec& plant,
                                const FrictionParams& mu);

  bool HasResidual() const;
};

struct ResidualFitOptions {
  GpFitOptions gp;
  GpHyperparams init;
  // rings with fewer samples fall back to the engine alone
  int min_samples = 2;
};

// Fits theta and theta_dot residual heads per ring on the teacher-forced
// one-step discrepancy between observed and engine-predicted next states.
// Transitions that change ring are skipped. Throws std::domain_error on an
// empty buffer and GpError if a fit fails.
HybridModel FitResidual(const TransitionBuffer& data, const FrictionParams& mu,
                        const PlantSpec& plant,
                        const ResidualFitOptions& options = {});

// Residual targets (wrapped theta error, theta_dot error) of one transition
// against the engine.
Eigen::Vector2d ResidualTarget(const Transition& t, const FrictionParams& mu,
                               const PlantSpec& plant);

// GP mean correction (theta, theta_dot) at (x, u).
Eigen::Vector2d ResidualCorrection(const HybridModel& model,
                                   const ReducedState& x, const Action& u);

// Engine step plus the mean correction, theta re-wrapped.
ReducedState HybridStep(const HybridModel& model, const ReducedState& x,
                        const Action& u);

// One-step RMSE of (theta, theta_dot) of the model over the buffer.
Eigen::Vector2d HybridRmse(const HybridModel& model,
                           const TransitionBuffer& data);

nlohmann::json HybridToJson(const HybridModel& model);
HybridModel HybridFromJson(const nlohmann::json& j);

}  // namespace cmaze

#endif  // CMAZE_RESIDUAL_H_
