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


#ifndef CMAZE_CONTROL_H_
#define CMAZE_CONTROL_H_

#include <array>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "cmaze/ilqr.h"
#include "cmaze/residual.h"

namespace cmaze {

// Quadratic weights in state order (beta, gamma, theta, theta_dot). The
// control weight applies to the commanded tilt in radians, i.e. to
// max_tilt * u.
struct CostSpec {
  std::array<double, 4> w = {4.0, 4.0, 1.0, 0.4};
  double lambda_u = 20.0;
  std::array<double, 4> q = {4.0, 4.0, 1.0, 0.4};

  // Throws std::invalid_argument on a negative or non-finite weight.
  void Validate() const;
};

struct ControlConfig {
  CostSpec cost;
  int plan_horizon = 45;
  int track_horizon = 10;
  int plan_iterations = 100;
  int track_iterations = 3;
  double replan_theta_error = 0.3;   // rad
};

using StateVec = Eigen::Matrix<double, 4, 1>;
using GainMat = Eigen::Matrix<double, 2, 4>;

StateVec ToVector(const ReducedState& x);
ReducedState FromVector(const Eigen::VectorXd& v, RingIndex ring);
Eigen::VectorXd ToVector(const Action& u);
Action ActionFromVector(const Eigen::VectorXd& v);

// Difference with the theta component wrapped.
Eigen::VectorXd StateDifference(const Eigen::VectorXd& a,
                                const Eigen::VectorXd& b);

// (0, 0, nearest gate, 0) in the ring of x.
ReducedState GateTarget(const MazeGeometry& geom, const ReducedState& x);

struct ReferenceTrajectory {
  std::vector<ReducedState> x;   // T + 1
  std::vector<Action> u;         // T
  std::vector<GainMat> k;        // T
  RingIndex ring;
  double gate = 0.0;
  double cost = 0.0;
  int iterations = 0;

  int horizon() const { return static_cast<int>(u.size()); }
  // index clamped to the terminal entry
  const ReducedState& StateAt(int k) const;
  const Action& ActionAt(int k) const;
  const GainMat& GainAt(int k) const;
};

// Jacobians of the hybrid model at (x, u) in vector form.
Jacobians LinearizeModel(const HybridModel& model, const ReducedState& x,
                         const Action& u);

// Plans T steps from x0 toward `target` under the hybrid model.
// Throws IlqrError from the solver.
ReferenceTrajectory IlqrPlan(const HybridModel& model, const ReducedState& x0,
                             const ReducedState& target, int horizon,
                             const CostSpec& cost,
                             const std::vector<Action>& init_u = {},
                             const IlqrOptions& options = {});

struct NmpcResult {
  Action action;
  std::vector<Action> warm;   // solution for the next tick's warm start
  int iterations = 0;
  double cost = 0.0;
  bool fallback = false;
};

// Tracks ref[k .. k + H] from x_obs with the tracking weights and
// lambda_u |u - u_ref|^2. Warm starts from `warm` shifted one tick, or from
// the reference controls if `warm` is empty. Solver failure falls back to
// u_ref + K (x_obs - x_ref).
NmpcResult NmpcTick(const HybridModel& model, const ReducedState& x_obs,
                    const ReferenceTrajectory& ref, int k, int horizon,
                    const CostSpec& cost, const std::vector<Action>& warm,
                    int max_iterations);

// u_ref_k + K_k (x - x_ref_k), clamped.
Action FeedbackAction(const ReferenceTrajectory& ref, int k,
                      const ReducedState& x);

void to_json(nlohmann::json& j, const CostSpec& c);
void from_json(const nlohmann::json& j, CostSpec& c);
void to_json(nlohmann::json& j, const ControlConfig& c);
void from_json(const nlohmann::json& j, ControlConfig& c);

}  // namespace cmaze

#endif  // CMAZE_CONTROL_H_
