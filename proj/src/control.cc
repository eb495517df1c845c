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


#include "cmaze/control.h"

#include <algorithm>
#include <cmath>

namespace cmaze {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// command magnitude of the seed used when planning from rest
constexpr double kPlanSeedPush = 0.2;

DynamicsFn ModelDynamics(const HybridModel& model, RingIndex ring) {
  return [&model, ring](const VectorXd& x, const VectorXd& u) -> VectorXd {
    return ToVector(HybridStep(model, FromVector(x, ring), ActionFromVector(u)));
  };
}

MatrixXd Diag(const std::array<double, 4>& d) {
  return Eigen::Vector4d(d[0], d[1], d[2], d[3]).asDiagonal();
}

MatrixXd ControlWeight(const HybridModel& model, const CostSpec& cost) {
  const double s = model.plant.servo.max_tilt;
  return cost.lambda_u * s * s * MatrixXd::Identity(2, 2);
}

void SetBox(IlqrProblem& p) {
  p.u_lower = VectorXd::Constant(2, -1.0);
  p.u_upper = VectorXd::Constant(2, 1.0);
}

std::vector<Action> ToActions(const std::vector<VectorXd>& u) {
  std::vector<Action> out;
  out.reserve(u.size());
  for (const auto& v : u) out.push_back(ActionFromVector(v));
  return out;
}

}  // namespace

void CostSpec::Validate() const {
  auto bad = [](double v) { return !std::isfinite(v) || v < 0; };
  for (double v : w) {
    if (bad(v)) throw std::invalid_argument("CostSpec: bad state weight");
  }
  for (double v : q) {
    if (bad(v)) throw std::invalid_argument("CostSpec: bad tracking weight");
  }
  if (bad(lambda_u)) throw std::invalid_argument("CostSpec: bad lambda_u");
}

StateVec ToVector(const ReducedState& x) {
  return StateVec(x.beta, x.gamma, x.theta, x.theta_dot);
}

ReducedState FromVector(const VectorXd& v, RingIndex ring) {
  return {v(0), v(1), v(2), v(3), ring};
}

VectorXd ToVector(const Action& u) { return Eigen::Vector2d(u.ux, u.uy); }

Action ActionFromVector(const VectorXd& v) { return {v(0), v(1)}; }

VectorXd StateDifference(const VectorXd& a, const VectorXd& b) {
  VectorXd d = a - b;
  d(2) = WrapAngle(d(2));
  return d;
}

ReducedState GateTarget(const MazeGeometry& geom, const ReducedState& x) {
  ReducedState t;
  t.ring = x.ring;
  t.theta = NearestGate(geom, x.ring, x.theta);
  return t;
}

const ReducedState& ReferenceTrajectory::StateAt(int k) const {
  return x.at(std::clamp(k, 0, static_cast<int>(x.size()) - 1));
}

const Action& ReferenceTrajectory::ActionAt(int k) const {
  return u.at(std::clamp(k, 0, static_cast<int>(u.size()) - 1));
}

const GainMat& ReferenceTrajectory::GainAt(int k) const {
  return this->k.at(std::clamp(k, 0, static_cast<int>(this->k.size()) - 1));
}

Jacobians LinearizeModel(const HybridModel& model, const ReducedState& x,
                         const Action& u) {
  return Linearize(ModelDynamics(model, x.ring), ToVector(x), ToVector(u),
                   StateDifference);
}

ReferenceTrajectory IlqrPlan(const HybridModel& model, const ReducedState& x0,
                             const ReducedState& target, int horizon,
                             const CostSpec& cost,
                             const std::vector<Action>& init_u,
                             const IlqrOptions& options) {
  IlqrProblem p;
  p.dynamics = ModelDynamics(model, x0.ring);
  p.difference = StateDifference;
  p.horizon = horizon;
  p.q = Diag(cost.w);
  p.q_final = p.q;
  p.r = ControlWeight(model, cost);
  p.x_target = {ToVector(target)};
  SetBox(p);

  std::vector<VectorXd> u0(horizon, VectorXd::Zero(2));
  for (int k = 0; k < horizon && k < static_cast<int>(init_u.size()); ++k) {
    u0[k] = ToVector(init_u[k]);
  }
  IlqrSolution sol = IlqrSolve(p, ToVector(x0), u0, options);

  // Friction dead zones zero every control derivative of a marble at rest,
  // so an all-zero plan may just be stuck. Retry from a push toward the
  // target and keep whichever is cheaper.
  const double error = WrapAngle(target.theta - x0.theta);
  bool idle = true;
  for (const auto& u : sol.u) idle = idle && u.isZero();
  if (idle && error != 0.0) {
    const double tilt = model.plant.servo.max_tilt;
    const double radius = model.plant.geom.Radius(x0.ring);
    Eigen::Vector2d push(TangentialAccel(tilt, 0, x0.theta, radius),
                         TangentialAccel(0, tilt, x0.theta, radius));
    if (push.norm() > 0) {
      push *= kPlanSeedPush * (error > 0 ? 1.0 : -1.0) / push.norm();
      const IlqrSolution seeded = IlqrSolve(
          p, ToVector(x0), std::vector<VectorXd>(horizon, push), options);
      if (seeded.cost < sol.cost) sol = seeded;
    }
  }

  ReferenceTrajectory ref;
  ref.ring = x0.ring;
  ref.gate = target.theta;
  ref.cost = sol.cost;
  ref.iterations = sol.iterations;
  for (const auto& v : sol.x) ref.x.push_back(FromVector(v, x0.ring));
  ref.u = ToActions(sol.u);
  for (const auto& m : sol.k_fb) ref.k.push_back(m);
  return ref;
}

Action FeedbackAction(const ReferenceTrajectory& ref, int k,
                      const ReducedState& x) {
  const VectorXd dx =
      StateDifference(ToVector(x), ToVector(ref.StateAt(k)));
  const VectorXd u = ToVector(ref.ActionAt(k)) + ref.GainAt(k) * dx;
  return ActionFromVector(u).Clamped();
}

NmpcResult NmpcTick(const HybridModel& model, const ReducedState& x_obs,
                    const ReferenceTrajectory& ref, int k, int horizon,
                    const CostSpec& cost, const std::vector<Action>& warm,
                    int max_iterations) {
  IlqrProblem p;
  p.dynamics = ModelDynamics(model, x_obs.ring);
  p.difference = StateDifference;
  p.horizon = horizon;
  p.q = Diag(cost.q);
  p.q_final = p.q;
  p.r = ControlWeight(model, cost);
  SetBox(p);
  for (int j = 0; j <= horizon; ++j) {
    p.x_target.push_back(ToVector(ref.StateAt(k + j)));
  }
  for (int j = 0; j < horizon; ++j) {
    p.u_target.push_back(ToVector(ref.ActionAt(k + j)));
  }

  std::vector<VectorXd> u0(horizon);
  for (int j = 0; j < horizon; ++j) {
    const int w = j + 1;
    u0[j] = w < static_cast<int>(warm.size()) ? ToVector(warm[w])
            : !warm.empty()                   ? ToVector(warm.back())
                                              : p.u_target[j];
  }

  NmpcResult out;
  IlqrOptions options;
  options.max_iterations = max_iterations;
  try {
    const IlqrSolution sol = IlqrSolve(p, ToVector(x_obs), u0, options);
    out.action = ActionFromVector(sol.u.front()).Clamped();
    out.warm = ToActions(sol.u);
    out.iterations = sol.iterations;
    out.cost = sol.cost;
  } catch (const IlqrError&) {
    out.action = FeedbackAction(ref, k, x_obs);
    out.fallback = true;
  }
  return out;
}

void to_json(nlohmann::json& j, const CostSpec& c) {
  j = nlohmann::json{{"w", c.w}, {"lambda_u", c.lambda_u}, {"q", c.q}};
}

void from_json(const nlohmann::json& j, CostSpec& c) {
  c.w = j.value("w", c.w);
  c.lambda_u = j.value("lambda_u", c.lambda_u);
  c.q = j.value("q", c.q);
}

void to_json(nlohmann::json& j, const ControlConfig& c) {
  j = nlohmann::json{{"cost", c.cost},
                     {"plan_horizon", c.plan_horizon},
                     {"track_horizon", c.track_horizon},
                     {"plan_iterations", c.plan_iterations},
                     {"track_iterations", c.track_iterations},
                     {"replan_theta_error", c.replan_theta_error}};
}

void from_json(const nlohmann::json& j, ControlConfig& c) {
  if (j.contains("cost")) c.cost = j.at("cost").get<CostSpec>();
  c.plan_horizon = j.value("plan_horizon", c.plan_horizon);
  c.track_horizon = j.value("track_horizon", c.track_horizon);
  c.plan_iterations = j.value("plan_iterations", c.plan_iterations);
  c.track_iterations = j.value("track_iterations", c.track_iterations);
  c.replan_theta_error = j.value("replan_theta_error", c.replan_theta_error);
}

}  // namespace cmaze
