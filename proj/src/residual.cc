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


#include "cmaze/residual.h"

#include <cmath>
#include <map>
#include <vector>

namespace cmaze {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd ResidualFeatures(const ReducedState& x, const Action& u) {
  VectorXd f(kResidualFeatures);
  f << x.beta, x.gamma, std::cos(x.theta), std::sin(x.theta), x.theta_dot,
      u.ux, u.uy;
  return f;
}

HybridModel HybridModel::EngineOnly(const PlantSpec& plant,
                                    const FrictionParams& mu) {
  HybridModel m;
  m.plant = plant;
  m.mu = mu;
  return m;
}

bool HybridModel::HasResidual() const {
  for (const auto& r : rings) {
    if (r.active) return true;
  }
  return false;
}

Eigen::Vector2d ResidualTarget(const Transition& t, const FrictionParams& mu,
                               const PlantSpec& plant) {
  const ReducedState sim = StepReduced(t.x, t.u, mu, plant);
  return {WrapAngle(t.next.theta - sim.theta),
          t.next.theta_dot - sim.theta_dot};
}

HybridModel FitResidual(const TransitionBuffer& data, const FrictionParams& mu,
                        const PlantSpec& plant,
                        const ResidualFitOptions& options) {
  if (data.empty()) {
    throw std::domain_error("FitResidual: empty transition buffer");
  }
  HybridModel model = HybridModel::EngineOnly(plant, mu);
  std::map<int, std::vector<const Transition*>> by_ring;
  for (const auto& t : data.items) {
    if (t.next.ring != t.x.ring || t.x.ring.IsGoal()) continue;
    by_ring[t.x.ring.value].push_back(&t);
  }
  for (const auto& [ring, items] : by_ring) {
    const auto n = static_cast<Eigen::Index>(items.size());
    if (n < options.min_samples || n < 2) continue;
    MatrixXd x(n, kResidualFeatures);
    VectorXd y_theta(n);
    VectorXd y_rate(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Transition& t = *items[i];
      x.row(i) = ResidualFeatures(t.x, t.u).transpose();
      const Eigen::Vector2d target = ResidualTarget(t, mu, plant);
      y_theta(i) = target(0);
      y_rate(i) = target(1);
    }
    RingResidual& head = model.rings[ring];
    head.theta = GpModel::Fit(x, y_theta, options.init, options.gp);
    head.theta_dot = GpModel::Fit(x, y_rate, options.init, options.gp);
    head.active = true;
  }
  return model;
}

Eigen::Vector2d ResidualCorrection(const HybridModel& model,
                                   const ReducedState& x, const Action& u) {
  if (x.ring.IsGoal()) return Eigen::Vector2d::Zero();
  const RingResidual& head = model.rings.at(x.ring.value);
  if (!head.active) return Eigen::Vector2d::Zero();
  const VectorXd f = ResidualFeatures(x, u.Clamped());
  return {head.theta.PredictMean(f), head.theta_dot.PredictMean(f)};
}

ReducedState HybridStep(const HybridModel& model, const ReducedState& x,
                        const Action& u) {
  ReducedState next = StepReduced(x, u, model.mu, model.plant);
  const Eigen::Vector2d c = ResidualCorrection(model, x, u);
  if (c(0) != 0.0 || c(1) != 0.0) {
    next.theta = WrapAngle(next.theta + c(0));
    next.theta_dot += c(1);
  }
  return next;
}

Eigen::Vector2d HybridRmse(const HybridModel& model,
                           const TransitionBuffer& data) {
  if (data.empty()) throw std::domain_error("HybridRmse: empty buffer");
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (const auto& t : data.items) {
    const ReducedState p = HybridStep(model, t.x, t.u);
    const double e0 = WrapAngle(t.next.theta - p.theta);
    const double e1 = t.next.theta_dot - p.theta_dot;
    sum += Eigen::Vector2d(e0 * e0, e1 * e1);
  }
  return (sum / static_cast<double>(data.size())).cwiseSqrt();
}

nlohmann::json HybridToJson(const HybridModel& model) {
  nlohmann::json rings = nlohmann::json::array();
  for (const auto& r : model.rings) {
    if (r.active) {
      rings.push_back({{"active", true},
                       {"theta", r.theta.ToJson()},
                       {"theta_dot", r.theta_dot.ToJson()}});
    } else {
      rings.push_back({{"active", false}});
    }
  }
  return {{"geometry", model.plant.geom},
          {"servo", model.plant.servo},
          {"sim", model.plant.sim},
          {"dt", model.plant.dt},
          {"mu", model.mu},
          {"rings", rings}};
}

HybridModel HybridFromJson(const nlohmann::json& j) {
  HybridModel m;
  m.plant.geom = j.at("geometry").get<MazeGeometry>();
  m.plant.servo = j.at("servo").get<ServoParams>();
  m.plant.sim = j.at("sim").get<SimParams>();
  m.plant.dt = j.at("dt").get<double>();
  m.mu = j.at("mu").get<FrictionParams>();
  const auto& rings = j.at("rings");
  for (size_t i = 0; i < rings.size() && i < m.rings.size(); ++i) {
    if (!rings[i].at("active").get<bool>()) continue;
    m.rings[i].active = true;
    m.rings[i].theta = GpModel::FromJson(rings[i].at("theta"));
    m.rings[i].theta_dot = GpModel::FromJson(rings[i].at("theta_dot"));
  }
  return m;
}

}  // namespace cmaze
