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

#include "cmaze/estimation.h"

#include <cmath>
#include <limits>

namespace cmaze {

void TransitionBuffer::Append(const TransitionBuffer& other) {
  items.insert(items.end(), other.items.begin(), other.items.end());
}

std::map<int, int> TransitionBuffer::CountByRing() const {
  std::map<int, int> counts;
  for (const auto& t : items) ++counts[t.x.ring.value];
  return counts;
}

TransitionBuffer TransitionBuffer::OfRing(int ring) const {
  TransitionBuffer out;
  for (const auto& t : items) {
    if (t.x.ring.value == ring) out.items.push_back(t);
  }
  return out;
}

double FrictionObjective(const TransitionBuffer& data,
                         const FrictionParams& mu, const PlantSpec& plant) {
  if (data.empty()) {
    throw std::domain_error("FrictionObjective: empty transition buffer");
  }
  double sum = 0.0;
  for (const auto& t : data.items) {
    const ReducedState sim = StepReduced(t.x, t.u, mu, plant);
    const double err = WrapAngle(t.next.theta - sim.theta);
    sum += err * err;
  }
  return sum / static_cast<double>(data.size());
}

double OneStepThetaRmse(const TransitionBuffer& data, const FrictionParams& mu,
                        const PlantSpec& plant) {
  return std::sqrt(FrictionObjective(data, mu, plant));
}

EstimationResult EstimateParameters(const TransitionBuffer& data,
                                    const FrictionParams& mu_init,
                                    const PlantSpec& plant,
                                    const EstimationConfig& config) {
  if (data.empty()) {
    throw std::domain_error("EstimateParameters: empty transition buffer");
  }
  for (const auto& [ring, count] : data.CountByRing()) {
    if (count < config.min_transitions_per_ring) {
      throw std::invalid_argument(
          "EstimateParameters: ring " + std::to_string(ring) + " has only " +
          std::to_string(count) + " transitions");
    }
  }
  const auto& lo = config.cmaes.lower;
  const auto& hi = config.cmaes.upper;
  auto to_mu = [](const Eigen::VectorXd& z) {
    return FrictionParams{std::pow(10.0, z(0)), std::pow(10.0, z(1)),
                          std::pow(10.0, z(2)), std::pow(10.0, z(3))};
  };
  auto objective = [&](const Eigen::VectorXd& z) {
    try {
      return FrictionObjective(data, to_mu(z), plant);
    } catch (const IntegrationError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };

  Eigen::VectorXd z0(4);
  const auto init = mu_init.AsArray();
  for (int i = 0; i < 4; ++i) {
    double z = init[i] > 0 ? std::log10(init[i]) : -1e300;
    if (!lo.empty()) z = std::max(z, lo[i]);
    if (!hi.empty()) z = std::min(z, hi[i]);
    z0(i) = z;
  }

  EstimationResult out;
  out.objective_init = FrictionObjective(data, mu_init, plant);
  out.search = CmaEsMinimize(objective, z0, config.cmaes);
  out.mu = to_mu(out.search.x_best);
  out.objective_best = out.search.f_best;
  if (!(out.objective_best <= out.objective_init)) {
    out.mu = mu_init;
    out.objective_best = out.objective_init;
  }
  return out;
}

}  // namespace cmaze
