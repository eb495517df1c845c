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

#ifndef CMAZE_ESTIMATION_H_
#define CMAZE_ESTIMATION_H_

#include <array>
#include <map>
#include <vector>

#include "cmaze/cmaes.h"
#include "cmaze/dynamics.h"

namespace cmaze {

// One observed step of the real system.
struct Transition {
  ReducedState x;
  Action u;
  ReducedState next;
  int episode = 0;
  int tick = 0;
};

// Ordered multiset of transitions.
struct TransitionBuffer {
  std::vector<Transition> items;

  bool empty() const { return items.empty(); }
  size_t size() const { return items.size(); }
  void Append(const TransitionBuffer& other);
  // transition count keyed by the ring of the start state
  std::map<int, int> CountByRing() const;
  // copy with only the transitions that start in `ring`
  TransitionBuffer OfRing(int ring) const;
};

// Mean squared wrapped error between observed next theta and the reduced
// engine's one-step prediction from each observed start state.
// Throws std::domain_error on an empty buffer.
double FrictionObjective(const TransitionBuffer& data,
                         const FrictionParams& mu, const PlantSpec& plant);

// Root of FrictionObjective: one-step theta RMSE.
double OneStepThetaRmse(const TransitionBuffer& data, const FrictionParams& mu,
                        const PlantSpec& plant);

struct EstimationConfig {
  CmaEsConfig cmaes = [] {
    CmaEsConfig c;
    c.population = 8;
    c.sigma0 = {1.0};
    c.max_evals = 2400;
    c.f_tol = 1e-14;
    c.x_tol = 1e-6;
    c.lower = {-8, -8, -8, -8};
    c.upper = {1, 1, 1, 1};
    c.boundary_weight = 1.0;
    return c;
  }();
  int min_transitions_per_ring = 10;
};

struct EstimationResult {
  FrictionParams mu;
  double objective_init = 0.0;
  double objective_best = 0.0;
  CmaEsResult search;
};

// CMA-ES over log10(mu) inside the configured box. The returned mu never
// scores worse than mu_init. Throws std::domain_error on an empty buffer
// and std::invalid_argument if a visited ring has too few transitions.
EstimationResult EstimateParameters(const TransitionBuffer& data,
                                    const FrictionParams& mu_init,
                                    const PlantSpec& plant,
                                    const EstimationConfig& config = {});

}  // namespace cmaze

#endif  // CMAZE_ESTIMATION_H_
