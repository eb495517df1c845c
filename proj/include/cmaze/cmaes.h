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

#ifndef CMAZE_CMAES_H_
#define CMAZE_CMAES_H_

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace cmaze {

class CmaEsSetupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CmaEsConfig {
  // 0 selects the default 4 + floor(3 ln n)
  int population = 0;
  // initial step per coordinate; a single entry is broadcast
  std::vector<double> sigma0 = {0.5};
  int max_evals = 10000;
  double f_tol = 1e-12;
  double x_tol = 1e-12;
  uint64_t seed = 0;
  // optional box; samples outside are evaluated at the projection and
  // charged boundary_weight * squared distance
  std::vector<double> lower;
  std::vector<double> upper;
  double boundary_weight = 1.0;
};

struct CmaEsGeneration {
  int generation = 0;
  int evaluations = 0;
  double f_best = 0.0;   // best so far
  double sigma = 0.0;
  Eigen::VectorXd mean;
};

struct CmaEsResult {
  Eigen::VectorXd x_best;
  double f_best = 0.0;
  int evaluations = 0;
  std::string stop_reason;
  std::vector<CmaEsGeneration> history;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

// (mu/mu_w, lambda)-CMA-ES with cumulative step-size adaptation and
// rank-one plus rank-mu covariance updates. The start point is evaluated
// first, so the result is never worse than x0. Deterministic in the seed.
//
// Throws CmaEsSetupError if the objective is not finite at x0 or the
// configuration is invalid.
CmaEsResult CmaEsMinimize(const Objective& objective,
                          const Eigen::VectorXd& x0, const CmaEsConfig& config);

}  // namespace cmaze

#endif  // CMAZE_CMAES_H_
