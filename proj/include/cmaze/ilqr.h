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


#ifndef CMAZE_ILQR_H_
#define CMAZE_ILQR_H_

#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

// Iterative LQR over a generic discrete-time model x' = f(x, u) with a
// quadratic tracking cost
//
//   J = sum_{k<T} |x_k - xt_k|^2_Q + |u_k - ut_k|^2_R + |x_T - xt_T|^2_Qf
//
// Jacobians come from central differences, the backward pass carries
// Levenberg-style regularization on V_xx, controls obey an optional box via
// a projected-Newton QP, and the forward pass backtracks until the cost
// strictly decreases.

namespace cmaze {

class IlqrError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using DynamicsFn =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;
// a - b in the tangent space of the state (e.g. with wrapped angles)
using DifferenceFn =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

struct Jacobians {
  Eigen::MatrixXd a;   // df/dx
  Eigen::MatrixXd b;   // df/du
};

// Central differences with step rel_step * max(1, |z_i|) per coordinate.
// With a control box, a control whose stencil would leave the box gets a
// one-sided difference from inside it. Throws IlqrError if an evaluation is
// not finite.
Jacobians Linearize(const DynamicsFn& f, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& u, const DifferenceFn& diff = {},
                    double rel_step = 1e-5,
                    const Eigen::VectorXd& u_lower = {},
                    const Eigen::VectorXd& u_upper = {});

struct IlqrProblem {
  DynamicsFn dynamics;
  DifferenceFn difference;   // empty: plain subtraction
  int horizon = 1;
  Eigen::MatrixXd q;         // stage state weight
  Eigen::MatrixXd q_final;   // terminal state weight
  Eigen::MatrixXd r;         // control weight
  // targets: one entry broadcasts, otherwise horizon + 1 (states) and
  // horizon (controls) entries; empty control targets mean zero
  std::vector<Eigen::VectorXd> x_target;
  std::vector<Eigen::VectorXd> u_target;
  // optional control box, both empty or both sized like u
  Eigen::VectorXd u_lower;
  Eigen::VectorXd u_upper;
};

struct IlqrOptions {
  int max_iterations = 100;
  double rel_tolerance = 1e-6;
  // stop when every feedforward step is below this
  double step_tolerance = 1e-9;
  double mu_min = 1e-6;
  double mu_max = 1e10;
  double mu_factor = 2.0;
};

struct IlqrSolution {
  std::vector<Eigen::VectorXd> x;    // horizon + 1 states
  std::vector<Eigen::VectorXd> u;    // horizon controls
  std::vector<Eigen::MatrixXd> k_fb; // horizon feedback gains
  double cost = 0.0;
  int iterations = 0;                // backward passes
  bool converged = false;
  std::vector<double> cost_history;  // cost after every iteration
};

// Total cost of a rollout.
double TrajectoryCost(const IlqrProblem& problem,
                      const std::vector<Eigen::VectorXd>& x,
                      const std::vector<Eigen::VectorXd>& u);

// Rolls `u` out from x0.
std::vector<Eigen::VectorXd> Rollout(const IlqrProblem& problem,
                                     const Eigen::VectorXd& x0,
                                     const std::vector<Eigen::VectorXd>& u);

// Solves from x0 starting at `u_init` (size horizon). Throws IlqrError on
// bad shapes, non-finite rollouts, or a backward pass that is not positive
// definite even at the largest regularization.
IlqrSolution IlqrSolve(const IlqrProblem& problem, const Eigen::VectorXd& x0,
                       const std::vector<Eigen::VectorXd>& u_init,
                       const IlqrOptions& options = {});

// min 0.5 k'Hk + g'k subject to lower <= k <= upper, by projected Newton.
// `free` marks coordinates not held at a bound by the solution.
struct BoxQpResult {
  Eigen::VectorXd k;
  std::vector<bool> free;
  bool ok = true;   // false if the free block of H is not positive definite
};
BoxQpResult SolveBoxQp(const Eigen::MatrixXd& h, const Eigen::VectorXd& g,
                       const Eigen::VectorXd& lower,
                       const Eigen::VectorXd& upper,
                       const Eigen::VectorXd& start);

}  // namespace cmaze

#endif  // CMAZE_ILQR_H_
