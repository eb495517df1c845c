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

#include "cmaze/cmaes.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>

namespace cmaze {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Strategy {
  int n = 0;
  int lambda = 0;
  int mu = 0;
  VectorXd weights;
  double mu_eff = 0;
  double c_sigma = 0;
  double d_sigma = 0;
  double c_c = 0;
  double c_1 = 0;
  double c_mu = 0;
  double chi_n = 0;

  Strategy(int dim, int population) : n(dim), lambda(population) {
    mu = lambda / 2;
    weights.resize(mu);
    for (int i = 0; i < mu; ++i) {
      weights(i) = std::log((lambda + 1.0) / 2.0) - std::log(i + 1.0);
    }
    weights /= weights.sum();
    mu_eff = 1.0 / weights.squaredNorm();
    const double nd = n;
    c_sigma = (mu_eff + 2) / (nd + mu_eff + 5);
    d_sigma = 1 + 2 * std::max(0.0, std::sqrt((mu_eff - 1) / (nd + 1)) - 1) +
              c_sigma;
    c_c = (4 + mu_eff / nd) / (nd + 4 + 2 * mu_eff / nd);
    c_1 = 2 / ((nd + 1.3) * (nd + 1.3) + mu_eff);
    c_mu = std::min(1 - c_1, 2 * (mu_eff - 2 + 1 / mu_eff) /
                                 ((nd + 2) * (nd + 2) + mu_eff));
    chi_n = std::sqrt(nd) * (1 - 1 / (4 * nd) + 1 / (21 * nd * nd));
  }
};

struct Candidate {
  VectorXd x;      // sampled point
  VectorXd y;      // (x - mean) / sigma
  double fitness;  // ranked value including penalties
};

}  // namespace

CmaEsResult CmaEsMinimize(const Objective& objective, const VectorXd& x0,
                          const CmaEsConfig& config) {
  const int n = static_cast<int>(x0.size());
  if (n < 1) throw CmaEsSetupError("CMA-ES: empty start point");
  const int lambda = config.population > 0
                         ? config.population
                         : 4 + static_cast<int>(std::floor(3 * std::log(n)));
  if (lambda < 4) throw CmaEsSetupError("CMA-ES: population must be >= 4");
  if (config.max_evals <= lambda) {
    throw CmaEsSetupError("CMA-ES: max_evals must exceed the population");
  }
  VectorXd scales(n);
  if (config.sigma0.size() == 1) {
    scales.setConstant(config.sigma0.front());
  } else if (static_cast<int>(config.sigma0.size()) == n) {
    scales = Eigen::Map<const VectorXd>(config.sigma0.data(), n);
  } else {
    throw CmaEsSetupError("CMA-ES: sigma0 size mismatch");
  }
  if ((scales.array() <= 0).any()) {
    throw CmaEsSetupError("CMA-ES: sigma0 must be positive");
  }
  const bool bounded = !config.lower.empty() || !config.upper.empty();
  VectorXd lower = VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  VectorXd upper = VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  if (bounded) {
    if (static_cast<int>(config.lower.size()) != n ||
        static_cast<int>(config.upper.size()) != n) {
      throw CmaEsSetupError("CMA-ES: bounds size mismatch");
    }
    lower = Eigen::Map<const VectorXd>(config.lower.data(), n);
    upper = Eigen::Map<const VectorXd>(config.upper.data(), n);
  }

  CmaEsResult result;
  result.x_best = x0.cwiseMax(lower).cwiseMin(upper);
  result.f_best = objective(result.x_best);
  result.evaluations = 1;
  if (!std::isfinite(result.f_best)) {
    throw CmaEsSetupError("CMA-ES: objective is not finite at x0");
  }

  const Strategy s(n, lambda);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  double sigma = scales.maxCoeff();
  VectorXd mean = x0;
  MatrixXd cov = (scales / sigma).array().square().matrix().asDiagonal();
  VectorXd p_sigma = VectorXd::Zero(n);
  VectorXd p_c = VectorXd::Zero(n);
  MatrixXd basis = MatrixXd::Identity(n, n);
  VectorXd axis = scales / sigma;  // sqrt of eigenvalues

  const int flat_window = 10 + static_cast<int>(std::ceil(30.0 * n / lambda));
  std::deque<double> recent_best;

  std::vector<Candidate> pop(lambda);
  for (int gen = 0;; ++gen) {
    if (result.evaluations + lambda > config.max_evals) {
      result.stop_reason = "max_evals";
      break;
    }
    // sample and evaluate
    double worst_finite = -std::numeric_limits<double>::infinity();
    std::vector<int> non_finite;
    for (int k = 0; k < lambda; ++k) {
      VectorXd z(n);
      for (int i = 0; i < n; ++i) z(i) = normal(rng);
      pop[k].y = basis * axis.cwiseProduct(z);
      pop[k].x = mean + sigma * pop[k].y;
      const VectorXd feasible = pop[k].x.cwiseMax(lower).cwiseMin(upper);
      const double f = objective(feasible);
      ++result.evaluations;
      if (!std::isfinite(f)) {
        non_finite.push_back(k);
        continue;
      }
      if (f < result.f_best) {
        result.f_best = f;
        result.x_best = feasible;
      }
      pop[k].fitness =
          f + config.boundary_weight * (pop[k].x - feasible).squaredNorm();
      worst_finite = std::max(worst_finite, pop[k].fitness);
    }
    if (static_cast<int>(non_finite.size()) == lambda) worst_finite = 0.0;
    for (int k : non_finite) {
      pop[k].fitness = worst_finite + 1.0 + std::abs(worst_finite);
    }

    std::vector<int> order(lambda);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return pop[a].fitness < pop[b].fitness;
    });

    // recombination
    VectorXd y_w = VectorXd::Zero(n);
    for (int i = 0; i < s.mu; ++i) y_w += s.weights(i) * pop[order[i]].y;
    mean += sigma * y_w;

    // cumulation
    const VectorXd inv_sqrt_y =
        basis * (basis.transpose() * y_w).cwiseQuotient(axis);
    p_sigma = (1 - s.c_sigma) * p_sigma +
              std::sqrt(s.c_sigma * (2 - s.c_sigma) * s.mu_eff) * inv_sqrt_y;
    const double ps_norm = p_sigma.norm();
    const bool h_sigma =
        ps_norm / std::sqrt(1 - std::pow(1 - s.c_sigma, 2.0 * (gen + 1))) <
        (1.4 + 2.0 / (n + 1)) * s.chi_n;
    p_c = (1 - s.c_c) * p_c +
          (h_sigma ? std::sqrt(s.c_c * (2 - s.c_c) * s.mu_eff) : 0.0) * y_w;

    // covariance
    MatrixXd rank_mu = MatrixXd::Zero(n, n);
    for (int i = 0; i < s.mu; ++i) {
      const VectorXd& y = pop[order[i]].y;
      rank_mu.noalias() += s.weights(i) * y * y.transpose();
    }
    const double lost = h_sigma ? 0.0 : s.c_1 * s.c_c * (2 - s.c_c);
    cov = (1 - s.c_1 - s.c_mu + lost) * cov +
          s.c_1 * p_c * p_c.transpose() + s.c_mu * rank_mu;
    cov = 0.5 * (cov + cov.transpose());

    sigma *= std::exp((s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1));

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
    basis = eig.eigenvectors();
    axis = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt();

    result.history.push_back(
        {gen, result.evaluations, result.f_best, sigma, mean});

    // termination
    const double gen_best = pop[order.front()].fitness;
    const double gen_range = pop[order.back()].fitness - gen_best;
    recent_best.push_back(gen_best);
    if (static_cast<int>(recent_best.size()) > flat_window) {
      recent_best.pop_front();
    }
    if (static_cast<int>(recent_best.size()) == flat_window && non_finite.empty()) {
      const auto [lo, hi] =
          std::minmax_element(recent_best.begin(), recent_best.end());
      if (*hi - *lo < config.f_tol && gen_range < config.f_tol) {
        result.stop_reason = "f_tol";
        break;
      }
    }
    const double spread =
        sigma * cov.diagonal().cwiseSqrt().maxCoeff();
    if (spread < config.x_tol &&
        sigma * p_c.cwiseAbs().maxCoeff() < config.x_tol) {
      result.stop_reason = "x_tol";
      break;
    }
    if (axis.maxCoeff() > 1e7 * axis.minCoeff()) {
      result.stop_reason = "condition";
      break;
    }
  }
  return result;
}

}  // namespace cmaze
