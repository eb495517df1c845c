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

#ifndef CMAZE_GP_H_
#define CMAZE_GP_H_

#include <stdexcept>

#include <Eigen/Core>
#include <json.hpp>

// Gaussian process regression with a linear kernel on standardized,
// bias-augmented features:
//
//   k(x, x') = sf^2 (z(x)^T z(x') + 1),   z(x) = (x - mean) / scale
//
// Targets are centered and scaled before fitting. Because the kernel has
// rank d + 1, every solve against K + sn^2 I is carried out through the
// (d + 1) x (d + 1) matrix M = sn^2 I + sf^2 Phi^T Phi (Woodbury and the
// matrix determinant lemma), which is exact and keeps fits over thousands
// of points cheap.

namespace cmaze {

class GpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GpHyperparams {
  double signal = 1.0;   // sf, in standardized target units
  double noise = 0.1;    // sn, in standardized target units
};

inline constexpr double kMinGpNoise = 1e-6;

// Kernel on already standardized feature vectors (bias appended inside).
// Throws std::invalid_argument on a dimension mismatch.
double LinearKernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                    const GpHyperparams& hyp);

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

struct GpFitOptions {
  int starts = 5;
  int iterations = 200;
  double min_noise = kMinGpNoise;
};

// Log marginal likelihood and its gradient with respect to
// (log sf, log sn), for standardized data.
struct LogLikelihood {
  double value = 0.0;
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
};

class GpModel {
 public:
  // Unfitted; Predict throws.
  GpModel() = default;

  // Model without data: mean 0 and prior variance.
  static GpModel Prior(int input_dim, const GpHyperparams& hyp = {});

  // Fits hyperparameters by multi-start gradient ascent of the log
  // marginal likelihood, starting around `init`. Inputs are rows of `x`.
  // Throws GpError on bad shapes, non-finite targets, fewer than two
  // points, or a factorization that fails even with jitter.
  static GpModel Fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const GpHyperparams& init = {},
                     const GpFitOptions& options = {});

  // Same data, fixed hyperparameters.
  static GpModel FitFixed(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const GpHyperparams& hyp);

  bool fitted() const { return fitted_; }
  int input_dim() const { return input_dim_; }
  int size() const { return static_cast<int>(targets_.size()); }
  const GpHyperparams& hyperparams() const { return hyp_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& targets() const { return targets_; }

  GpPrediction Predict(const Eigen::VectorXd& x) const;
  double PredictMean(const Eigen::VectorXd& x) const;

  // standardized features (no bias) of a raw input
  Eigen::VectorXd Standardize(const Eigen::VectorXd& x) const;
  // standardized training targets
  Eigen::VectorXd StandardizedTargets() const;

  // log marginal likelihood of the stored data at arbitrary hyperparameters
  LogLikelihood Evaluate(const GpHyperparams& hyp) const;

  nlohmann::json ToJson() const;
  static GpModel FromJson(const nlohmann::json& j);

 private:
  void Prepare(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
  void Factorize(const GpHyperparams& hyp);

  bool fitted_ = false;
  int input_dim_ = 0;
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  Eigen::VectorXd feature_mean_;
  Eigen::VectorXd feature_scale_;
  double target_mean_ = 0.0;
  double target_scale_ = 1.0;
  GpHyperparams hyp_;
  // sufficient statistics of the standardized design Phi (bias last)
  Eigen::MatrixXd gram_;      // Phi^T Phi
  Eigen::VectorXd proj_;      // Phi^T y
  double yy_ = 0.0;           // y^T y
  // cached solves
  Eigen::MatrixXd chol_;      // lower Cholesky factor of M
  Eigen::VectorXd weights_;   // posterior mean weights
  Eigen::VectorXd alpha_;     // (K + sn^2 I)^-1 y
};

}  // namespace cmaze

#endif  // CMAZE_GP_H_
