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

#include "cmaze/gp.h"

#include <array>
#include <cmath>
#include <numbers>
#include <optional>

#include <Eigen/Dense>

namespace cmaze {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr std::array<double, 4> kJitter = {1e-10, 1e-9, 1e-8, 1e-6};

// offsets in (log sf, log sn) around the initial guess
constexpr std::array<std::array<double, 2>, 5> kStartOffsets = {
    {{0.0, 0.0}, {1.0, -1.5}, {-1.0, -3.0}, {0.5, -6.0}, {2.0, 1.0}}};

// Cholesky of v I + s G, escalating jitter until it succeeds.
std::optional<Eigen::LLT<MatrixXd>> FactorM(const MatrixXd& gram, double s,
                                            double v) {
  const auto d = gram.rows();
  MatrixXd m = s * gram;
  m.diagonal().array() += v;
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  for (double jitter : kJitter) {
    MatrixXd mj = m + jitter * MatrixXd::Identity(d, d);
    llt.compute(mj);
    if (llt.info() == Eigen::Success) return llt;
  }
  return std::nullopt;
}

}  // namespace

double LinearKernel(const VectorXd& a, const VectorXd& b,
                    const GpHyperparams& hyp) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("LinearKernel: dimension mismatch");
  }
  return hyp.signal * hyp.signal * (a.dot(b) + 1.0);
}

GpModel GpModel::Prior(int input_dim, const GpHyperparams& hyp) {
  GpModel m;
  m.Prepare(MatrixXd(0, input_dim), VectorXd(0));
  m.Factorize(hyp);
  return m;
}

void GpModel::Prepare(const MatrixXd& x, const VectorXd& y) {
  if (x.rows() != y.size()) throw GpError("GP: |X| != |y|");
  if (!y.allFinite() || !x.allFinite()) throw GpError("GP: non-finite data");
  const auto n = x.rows();
  input_dim_ = static_cast<int>(x.cols());
  inputs_ = x;
  targets_ = y;
  feature_mean_ = VectorXd::Zero(input_dim_);
  feature_scale_ = VectorXd::Ones(input_dim_);
  target_mean_ = 0.0;
  target_scale_ = 1.0;
  if (n > 0) {
    feature_mean_ = x.colwise().mean().transpose();
    for (int j = 0; j < input_dim_; ++j) {
      const double sd = std::sqrt(
          (x.col(j).array() - feature_mean_(j)).square().mean());
      feature_scale_(j) = sd > 1e-12 ? sd : 1.0;
    }
    target_mean_ = y.mean();
    const double sd = std::sqrt((y.array() - target_mean_).square().mean());
    target_scale_ = sd > 1e-300 ? sd : 1.0;
  }
  MatrixXd phi(n, input_dim_ + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    phi.row(i).head(input_dim_) = Standardize(x.row(i).transpose());
    phi(i, input_dim_) = 1.0;
  }
  const VectorXd ys = StandardizedTargets();
  gram_ = phi.transpose() * phi;
  proj_ = phi.transpose() * ys;
  yy_ = ys.squaredNorm();
}

void GpModel::Factorize(const GpHyperparams& hyp) {
  const double s = hyp.signal * hyp.signal;
  const double v = hyp.noise * hyp.noise;
  auto llt = FactorM(gram_, s, v);
  if (!llt) throw GpError("GP: kernel matrix not positive definite");
  hyp_ = hyp;
  chol_ = llt->matrixL();
  const VectorXd z = llt->solve(proj_);
  weights_ = s * z;

  // alpha in data space; Phi z recovered row by row
  const auto n = inputs_.rows();
  const VectorXd ys = StandardizedTargets();
  alpha_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    VectorXd phi(input_dim_ + 1);
    phi.head(input_dim_) = Standardize(inputs_.row(i).transpose());
    phi(input_dim_) = 1.0;
    alpha_(i) = (ys(i) - s * phi.dot(z)) / v;
  }
  fitted_ = true;
}

VectorXd GpModel::Standardize(const VectorXd& x) const {
  if (x.size() != input_dim_) {
    throw std::invalid_argument("GP: input dimension mismatch");
  }
  return (x - feature_mean_).cwiseQuotient(feature_scale_);
}

VectorXd GpModel::StandardizedTargets() const {
  return (targets_.array() - target_mean_) / target_scale_;
}

LogLikelihood GpModel::Evaluate(const GpHyperparams& hyp) const {
  const double n = static_cast<double>(targets_.size());
  const double d = static_cast<double>(gram_.rows());
  const double s = hyp.signal * hyp.signal;
  const double v = hyp.noise * hyp.noise;
  auto llt = FactorM(gram_, s, v);
  if (!llt) throw GpError("GP: kernel matrix not positive definite");

  const VectorXd z = llt->solve(proj_);
  const double quad = (yy_ - s * proj_.dot(z)) / v;
  double logdet_m = 0.0;
  const MatrixXd l = llt->matrixL();
  for (Eigen::Index i = 0; i < l.rows(); ++i) logdet_m += std::log(l(i, i));
  logdet_m *= 2.0;
  const double logdet = (n - d) * std::log(v) + logdet_m;

  LogLikelihood out;
  out.value =
      -0.5 * quad - 0.5 * logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);

  const MatrixXd m_inv = llt->solve(MatrixXd::Identity(gram_.rows(), gram_.cols()));
  const double dquad_ds = (-proj_.dot(z) + s * z.dot(gram_ * z)) / v;
  const double dquad_dv = (s * z.squaredNorm() - quad) / v;
  const double dlogdet_ds = (m_inv * gram_).trace();
  const double dlogdet_dv = (n - d) / v + m_inv.trace();
  const double dl_ds = -0.5 * (dquad_ds + dlogdet_ds);
  const double dl_dv = -0.5 * (dquad_dv + dlogdet_dv);
  out.grad << 2.0 * s * dl_ds, 2.0 * v * dl_dv;
  return out;
}

GpModel GpModel::FitFixed(const MatrixXd& x, const VectorXd& y,
                          const GpHyperparams& hyp) {
  GpModel m;
  m.Prepare(x, y);
  m.Factorize(hyp);
  return m;
}

GpModel GpModel::Fit(const MatrixXd& x, const VectorXd& y,
                     const GpHyperparams& init, const GpFitOptions& options) {
  if (x.rows() < 2) throw GpError("GP: need at least two points");
  GpModel m;
  m.Prepare(x, y);

  const double min_log_noise = std::log(options.min_noise);
  auto to_hyp = [](const Eigen::Vector2d& p) {
    return GpHyperparams{std::exp(p(0)), std::exp(p(1))};
  };
  auto project = [&](Eigen::Vector2d p) {
    p(1) = std::max(p(1), min_log_noise);
    p(0) = std::clamp(p(0), -20.0, 20.0);
    p(1) = std::min(p(1), 20.0);
    return p;
  };

  Eigen::Vector2d best_p;
  double best_value = -std::numeric_limits<double>::infinity();
  const Eigen::Vector2d p_init(std::log(init.signal), std::log(init.noise));
  for (int start = 0; start < options.starts; ++start) {
    const auto& off = kStartOffsets[start % kStartOffsets.size()];
    Eigen::Vector2d p = project(p_init + Eigen::Vector2d(off[0], off[1]));
    LogLikelihood cur = m.Evaluate(to_hyp(p));
    double step = 0.1;
    for (int it = 0; it < options.iterations; ++it) {
      const double gnorm = cur.grad.norm();
      if (!(gnorm > 1e-10)) break;
      // backtracking on a normalized ascent direction
      bool moved = false;
      step = std::min(step * 2.0, 4.0);
      while (step > 1e-10) {
        const Eigen::Vector2d trial = project(p + step * cur.grad / gnorm);
        if ((trial - p).norm() < 1e-14) break;
        const LogLikelihood next = m.Evaluate(to_hyp(trial));
        if (next.value > cur.value) {
          p = trial;
          cur = next;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (cur.value > best_value) {
      best_value = cur.value;
      best_p = p;
    }
  }
  m.Factorize(to_hyp(best_p));
  return m;
}

GpPrediction GpModel::Predict(const VectorXd& x) const {
  if (!fitted_) throw GpError("GP: model is not fitted");
  VectorXd z(input_dim_ + 1);
  z.head(input_dim_) = Standardize(x);
  z(input_dim_) = 1.0;
  const double s = hyp_.signal * hyp_.signal;
  const double v = hyp_.noise * hyp_.noise;
  const VectorXd w = chol_.triangularView<Eigen::Lower>().solve(z);
  GpPrediction p;
  p.mean = target_mean_ + target_scale_ * z.dot(weights_);
  p.variance = std::max(0.0, target_scale_ * target_scale_ * s * v * w.squaredNorm());
  return p;
}

double GpModel::PredictMean(const VectorXd& x) const {
  if (!fitted_) throw GpError("GP: model is not fitted");
  const VectorXd z = Standardize(x);
  return target_mean_ +
         target_scale_ * (z.dot(weights_.head(input_dim_)) + weights_(input_dim_));
}

namespace {

nlohmann::json VecToJson(const VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

VectorXd VecFromJson(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json MatToJson(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(VecToJson(m.row(i)));
  return rows;
}

MatrixXd MatFromJson(const nlohmann::json& j, Eigen::Index cols) {
  MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) = VecFromJson(j[i]);
  return m;
}

}  // namespace

nlohmann::json GpModel::ToJson() const {
  if (!fitted_) throw GpError("GP: cannot serialize an unfitted model");
  return {{"input_dim", input_dim_},
          {"signal", hyp_.signal},
          {"noise", hyp_.noise},
          {"feature_mean", VecToJson(feature_mean_)},
          {"feature_scale", VecToJson(feature_scale_)},
          {"target_mean", target_mean_},
          {"target_scale", target_scale_},
          {"inputs", MatToJson(inputs_)},
          {"targets", VecToJson(targets_)},
          {"alpha", VecToJson(alpha_)},
          {"weights", VecToJson(weights_)},
          {"gram", MatToJson(gram_)},
          {"proj", VecToJson(proj_)},
          {"yy", yy_},
          {"chol", MatToJson(chol_)}};
}

GpModel GpModel::FromJson(const nlohmann::json& j) {
  GpModel m;
  m.input_dim_ = j.at("input_dim").get<int>();
  m.hyp_ = {j.at("signal").get<double>(), j.at("noise").get<double>()};
  m.feature_mean_ = VecFromJson(j.at("feature_mean"));
  m.feature_scale_ = VecFromJson(j.at("feature_scale"));
  m.target_mean_ = j.at("target_mean").get<double>();
  m.target_scale_ = j.at("target_scale").get<double>();
  m.inputs_ = MatFromJson(j.at("inputs"), m.input_dim_);
  m.targets_ = VecFromJson(j.at("targets"));
  m.alpha_ = VecFromJson(j.at("alpha"));
  m.weights_ = VecFromJson(j.at("weights"));
  m.gram_ = MatFromJson(j.at("gram"), m.input_dim_ + 1);
  m.proj_ = VecFromJson(j.at("proj"));
  m.yy_ = j.at("yy").get<double>();
  m.chol_ = MatFromJson(j.at("chol"), m.input_dim_ + 1);
  m.fitted_ = true;
  return m;
}

}  // namespace cmaze
