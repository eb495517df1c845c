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

#include "cmaze/motor.h"

#include <cmath>

#include <Eigen/Dense>

namespace cmaze {

namespace {

double ServoAxis(double angle, double command, double dt,
                 const ServoParams& servo) {
  const double target = std::clamp(command, -1.0, 1.0) * servo.max_tilt;
  double delta = -std::expm1(-dt / servo.tau) * (target - angle);
  const double cap = servo.rate_limit * dt;
  delta = std::clamp(delta, -cap, cap);
  return std::clamp(angle + delta, -servo.max_tilt, servo.max_tilt);
}

double SumOfSinusoids(const std::vector<Sinusoid>& parts, double t) {
  double u = 0.0;
  for (const auto& s : parts) {
    u += s.amplitude * std::sin(2 * kPi * s.frequency * t + s.phase);
  }
  return u;
}

// least squares for next = a * angle + b * command on one axis
ArxAxis FitAxis(const Eigen::MatrixX2d& regressors,
                const Eigen::VectorXd& next, const char* axis) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixX2d> qr(regressors);
  // relative threshold on the pivots, so scaling the commands is harmless
  qr.setThreshold(1e-10);
  if (qr.rank() < 2) {
    throw FitError(std::string("FitArx: rank-deficient regressor on ") +
                   axis + " axis");
  }
  const Eigen::Vector2d coef = qr.solve(next);
  return {coef(0), coef(1)};
}

}  // namespace

void ServoParams::Validate() const {
  if (!(tau > 0) || !(rate_limit > 0) || !(max_tilt > 0)) {
    throw std::invalid_argument(
        "ServoParams: tau, rate_limit and max_tilt must be positive");
  }
}

PlatformAngles ServoStep(PlatformAngles angles, const Action& command,
                         double dt, const ServoParams& servo) {
  return {ServoAxis(angles.beta, command.ux, dt, servo),
          ServoAxis(angles.gamma, command.uy, dt, servo)};
}

PlatformAngles ArxModel::Predict(PlatformAngles current,
                                 const Action& command) const {
  return {beta.a * current.beta + beta.b * command.ux,
          gamma.a * current.gamma + gamma.b * command.uy};
}

ExcitationDataset ExciteAndCollect(const PlatformPlant& plant,
                                   const ExcitationPlan& plan) {
  const double nyquist = 0.5 / plan.dt;
  for (const auto* axis : {&plan.x_axis, &plan.y_axis}) {
    for (const auto& s : *axis) {
      if (!(s.frequency < nyquist) || s.frequency < 0) {
        throw std::invalid_argument(
            "ExciteAndCollect: frequency must be below Nyquist");
      }
    }
  }
  ExcitationDataset data;
  data.dt = plan.dt;
  const int ticks = static_cast<int>(std::llround(plan.duration / plan.dt));
  data.samples.reserve(ticks);
  PlatformAngles angles;
  for (int k = 0; k < ticks; ++k) {
    const double t = k * plan.dt;
    const Action command = Action{SumOfSinusoids(plan.x_axis, t),
                                  SumOfSinusoids(plan.y_axis, t)}
                               .Clamped();
    const PlatformAngles next = plant(angles, command, plan.dt);
    data.samples.push_back({t, angles, command, next});
    angles = next;
  }
  return data;
}

ArxModel FitArx(const ExcitationDataset& data) {
  const auto n = static_cast<Eigen::Index>(data.samples.size());
  if (n < 10) throw FitError("FitArx: need at least 10 samples");
  Eigen::MatrixX2d xb(n, 2), xg(n, 2);
  Eigen::VectorXd yb(n), yg(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = data.samples[i];
    xb.row(i) << s.angles.beta, s.command.ux;
    xg.row(i) << s.angles.gamma, s.command.uy;
    yb(i) = s.next.beta;
    yg(i) = s.next.gamma;
  }
  return {FitAxis(xb, yb, "beta"), FitAxis(xg, yg, "gamma")};
}

double ArxResidualRms(const ArxModel& arx, const ExcitationDataset& data) {
  if (data.samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : data.samples) {
    const PlatformAngles p = arx.Predict(s.angles, s.command);
    sum += std::pow(p.beta - s.next.beta, 2) +
           std::pow(p.gamma - s.next.gamma, 2);
  }
  return std::sqrt(sum / (2.0 * data.samples.size()));
}

Action ImmInvertUnclamped(const ArxModel& arx, PlatformAngles current,
                          PlatformAngles desired) {
  if (arx.beta.b == 0.0 || arx.gamma.b == 0.0) {
    throw FitError("ImmInvert: ARX input gain is zero");
  }
  return {(desired.beta - arx.beta.a * current.beta) / arx.beta.b,
          (desired.gamma - arx.gamma.a * current.gamma) / arx.gamma.b};
}

Action ImmInvert(const ArxModel& arx, PlatformAngles current,
                 PlatformAngles desired) {
  return ImmInvertUnclamped(arx, current, desired).Clamped();
}

void to_json(nlohmann::json& j, const ServoParams& s) {
  j = nlohmann::json{
      {"tau", s.tau}, {"max_tilt", s.max_tilt}, {"rate_limit", s.rate_limit}};
}

void from_json(const nlohmann::json& j, ServoParams& s) {
  s.tau = j.value("tau", s.tau);
  s.max_tilt = j.value("max_tilt", s.max_tilt);
  s.rate_limit = j.value("rate_limit", s.rate_limit);
}

void to_json(nlohmann::json& j, const ArxModel& m) {
  j = nlohmann::json{{"beta", {m.beta.a, m.beta.b}},
                     {"gamma", {m.gamma.a, m.gamma.b}}};
}

void from_json(const nlohmann::json& j, ArxModel& m) {
  m.beta = {j.at("beta").at(0).get<double>(), j.at("beta").at(1).get<double>()};
  m.gamma = {j.at("gamma").at(0).get<double>(),
             j.at("gamma").at(1).get<double>()};
}

}  // namespace cmaze
