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

#ifndef CMAZE_STATE_H_
#define CMAZE_STATE_H_

#include <algorithm>
#include <array>

#include <json.hpp>

#include "cmaze/geometry.h"

namespace cmaze {

// Friction knobs shared by both engines.
//   slide: Coulomb coefficient (dimensionless)
//   spin:  spin decay rate (1/s)
//   roll:  rolling resistance (N m s / rad)
//   floss: stiction threshold coefficient (dimensionless)
struct FrictionParams {
  double slide = 0.0;
  double spin = 0.0;
  double roll = 0.0;
  double floss = 0.0;

  // values of the stand-in "real" system
  static constexpr FrictionParams FullDefaults() {
    return {1e-3, 1e-6, 1e-7, 1e-6};
  }
  // uncalibrated values of the agent's engine
  static constexpr FrictionParams ReducedDefaults() {
    return {1.0, 5e-3, 1e-4, 0.0};
  }

  std::array<double, 4> AsArray() const { return {slide, spin, roll, floss}; }
  static FrictionParams FromArray(const std::array<double, 4>& a) {
    return {a[0], a[1], a[2], a[3]};
  }
  // Throws std::invalid_argument unless all entries are finite and >= 0.
  void Validate() const;

  friend bool operator==(const FrictionParams&,
                         const FrictionParams&) = default;
};

// Normalized servo command; target tilts are ux * max_tilt, uy * max_tilt.
struct Action {
  double ux = 0.0;
  double uy = 0.0;

  Action Clamped() const {
    return {std::clamp(ux, -1.0, 1.0), std::clamp(uy, -1.0, 1.0)};
  }
  friend bool operator==(const Action&, const Action&) = default;
};

// What the agent can observe: platform tilts, marble angle and rate, ring.
struct ReducedState {
  double beta = 0.0;
  double gamma = 0.0;
  double theta = 0.0;
  double theta_dot = 0.0;
  RingIndex ring;

  friend bool operator==(const ReducedState&, const ReducedState&) = default;
};

// Hidden state of the "real" maze: adds radial motion and marble spin.
struct FullState {
  double beta = 0.0;
  double gamma = 0.0;
  double theta = 0.0;
  double theta_dot = 0.0;
  RingIndex ring;
  double rho = 0.0;
  double rho_dot = 0.0;
  double spin = 0.0;

  friend bool operator==(const FullState&, const FullState&) = default;
};

void to_json(nlohmann::json& j, const FrictionParams& mu);
void from_json(const nlohmann::json& j, FrictionParams& mu);
void to_json(nlohmann::json& j, const ReducedState& x);
void from_json(const nlohmann::json& j, ReducedState& x);

}  // namespace cmaze

#endif  // CMAZE_STATE_H_
