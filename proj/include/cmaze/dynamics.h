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

#ifndef CMAZE_DYNAMICS_H_
#define CMAZE_DYNAMICS_H_

#include <cstdint>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "cmaze/geometry.h"
#include "cmaze/motor.h"
#include "cmaze/state.h"

// Two analytic marble engines on the tilting circular maze.
//
// The reduced engine pins the marble to the center-line of its ring and
// integrates only the angular coordinate:
//
//   theta_ddot = (g / r) (sin(gamma) cos(theta) - sin(beta) sin(theta))
//                - (g slide / r) sign(theta_dot) - roll / (m r^2) theta_dot
//
// The full engine adds radial motion between the channel walls (centrifugal
// and gravity terms, inelastic wall contact, gate passages), uses the actual
// radius rho in every term, and carries a marble spin that wall contact
// excites and that feeds back into theta_ddot. Both integrate on
// `substeps` substeps per control tick with the symmetric composition of two
// half-step semi-implicit Euler updates (kick, drift, kick), which is second
// order; the platform follows the servo model on every substep.
//
// Coulomb friction is applied implicitly on the substep's trial velocity:
// it removes up to (g slide / r) h of speed and never reverses the motion,
// so a marble whose drive is below the Coulomb level stays at rest.

namespace cmaze {

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Integration and surrogate-physics constants.
struct SimParams {
  int substeps = 10;
  double stiction_velocity = 1e-3;   // rad/s
  double wall_restitution = 0.1;
  double spin_coupling = 0.01;       // rad/s^2 per rad/s of spin
  double spin_contact_rate = 20.0;   // 1/s, wall contact drags spin
};

struct NoiseSigma {
  double theta = 1e-3;       // rad
  double theta_dot = 1e-2;   // rad/s
};

// Everything an engine needs besides state, action and friction.
struct PlantSpec {
  MazeGeometry geom;
  ServoParams servo;
  SimParams sim;
  double dt = 1.0 / 30.0;
};

// Tangential angular acceleration from gravity on the tilted platform.
// beta tilts the +x edge down, gamma the +y edge down.
double TangentialAccel(double beta, double gamma, double theta,
                       double ring_radius);

// Radial acceleration from gravity on the tilted platform (m/s^2).
double RadialGravity(double beta, double gamma, double theta);

ReducedState StepReduced(const ReducedState& x, const Action& u,
                         const FrictionParams& mu, const PlantSpec& plant);

FullState StepFull(const FullState& x, const Action& u,
                   const FrictionParams& mu, const PlantSpec& plant);

ReducedState Observe(const FullState& x);

// Full state with the marble on the ring center-line, no radial motion and
// no spin.
FullState Embed(const ReducedState& x, const MazeGeometry& geom);

// Adds independent Gaussian noise to theta and theta_dot.
ReducedState InjectNoise(const ReducedState& x, const NoiseSigma& sigma,
                         std::mt19937_64& rng);
ReducedState InjectNoise(const ReducedState& x, const NoiseSigma& sigma,
                         uint64_t seed);

// 1/2 m r^2 theta_dot^2 plus the potential of the tilt field.
double EnergyProxy(const ReducedState& x, const MazeGeometry& geom);

void to_json(nlohmann::json& j, const SimParams& s);
void from_json(const nlohmann::json& j, SimParams& s);
void to_json(nlohmann::json& j, const NoiseSigma& s);
void from_json(const nlohmann::json& j, NoiseSigma& s);

}  // namespace cmaze

#endif  // CMAZE_DYNAMICS_H_
