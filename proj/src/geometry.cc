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

#include "cmaze/geometry.h"

#include <cmath>
#include <fstream>
#include <sstream>

namespace cmaze {

namespace {

// angular distances closer than this count as a tie
constexpr double kTieTolerance = 1e-12;

void Require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("MazeGeometry: " + what);
}

}  // namespace

void MazeGeometry::Validate() const {
  Require(ring_radii.size() == kNumRings, "expected 4 ring radii");
  for (size_t i = 0; i < ring_radii.size(); ++i) {
    Require(std::isfinite(ring_radii[i]) && ring_radii[i] > 0,
            "ring radii must be positive");
    if (i > 0) {
      Require(ring_radii[i] < ring_radii[i - 1],
              "ring radii must be strictly decreasing");
      Require(ring_radii[i - 1] - ring_radii[i] > 2 * channel_half_width,
              "channels overlap");
    }
  }
  Require(channel_half_width > marble_radius && marble_radius > 0,
          "channel_half_width must exceed marble_radius");
  Require(ring_radii.back() - channel_half_width > 0,
          "innermost channel crosses the center");
  Require(marble_mass > 0, "marble_mass must be positive");
  Require(max_tilt > 0 && max_tilt < kPi / 2, "max_tilt must be in (0, pi/2)");
  Require(gate_angle > 0 && gate_angle < kPi, "gate_angle must be in (0, pi)");
  Require(gates.size() == kNumRings, "expected gates for 4 rings");
  for (const auto& ring_gates : gates) {
    Require(!ring_gates.empty(), "every ring needs at least one gate");
    for (double g : ring_gates) {
      Require(std::isfinite(g) && g > -kPi && g <= kPi,
              "gate angles must lie in (-pi, pi]");
    }
  }
  for (int i = 0; i < kNumRings; ++i) {
    Require(GateHalfAngle(RingIndex{i}) > 0,
            "gate_angle too narrow for the marble");
  }
}

double MazeGeometry::CrossingRadius(RingIndex ring) const {
  const int i = ring.value;
  const size_t n = ring_radii.size();
  // wall thickness between channel i and its inner neighbour; the innermost
  // ring reuses the spacing of the ring outside it
  const double spacing = (static_cast<size_t>(i) + 1 < n)
                             ? ring_radii[i] - ring_radii[i + 1]
                             : ring_radii[i - 1] - ring_radii[i];
  const double wall = spacing - 2 * channel_half_width;
  return ring_radii[i] - channel_half_width - 0.5 * wall;
}

double MazeGeometry::GateHalfAngle(RingIndex ring) const {
  const double inner_wall = Radius(ring) - channel_half_width;
  return 0.5 * gate_angle - marble_radius / inner_wall;
}

double WrapAngle(double theta) {
  if (!std::isfinite(theta)) {
    throw std::domain_error("WrapAngle: non-finite angle");
  }
  double r = std::remainder(theta, 2 * kPi);
  if (r <= -kPi) r += 2 * kPi;
  if (r > kPi) r -= 2 * kPi;
  return r;
}

double NearestGate(const MazeGeometry& geom, RingIndex ring, double theta) {
  if (ring.IsGoal() || ring.value < 0 ||
      ring.value >= static_cast<int>(geom.gates.size())) {
    throw NoGateError("NearestGate: ring " + std::to_string(ring.value) +
                      " has no gates");
  }
  const auto& gates = geom.gates[ring.value];
  if (gates.empty()) throw NoGateError("NearestGate: empty gate set");

  double best = gates.front();
  double best_diff = WrapAngle(best - theta);
  for (size_t i = 1; i < gates.size(); ++i) {
    const double diff = WrapAngle(gates[i] - theta);
    const double gap = std::abs(diff) - std::abs(best_diff);
    if (gap < -kTieTolerance || (std::abs(gap) <= kTieTolerance &&
                                 diff > 0 && best_diff <= 0)) {
      best = gates[i];
      best_diff = diff;
    }
  }
  return best;
}

std::vector<GateWaypoint> PlanGateSequence(const MazeGeometry& geom,
                                           RingIndex start, double theta) {
  if (start.IsGoal()) {
    throw NoGateError("PlanGateSequence: already at the goal");
  }
  std::vector<GateWaypoint> plan;
  double heading = theta;
  for (int r = start.value; r < kGoalRing; ++r) {
    const double gate = NearestGate(geom, RingIndex{r}, heading);
    plan.push_back({RingIndex{r}, gate});
    heading = gate;
  }
  return plan;
}

void to_json(nlohmann::json& j, const MazeGeometry& g) {
  j = nlohmann::json{{"ring_radii", g.ring_radii},
                     {"channel_half_width", g.channel_half_width},
                     {"gates", g.gates},
                     {"marble_radius", g.marble_radius},
                     {"marble_mass", g.marble_mass},
                     {"max_tilt", g.max_tilt},
                     {"gate_angle", g.gate_angle}};
}

void from_json(const nlohmann::json& j, MazeGeometry& g) {
  g.ring_radii = j.value("ring_radii", g.ring_radii);
  g.channel_half_width = j.value("channel_half_width", g.channel_half_width);
  g.gates = j.value("gates", g.gates);
  g.marble_radius = j.value("marble_radius", g.marble_radius);
  g.marble_mass = j.value("marble_mass", g.marble_mass);
  g.max_tilt = j.value("max_tilt", g.max_tilt);
  g.gate_angle = j.value("gate_angle", g.gate_angle);
}

MazeGeometry LoadGeometry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open geometry file: " + path);
  MazeGeometry geom = nlohmann::json::parse(in).get<MazeGeometry>();
  geom.Validate();
  return geom;
}

}  // namespace cmaze
