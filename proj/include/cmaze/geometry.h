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

#ifndef CMAZE_GEOMETRY_H_
#define CMAZE_GEOMETRY_H_

#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace cmaze {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kGravity = 9.81;
inline constexpr int kNumRings = 4;
// ring index of the maze center
inline constexpr int kGoalRing = kNumRings;

// Thrown when a query has no gate to answer with (goal ring, empty ring).
class NoGateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Discrete ring index: 0 is the outermost ring, kGoalRing the center.
struct RingIndex {
  int value = 0;

  constexpr bool IsGoal() const { return value >= kGoalRing; }
  friend constexpr bool operator==(RingIndex, RingIndex) = default;
  friend constexpr auto operator<=>(RingIndex, RingIndex) = default;
};

// Layout of the circular maze. Radii are marble center-line radii of each
// annular channel, outermost first. All lengths in meters.
struct MazeGeometry {
  std::vector<double> ring_radii = {0.10, 0.08, 0.06, 0.04};
  double channel_half_width = 0.008;
  // gate angles per ring; the innermost ring's gates open onto the center
  std::vector<std::vector<double>> gates = {
      {0.0, kPi}, {kPi / 2, -kPi / 2}, {0.0, kPi}, {kPi / 2, -kPi / 2}};
  double marble_radius = 0.004;
  double marble_mass = 0.003;
  double max_tilt = 0.15;
  // angular width of every gate opening (rad)
  double gate_angle = 0.38;

  // Throws std::invalid_argument naming the first violated invariant.
  void Validate() const;

  double Radius(RingIndex ring) const { return ring_radii.at(ring.value); }

  // Radius at which the marble is considered to have left `ring` inward:
  // the middle of the wall separating it from the next channel.
  double CrossingRadius(RingIndex ring) const;

  // Allowed marble-center interval inside the channel of `ring`.
  double MinRho(RingIndex ring) const {
    return Radius(ring) - channel_half_width + marble_radius;
  }
  double MaxRho(RingIndex ring) const {
    return Radius(ring) + channel_half_width - marble_radius;
  }

  // Largest |theta - gate| for which the marble fits through a gate of
  // `ring`.
  double GateHalfAngle(RingIndex ring) const;
};

// Maps theta onto (-pi, pi]. Throws std::domain_error for non-finite input.
double WrapAngle(double theta);

// Gate of `ring` closest to theta in wrapped angular distance. Ties go to
// the gate reached by a counterclockwise (positive) move.
double NearestGate(const MazeGeometry& geom, RingIndex ring, double theta);

struct GateWaypoint {
  RingIndex ring;
  double gate = 0.0;
};

// Greedy chain: nearest gate of the start ring, then from each chosen gate
// the nearest gate of the next ring, down to the goal.
std::vector<GateWaypoint> PlanGateSequence(const MazeGeometry& geom,
                                           RingIndex start, double theta);

void to_json(nlohmann::json& j, const MazeGeometry& g);
void from_json(const nlohmann::json& j, MazeGeometry& g);

// Reads a geometry file (JSON object with MazeGeometry keys, SI units).
// Missing keys keep their defaults.
MazeGeometry LoadGeometry(const std::string& path);

}  // namespace cmaze

#endif  // CMAZE_GEOMETRY_H_
