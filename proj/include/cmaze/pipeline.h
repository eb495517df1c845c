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


#ifndef CMAZE_PIPELINE_H_
#define CMAZE_PIPELINE_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cmaze/control.h"
#include "cmaze/estimation.h"
#include "cmaze/motor.h"
#include "cmaze/residual.h"

namespace cmaze {

// Open-loop push through a gate once the marble sits on it.
struct TransitConfig {
  double gate_tolerance = 0.05;      // rad
  double velocity_tolerance = 0.5;   // rad/s
  double duration = 0.5;             // s
  double timeout_factor = 3.0;       // give up after factor * duration
  double tilt = 0.6;                 // fraction of max_tilt
};

// Ornstein-Uhlenbeck perturbation of the motor command, used while the
// agent model is still uncalibrated. sigma = 0 disables it.
struct ExplorationConfig {
  double sigma = 0.0;
  double time_constant = 0.5;   // s
};

struct EpisodeConfig {
  int max_ticks = 1800;
  NoiseSigma noise;
  TransitConfig transit;
  ControlConfig control;
  ExplorationConfig exploration;
};

// Everything the agent runs on.
struct Agent {
  HybridModel model;
  ArxModel arx;
};

struct TickRecord {
  int tick = 0;
  ReducedState obs;
  FullState full;
  Action command;   // NMPC output (or transit tilt)
  Action motor;     // sent to the servos
  int iterations = 0;
  double cost = 0.0;
  bool fallback = false;
  bool transit = false;
  bool replanned = false;
};

struct EpisodeRecord {
  uint64_t seed = 0;
  TransitionBuffer transitions;
  std::array<int, kNumRings> ring_ticks{};
  bool solved = false;
  int wall_ticks = 0;
  bool aborted = false;
  std::string error;
  std::vector<TickRecord> ticks;

  double TotalSeconds(double dt) const { return wall_ticks * dt; }
};

// Marble on the outer ring center-line at a uniform angle, at rest, level
// platform.
FullState RandomReset(const MazeGeometry& geom, std::mt19937_64& rng);

// Tilt command that pushes the marble through the gate at `gate`.
Action TransitAction(double gate, const TransitConfig& config);

// Whether the transit controller may take over.
bool TransitReady(const MazeGeometry& geom, const ReducedState& obs,
                  const TransitConfig& config);

// Converts the model's planned action into a motor command: the model's
// predicted next platform angles are inverted through the ARX model.
Action ActuationCommand(const Agent& agent, const ReducedState& obs,
                        const Action& planned);

// Per-tick agent: gate transit when the marble sits on a gate, otherwise
// reference planning (re-planned on gate change, exhaustion or large theta
// error) and NMPC tracking, with commands passed through the inverse motor
// model. Owns its warm starts and exploration noise.
class AgentController {
 public:
  AgentController(const Agent& agent, const EpisodeConfig& config,
                  uint64_t seed);

  // Motor command for this tick. Fills the telemetry fields of `tr` when
  // given.
  Action Act(const ReducedState& obs, TickRecord* tr = nullptr);

  // Feeds the next observation so a transit can end once the ring changes.
  void Advance(const ReducedState& next_obs);

  bool in_transit() const { return transit_ticks_ >= 0; }
  // ring the current transit leaves
  int transit_ring() const { return transit_ring_; }

 private:
  const Agent& agent_;
  EpisodeConfig config_;
  std::mt19937_64 rng_;
  std::optional<ReferenceTrajectory> ref_;
  std::vector<Action> warm_;
  int ref_tick_ = 0;
  double ou_x_ = 0.0;
  double ou_y_ = 0.0;
  int transit_ticks_ = -1;
  int transit_ring_ = 0;
  double transit_gate_ = 0.0;
};

// One NMPC episode against the full engine. Transitions stored exclude
// transit ticks and ring changes. An integration failure of the real system
// ends the episode unsolved with the partial record.
EpisodeRecord RolloutEpisode(const PlantSpec& real_plant,
                             const FrictionParams& real_mu, const Agent& agent,
                             const EpisodeConfig& config, uint64_t seed);

// Seconds per ring (index 0 = outermost) from tick counts.
std::array<double, kNumRings> PerRingTimes(const EpisodeRecord& record,
                                           double dt);

struct RingSummary {
  int ring = 0;
  double mean_s = 0.0;
  double std_s = 0.0;
  int n = 0;
};

struct StageSummary {
  std::string label;
  std::array<RingSummary, kNumRings> rings;
  int solved = 0;
  int episodes = 0;
  // unsolved episodes count at the time limit
  double mean_total_s = 0.0;
};

StageSummary Summarize(const std::string& label,
                       const std::vector<EpisodeRecord>& episodes, double dt,
                       int max_ticks);

struct LearningConfig {
  PlantSpec plant;
  FrictionParams real_mu = FrictionParams::FullDefaults();
  FrictionParams agent_mu_init = FrictionParams::ReducedDefaults();
  EpisodeConfig episode;
  ExplorationConfig calibration_exploration{0.6, 0.5};
  EstimationConfig estimation;
  ResidualFitOptions residual;
  ExcitationPlan excitation = DefaultExcitation();
  int episodes_per_stage = 5;
  int gp_stages = 3;
  int eval_episodes = 10;
  uint64_t seed = 0;

  static ExcitationPlan DefaultExcitation();
};

struct StageResult {
  std::string label;
  HybridModel model;
  int training_episodes = 0;   // rollouts behind the residual heads
  std::vector<EpisodeRecord> eval;
  StageSummary summary;
};

struct LearningResult {
  ArxModel arx;
  std::vector<EpisodeRecord> calibration_episodes;
  EstimationResult estimation;
  std::vector<std::vector<EpisodeRecord>> collected;   // per GP stage
  std::vector<TransitionBuffer> gp_buffers;            // cumulative
  std::vector<StageResult> stages;
};

// Deterministic seed derivation for episode `index` of `stream`.
uint64_t DeriveSeed(uint64_t base, uint64_t stream, uint64_t index);

using ProgressFn = std::function<void(const std::string&)>;

// Model learning: calibration episodes, one CMA-ES estimate, then GP
// stages on cumulative rollouts, each stage evaluated on the same seeded
// episodes.
LearningResult RunLearning(const LearningConfig& config,
                           const ProgressFn& progress = {});

// Stage labels in order: "CMA-ES", "CMA-ES+GP1", ...
std::string StageLabel(int gp_stage);

// Agent snapshot (hybrid model and inverse motor model) as JSON.
nlohmann::json AgentToJson(const Agent& agent);
Agent AgentFromJson(const nlohmann::json& j);

// Fits the inverse motor model on excitation of the real servo.
ArxModel IdentifyMotor(const PlantSpec& plant, const ExcitationPlan& plan);

}  // namespace cmaze

#endif  // CMAZE_PIPELINE_H_
