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


#include "cmaze/pipeline.h"

#include <cmath>
#include <optional>

namespace cmaze {

namespace {

uint64_t SplitMix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr uint64_t kCalibrationStream = 1;
constexpr uint64_t kEvalStream = 2;
constexpr uint64_t kCollectStream = 100;

void Report(const ProgressFn& progress, const std::string& msg) {
  if (progress) progress(msg);
}

std::vector<EpisodeRecord> RunEpisodes(const LearningConfig& config,
                                       const Agent& agent,
                                       const EpisodeConfig& episode,
                                       uint64_t stream, int count) {
  std::vector<EpisodeRecord> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(RolloutEpisode(config.plant, config.real_mu, agent, episode,
                                 DeriveSeed(config.seed, stream, i)));
    for (auto& t : out.back().transitions.items) t.episode = i;
  }
  return out;
}

}  // namespace

uint64_t DeriveSeed(uint64_t base, uint64_t stream, uint64_t index) {
  return SplitMix(SplitMix(SplitMix(base) ^ stream) ^ index);
}

FullState RandomReset(const MazeGeometry& geom, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  FullState s;
  s.theta = WrapAngle(angle(rng));
  s.ring = RingIndex{0};
  s.rho = geom.Radius(s.ring);
  return s;
}

Action TransitAction(double gate, const TransitConfig& config) {
  return Action{-config.tilt * std::cos(gate), -config.tilt * std::sin(gate)}
      .Clamped();
}

bool TransitReady(const MazeGeometry& geom, const ReducedState& obs,
                  const TransitConfig& config) {
  if (obs.ring.IsGoal()) return false;
  const double gate = NearestGate(geom, obs.ring, obs.theta);
  return std::abs(WrapAngle(obs.theta - gate)) < config.gate_tolerance &&
         std::abs(obs.theta_dot) < config.velocity_tolerance;
}

Action ActuationCommand(const Agent& agent, const ReducedState& obs,
                        const Action& planned) {
  const ReducedState predicted = HybridStep(agent.model, obs, planned);
  return ImmInvert(agent.arx, {obs.beta, obs.gamma},
                   {predicted.beta, predicted.gamma});
}

AgentController::AgentController(const Agent& agent,
                                 const EpisodeConfig& config, uint64_t seed)
    : agent_(agent), config_(config), rng_(seed) {}

Action AgentController::Act(const ReducedState& obs, TickRecord* tr) {
  TickRecord scratch;
  if (tr == nullptr) tr = &scratch;
  const MazeGeometry& geom = agent_.model.plant.geom;
  const ControlConfig& ctl = config_.control;
  if (obs.ring.IsGoal()) return {};

  if (transit_ticks_ < 0 && TransitReady(geom, obs, config_.transit)) {
    transit_ticks_ = 0;
    transit_ring_ = obs.ring.value;
    transit_gate_ = NearestGate(geom, obs.ring, obs.theta);
    ref_.reset();
    warm_.clear();
  }
  if (transit_ticks_ >= 0) {
    tr->transit = true;
    tr->command = TransitAction(transit_gate_, config_.transit);
    tr->motor = tr->command;
    return tr->motor;
  }

  const ReducedState target = GateTarget(geom, obs);
  const bool stale =
      !ref_ || ref_->ring != obs.ring || ref_->gate != target.theta ||
      ref_tick_ >= ref_->horizon() ||
      std::abs(WrapAngle(obs.theta - ref_->StateAt(ref_tick_).theta)) >
          ctl.replan_theta_error;
  if (stale) {
    std::vector<Action> init;
    if (ref_ && ref_->ring == obs.ring && ref_->gate == target.theta) {
      for (int j = ref_tick_; j < ref_->horizon(); ++j) init.push_back(ref_->u[j]);
    }
    IlqrOptions opts;
    opts.max_iterations = ctl.plan_iterations;
    try {
      ref_ = IlqrPlan(agent_.model, obs, target, ctl.plan_horizon, ctl.cost,
                      init, opts);
      tr->replanned = true;
    } catch (const IlqrError&) {
      ref_.reset();
    }
    ref_tick_ = 0;
    warm_.clear();
  }
  if (ref_) {
    const NmpcResult r = NmpcTick(agent_.model, obs, *ref_, ref_tick_,
                                  ctl.track_horizon, ctl.cost, warm_,
                                  ctl.track_iterations);
    tr->command = r.action;
    tr->iterations = r.iterations;
    tr->cost = r.cost;
    tr->fallback = r.fallback;
    warm_ = r.warm;
    ++ref_tick_;
  } else {
    tr->command = {};
    tr->fallback = true;
  }
  Action motor = ActuationCommand(agent_, obs, tr->command);
  const ExplorationConfig& ex = config_.exploration;
  if (ex.sigma > 0) {
    const double dt = agent_.model.plant.dt;
    const double decay = std::exp(-dt / ex.time_constant);
    const double scale = ex.sigma * std::sqrt(1.0 - decay * decay);
    std::normal_distribution<double> normal(0.0, 1.0);
    ou_x_ = decay * ou_x_ + scale * normal(rng_);
    ou_y_ = decay * ou_y_ + scale * normal(rng_);
    motor = Action{motor.ux + ou_x_, motor.uy + ou_y_}.Clamped();
  }
  tr->motor = motor;
  return motor;
}

void AgentController::Advance(const ReducedState& next_obs) {
  if (transit_ticks_ < 0) return;
  ++transit_ticks_;
  const double dt = agent_.model.plant.dt;
  const int min_ticks =
      static_cast<int>(std::lround(config_.transit.duration / dt));
  const int max_ticks = static_cast<int>(std::lround(
      config_.transit.timeout_factor * config_.transit.duration / dt));
  const bool crossed = next_obs.ring.value > transit_ring_;
  if ((crossed && transit_ticks_ >= min_ticks) || transit_ticks_ >= max_ticks) {
    transit_ticks_ = -1;
  }
}

EpisodeRecord RolloutEpisode(const PlantSpec& real_plant,
                             const FrictionParams& real_mu, const Agent& agent,
                             const EpisodeConfig& config, uint64_t seed) {
  EpisodeRecord rec;
  rec.seed = seed;
  std::mt19937_64 rng(seed);
  AgentController controller(agent, config, DeriveSeed(seed, 7, 0));

  FullState full = RandomReset(real_plant.geom, rng);
  ReducedState obs = InjectNoise(Observe(full), config.noise, rng);
  for (int tick = 0; tick < config.max_ticks; ++tick) {
    if (full.ring.IsGoal()) break;
    TickRecord tr;
    tr.tick = tick;
    tr.obs = obs;
    tr.full = full;
    const Action motor = controller.Act(obs, &tr);
    ++rec.ring_ticks[tr.transit ? controller.transit_ring() : obs.ring.value];

    FullState next;
    try {
      next = StepFull(full, motor, real_mu, real_plant);
    } catch (const IntegrationError& e) {
      rec.aborted = true;
      rec.error = e.what();
      rec.ticks.push_back(tr);
      rec.wall_ticks = tick + 1;
      break;
    }
    const ReducedState next_obs = InjectNoise(Observe(next), config.noise, rng);
    if (!tr.transit && next_obs.ring == obs.ring) {
      rec.transitions.items.push_back({obs, motor, next_obs, 0, tick});
    }
    controller.Advance(next_obs);
    rec.ticks.push_back(tr);
    rec.wall_ticks = tick + 1;
    full = next;
    obs = next_obs;
  }
  rec.solved = full.ring.IsGoal();
  return rec;
}

std::array<double, kNumRings> PerRingTimes(const EpisodeRecord& record,
                                           double dt) {
  std::array<double, kNumRings> out{};
  for (int i = 0; i < kNumRings; ++i) out[i] = record.ring_ticks[i] * dt;
  return out;
}

StageSummary Summarize(const std::string& label,
                       const std::vector<EpisodeRecord>& episodes, double dt,
                       int max_ticks) {
  StageSummary s;
  s.label = label;
  s.episodes = static_cast<int>(episodes.size());
  for (int r = 0; r < kNumRings; ++r) {
    RingSummary& rs = s.rings[r];
    rs.ring = r;
    rs.n = s.episodes;
    if (episodes.empty()) continue;
    double sum = 0.0;
    double sq = 0.0;
    for (const auto& e : episodes) {
      const double t = e.ring_ticks[r] * dt;
      sum += t;
      sq += t * t;
    }
    rs.mean_s = sum / rs.n;
    rs.std_s = rs.n > 1 ? std::sqrt(std::max(0.0, (sq - rs.n * rs.mean_s * rs.mean_s) /
                                                      (rs.n - 1)))
                        : 0.0;
  }
  double total = 0.0;
  for (const auto& e : episodes) {
    if (e.solved) ++s.solved;
    total += (e.solved ? e.wall_ticks : max_ticks) * dt;
  }
  s.mean_total_s = episodes.empty() ? 0.0 : total / s.episodes;
  return s;
}

ExcitationPlan LearningConfig::DefaultExcitation() {
  ExcitationPlan p;
  p.x_axis = {{0.6, 0.4, 0.0}, {0.4, 1.7, 0.5}};
  p.y_axis = {{0.6, 0.55, 1.0}, {0.4, 2.3, 2.0}};
  p.duration = 20.0;
  return p;
}

std::string StageLabel(int gp_stage) {
  return gp_stage == 0 ? "CMA-ES" : "CMA-ES+GP" + std::to_string(gp_stage);
}

nlohmann::json AgentToJson(const Agent& agent) {
  return {{"model", HybridToJson(agent.model)}, {"arx", agent.arx}};
}

Agent AgentFromJson(const nlohmann::json& j) {
  return {HybridFromJson(j.at("model")), j.at("arx").get<ArxModel>()};
}

ArxModel IdentifyMotor(const PlantSpec& plant, const ExcitationPlan& plan) {
  const int substeps = plant.sim.substeps;
  const ServoParams servo = plant.servo;
  PlatformPlant sys = [substeps, servo](PlatformAngles a, const Action& u,
                                        double dt) {
    for (int i = 0; i < substeps; ++i) a = ServoStep(a, u, dt / substeps, servo);
    return a;
  };
  ExcitationPlan p = plan;
  p.dt = plant.dt;
  return FitArx(ExciteAndCollect(sys, p));
}

LearningResult RunLearning(const LearningConfig& config,
                           const ProgressFn& progress) {
  LearningResult out;
  const double dt = config.plant.dt;
  const int max_ticks = config.episode.max_ticks;
  out.arx = IdentifyMotor(config.plant, config.excitation);

  // calibration data under the uncalibrated engine, with exploration
  Agent agent{HybridModel::EngineOnly(config.plant, config.agent_mu_init),
              out.arx};
  EpisodeConfig explore = config.episode;
  explore.exploration = config.calibration_exploration;
  out.calibration_episodes = RunEpisodes(config, agent, explore,
                                         kCalibrationStream,
                                         config.episodes_per_stage);
  TransitionBuffer calib;
  for (const auto& e : out.calibration_episodes) calib.Append(e.transitions);
  // sparse rings cannot be fitted reliably
  TransitionBuffer usable;
  for (const auto& [ring, count] : calib.CountByRing()) {
    if (count >= config.estimation.min_transitions_per_ring) {
      usable.Append(calib.OfRing(ring));
    }
  }
  Report(progress, "calibration transitions: " + std::to_string(usable.size()));
  out.estimation =
      EstimateParameters(usable, config.agent_mu_init, config.plant,
                         config.estimation);
  Report(progress, "CMA-ES objective " + std::to_string(out.estimation.objective_init) +
                       " -> " + std::to_string(out.estimation.objective_best));

  agent.model = HybridModel::EngineOnly(config.plant, out.estimation.mu);
  TransitionBuffer cumulative;
  for (int stage = 0; stage <= config.gp_stages; ++stage) {
    if (stage > 0) {
      auto collected = RunEpisodes(config, agent, config.episode,
                                   kCollectStream + stage,
                                   config.episodes_per_stage);
      for (const auto& e : collected) cumulative.Append(e.transitions);
      out.collected.push_back(std::move(collected));
      out.gp_buffers.push_back(cumulative);
      agent.model = FitResidual(cumulative, out.estimation.mu, config.plant,
                                config.residual);
    }
    StageResult sr;
    sr.label = StageLabel(stage);
    sr.model = agent.model;
    sr.training_episodes = stage * config.episodes_per_stage;
    sr.eval = RunEpisodes(config, agent, config.episode, kEvalStream,
                          config.eval_episodes);
    sr.summary = Summarize(sr.label, sr.eval, dt, max_ticks);
    Report(progress, sr.label + ": solved " + std::to_string(sr.summary.solved) +
                         "/" + std::to_string(sr.summary.episodes) +
                         ", mean total " + std::to_string(sr.summary.mean_total_s) +
                         " s");
    out.stages.push_back(std::move(sr));
  }
  return out;
}

}  // namespace cmaze
