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


#include "cmaze/config.h"

#include <fstream>

namespace cmaze {

using nlohmann::json;

namespace {

json FrictionJson(const FrictionParams& mu) { return mu; }

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

json ExcitationJson(const ExcitationPlan& p) {
  auto axis = [](const std::vector<Sinusoid>& s) {
    json a = json::array();
    for (const auto& c : s) {
      a.push_back({{"amplitude", c.amplitude},
                   {"frequency", c.frequency},
                   {"phase", c.phase}});
    }
    return a;
  };
  return {{"x_axis", axis(p.x_axis)},
          {"y_axis", axis(p.y_axis)},
          {"duration", p.duration}};
}

ExcitationPlan ExcitationFromJson(const json& j, ExcitationPlan p) {
  auto axis = [](const json& a) {
    std::vector<Sinusoid> s;
    for (const auto& c : a) {
      s.push_back({c.value("amplitude", 0.0), c.value("frequency", 0.0),
                   c.value("phase", 0.0)});
    }
    return s;
  };
  if (j.contains("x_axis")) p.x_axis = axis(j.at("x_axis"));
  if (j.contains("y_axis")) p.y_axis = axis(j.at("y_axis"));
  p.duration = j.value("duration", p.duration);
  return p;
}

}  // namespace

void ExperimentConfig::Validate() const {
  const LearningConfig& l = learning;
  try {
    l.plant.geom.Validate();
    l.plant.servo.Validate();
    l.real_mu.Validate();
    l.agent_mu_init.Validate();
    l.episode.control.cost.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(l.plant.dt > 0)) throw ConfigError("config key 'dt' must be positive");
  if (l.plant.sim.substeps < 1) throw ConfigError("config key 'substeps' must be >= 1");
  if (l.episode.max_ticks < 0) throw ConfigError("config key 'max_ticks' must be >= 0");
  if (l.episodes_per_stage < 1 || l.eval_episodes < 1 || l.gp_stages < 0) {
    throw ConfigError("config key 'stages': episode counts must be positive");
  }
  const ControlConfig& c = l.episode.control;
  if (c.plan_horizon < 1 || c.track_horizon < 1 || c.plan_iterations < 1 ||
      c.track_iterations < 1) {
    throw ConfigError("config key 'control': horizons and budgets must be >= 1");
  }
  if (l.estimation.cmaes.population != 0 && l.estimation.cmaes.population < 4) {
    throw ConfigError("config key 'estimation.population' must be >= 4");
  }
  if (l.episode.noise.theta < 0 || l.episode.noise.theta_dot < 0) {
    throw ConfigError("config key 'noise' must be non-negative");
  }
  if (server.capacity < 1) throw ConfigError("config key 'server.capacity' must be >= 1");
}

json ConfigToJson(const ExperimentConfig& config) {
  const LearningConfig& l = config.learning;
  const EpisodeConfig& e = l.episode;
  return {
      {"seed", l.seed},
      {"output_dir", config.output_dir},
      {"geometry", l.plant.geom},
      {"servo", l.plant.servo},
      {"sim", l.plant.sim},
      {"dt", l.plant.dt},
      {"friction_full", FrictionJson(l.real_mu)},
      {"friction_red", FrictionJson(l.agent_mu_init)},
      {"noise", e.noise},
      {"control", e.control},
      {"transit",
       {{"gate_tolerance", e.transit.gate_tolerance},
        {"velocity_tolerance", e.transit.velocity_tolerance},
        {"duration", e.transit.duration},
        {"timeout_factor", e.transit.timeout_factor},
        {"tilt", e.transit.tilt}}},
      {"exploration",
       {{"sigma", l.calibration_exploration.sigma},
        {"time_constant", l.calibration_exploration.time_constant}}},
      {"stages",
       {{"episodes_per_stage", l.episodes_per_stage},
        {"gp_stages", l.gp_stages},
        {"eval_episodes", l.eval_episodes},
        {"max_ticks", e.max_ticks}}},
      {"estimation",
       {{"population", l.estimation.cmaes.population},
        {"sigma0", l.estimation.cmaes.sigma0},
        {"max_evals", l.estimation.cmaes.max_evals},
        {"f_tol", l.estimation.cmaes.f_tol},
        {"x_tol", l.estimation.cmaes.x_tol},
        {"lower", l.estimation.cmaes.lower},
        {"upper", l.estimation.cmaes.upper},
        {"min_transitions_per_ring", l.estimation.min_transitions_per_ring}}},
      {"residual",
       {{"starts", l.residual.gp.starts},
        {"iterations", l.residual.gp.iterations},
        {"min_noise", l.residual.gp.min_noise},
        {"min_samples", l.residual.min_samples}}},
      {"excitation", ExcitationJson(l.excitation)},
      {"server",
       {{"address", config.server.address},
        {"port", config.server.port},
        {"capacity", config.server.capacity},
        {"log_dir", config.server.log_dir}}},
  };
}

ExperimentConfig ConfigFromJson(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  LearningConfig& l = c.learning;
  EpisodeConfig& e = l.episode;
  Read(j, "seed", l.seed);
  Read(j, "output_dir", c.output_dir);
  Read(j, "geometry", l.plant.geom);
  Read(j, "servo", l.plant.servo);
  Read(j, "sim", l.plant.sim);
  Read(j, "dt", l.plant.dt);
  Read(j, "friction_full", l.real_mu);
  Read(j, "friction_red", l.agent_mu_init);
  Read(j, "noise", e.noise);
  Read(j, "control", e.control);
  // the servo tilt limit follows the maze's
  l.plant.servo.max_tilt = l.plant.geom.max_tilt;
  if (j.contains("transit")) {
    const json& t = j.at("transit");
    Read(t, "gate_tolerance", e.transit.gate_tolerance);
    Read(t, "velocity_tolerance", e.transit.velocity_tolerance);
    Read(t, "duration", e.transit.duration);
    Read(t, "timeout_factor", e.transit.timeout_factor);
    Read(t, "tilt", e.transit.tilt);
  }
  if (j.contains("exploration")) {
    const json& x = j.at("exploration");
    Read(x, "sigma", l.calibration_exploration.sigma);
    Read(x, "time_constant", l.calibration_exploration.time_constant);
  }
  if (j.contains("stages")) {
    const json& s = j.at("stages");
    Read(s, "episodes_per_stage", l.episodes_per_stage);
    Read(s, "gp_stages", l.gp_stages);
    Read(s, "eval_episodes", l.eval_episodes);
    Read(s, "max_ticks", e.max_ticks);
  }
  if (j.contains("estimation")) {
    const json& s = j.at("estimation");
    CmaEsConfig& m = l.estimation.cmaes;
    Read(s, "population", m.population);
    Read(s, "sigma0", m.sigma0);
    Read(s, "max_evals", m.max_evals);
    Read(s, "f_tol", m.f_tol);
    Read(s, "x_tol", m.x_tol);
    Read(s, "lower", m.lower);
    Read(s, "upper", m.upper);
    Read(s, "min_transitions_per_ring", l.estimation.min_transitions_per_ring);
  }
  l.estimation.cmaes.seed = l.seed;
  if (j.contains("residual")) {
    const json& s = j.at("residual");
    Read(s, "starts", l.residual.gp.starts);
    Read(s, "iterations", l.residual.gp.iterations);
    Read(s, "min_noise", l.residual.gp.min_noise);
    Read(s, "min_samples", l.residual.min_samples);
  }
  if (j.contains("excitation")) {
    l.excitation = ExcitationFromJson(j.at("excitation"), l.excitation);
  }
  if (j.contains("server")) {
    const json& s = j.at("server");
    Read(s, "address", c.server.address);
    Read(s, "port", c.server.port);
    Read(s, "capacity", c.server.capacity);
    Read(s, "log_dir", c.server.log_dir);
  }
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse config file " + path + ": " + e.what());
  }
  ExperimentConfig c = ConfigFromJson(j);
  c.Validate();
  return c;
}

}  // namespace cmaze
