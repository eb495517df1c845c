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


// Experiment runner.
//
//   cmaze calibrate  --config cfg.json --out out/
//   cmaze learn      --config cfg.json --seed 0 --out out/
//   cmaze eval       --out out/ --stage CMA-ES+GP3
//   cmaze play-agent --out out/ --stage CMA-ES+GP3 [--headless]
//   cmaze serve      --config cfg.json [--stage LABEL]
//   cmaze export     --config cfg.json --out out/
//
// Exit codes: 0 success, 1 usage, 2 runtime failure.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "cmaze/calibration.h"
#include "cmaze/config.h"
#include "cmaze/pipeline.h"
#include "cmaze/trajectory_io.h"
#include "cmaze/ws_server.h"

namespace {

namespace fs = std::filesystem;
using cmaze::ExperimentConfig;
using nlohmann::json;

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct Flags {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
  std::string stage = "CMA-ES+GP3";
  bool headless = false;
  bool dry_run = false;
};

ExperimentConfig Resolve(const Flags& f) {
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : cmaze::LoadConfig(f.config);
  if (f.seed) {
    c.learning.seed = *f.seed;
    c.learning.estimation.cmaes.seed = *f.seed;
  }
  if (!f.out.empty()) c.output_dir = f.out;
  c.Validate();
  return c;
}

std::string Lines(const std::vector<json>& records) {
  std::string s;
  for (const auto& r : records) s += r.dump() + "\n";
  return s;
}

std::string StageDir(const std::string& label) {
  std::string d = "stage_" + label;
  for (char& ch : d) {
    if (ch == '+') ch = '_';
  }
  return d;
}

cmaze::Agent LoadAgent(const ExperimentConfig& c, const std::string& stage) {
  const fs::path path = fs::path(c.output_dir) / StageDir(stage) / "model.json";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path.string());
  return cmaze::AgentFromJson(json::parse(in));
}

void Log(const std::string& msg) { std::cerr << msg << std::endl; }

int Calibrate(const Flags& f) {
  const ExperimentConfig c = Resolve(f);
  if (f.dry_run) return 0;
  const auto& l = c.learning;
  cmaze::CalibrationConfig cal;
  cal.estimation = l.estimation;
  cal.seed = l.seed;
  const cmaze::CalibrationReport rep = cmaze::RunCalibration(
      l.plant, l.real_mu, l.agent_mu_init, l.episode.noise, cal);
  const fs::path dir = fs::path(c.output_dir) / "calibration";
  const json report = {{"mu_init", l.agent_mu_init},
                       {"mu_star", rep.estimation.mu},
                       {"objective_init", rep.estimation.objective_init},
                       {"objective_best", rep.estimation.objective_best},
                       {"evaluations", rep.estimation.search.evaluations},
                       {"stop_reason", rep.estimation.search.stop_reason},
                       {"train_transitions", rep.train.size()},
                       {"holdout_transitions", rep.holdout.size()},
                       {"rmse_before", rep.rmse_before},
                       {"rmse_after", rep.rmse_after}};
  cmaze::WriteFile((dir / "report.json").string(), report.dump(2) + "\n");
  std::ostringstream hist;
  cmaze::WriteCmaEsHistoryCsv(hist, rep.estimation.search);
  cmaze::WriteFile((dir / "cmaes_history.csv").string(), hist.str());
  std::ostringstream cmp;
  cmp << "t,theta_real,theta_optimized,theta_default\n";
  const auto& t = rep.comparison;
  for (size_t i = 0; i < t.t.size(); ++i) {
    cmp << t.t[i] << ',' << t.theta_real[i] << ',' << t.theta_optimized[i] << ','
        << t.theta_default[i] << '\n';
  }
  cmaze::WriteFile((dir / "comparison.csv").string(), cmp.str());
  std::cout << "held-out one-step theta RMSE: " << rep.rmse_before << " -> "
            << rep.rmse_after << " rad\n";
  return 0;
}

void WriteStage(const fs::path& dir, const cmaze::StageResult& s,
                const cmaze::ArxModel& arx, double dt) {
  cmaze::WriteFile((dir / "model.json").string(),
                   cmaze::AgentToJson({s.model, arx}).dump() + "\n");
  std::vector<json> eps;
  for (size_t i = 0; i < s.eval.size(); ++i) {
    eps.push_back(cmaze::EpisodeSummaryJson(s.eval[i], dt));
    std::ostringstream csv;
    cmaze::WriteTrajectoryCsv(csv, s.eval[i], dt);
    cmaze::WriteFile((dir / ("episode_" + std::to_string(i) + ".csv")).string(),
                     csv.str());
  }
  cmaze::WriteFile((dir / "episodes.jsonl").string(), Lines(eps));
}

int Learn(const Flags& f) {
  const ExperimentConfig c = Resolve(f);
  if (f.dry_run) return 0;
  const double dt = c.learning.plant.dt;
  const cmaze::LearningResult r = cmaze::RunLearning(c.learning, Log);
  const fs::path out(c.output_dir);
  std::vector<json> summary;
  std::vector<cmaze::StageSummary> stages;
  for (const auto& s : r.stages) {
    WriteStage(out / StageDir(s.label), s, r.arx, dt);
    for (auto& rec : cmaze::StageSummaryRecords(s.summary)) summary.push_back(rec);
    stages.push_back(s.summary);
  }
  cmaze::WriteFile((out / "summary.jsonl").string(), Lines(summary));
  cmaze::WriteFile((out / "summary.txt").string(), cmaze::SummaryTable(stages));
  std::ostringstream hist;
  cmaze::WriteCmaEsHistoryCsv(hist, r.estimation.search);
  cmaze::WriteFile((out / "cmaes_history.csv").string(), hist.str());
  cmaze::WriteFile((out / "manifest.json").string(),
                   json{{"config", cmaze::ConfigToJson(c)},
                        {"mu_star", r.estimation.mu},
                        {"arx", r.arx},
                        {"stages", [&] {
                           json a = json::array();
                           for (const auto& s : r.stages) {
                             a.push_back({{"label", s.label},
                                          {"training_episodes", s.training_episodes},
                                          {"eval_seeds", [&] {
                                             json seeds = json::array();
                                             for (const auto& e : s.eval) seeds.push_back(e.seed);
                                             return seeds;
                                           }()}});
                           }
                           return a;
                         }()}}
                       .dump(2) + "\n");
  std::cout << cmaze::SummaryTable(stages);
  return 0;
}

int Eval(const Flags& f) {
  const ExperimentConfig c = Resolve(f);
  const cmaze::Agent agent = LoadAgent(c, f.stage);
  if (f.dry_run) return 0;
  const auto& l = c.learning;
  std::vector<cmaze::EpisodeRecord> eps;
  std::vector<json> lines;
  for (int i = 0; i < l.eval_episodes; ++i) {
    eps.push_back(cmaze::RolloutEpisode(l.plant, l.real_mu, agent, l.episode,
                                        cmaze::DeriveSeed(l.seed, 2, i)));
    lines.push_back(cmaze::EpisodeSummaryJson(eps.back(), l.plant.dt));
  }
  const auto s = cmaze::Summarize(f.stage, eps, l.plant.dt, l.episode.max_ticks);
  const fs::path dir = fs::path(c.output_dir) / "eval" / StageDir(f.stage);
  cmaze::WriteFile((dir / "episodes.jsonl").string(), Lines(lines));
  cmaze::WriteFile((dir / "summary.jsonl").string(),
                   Lines(cmaze::StageSummaryRecords(s)));
  cmaze::WriteFile((dir / "summary.txt").string(), cmaze::SummaryTable({s}));
  std::cout << cmaze::SummaryTable({s});
  return 0;
}

std::atomic<bool> g_stop{false};

int PlayAgent(const Flags& f) {
  const ExperimentConfig c = Resolve(f);
  auto agent = std::make_shared<const cmaze::Agent>(LoadAgent(c, f.stage));
  if (f.dry_run) return 0;
  const auto& l = c.learning;
  const uint64_t seed = cmaze::DeriveSeed(l.seed, 2, 0);
  const fs::path dir = fs::path(c.output_dir) / "play";
  if (f.headless) {
    const auto rec = cmaze::RolloutEpisode(l.plant, l.real_mu, *agent, l.episode, seed);
    std::ostringstream csv;
    cmaze::WriteTrajectoryCsv(csv, rec, l.plant.dt);
    cmaze::WriteFile((dir / "trajectory.csv").string(), csv.str());
    std::cout << cmaze::EpisodeSummaryJson(rec, l.plant.dt).dump() << "\n";
    return 0;
  }
  // live: stream frames on stdout at the control rate
  cmaze::SessionOptions opts{l.plant, l.real_mu, l.episode,
                             (dir / "session.jsonl").string()};
  cmaze::Session session("play", cmaze::SessionMode::kAgent, seed, opts, agent);
  std::cout << session.CurrentStateFrame().dump() << "\n";
  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(l.plant.dt));
  auto deadline = std::chrono::steady_clock::now();
  while (session.status() == cmaze::SessionStatus::kRunning && !g_stop) {
    deadline += period;
    std::this_thread::sleep_until(deadline);
    for (const auto& frame : session.Tick()) std::cout << frame.dump() << "\n";
    std::cout.flush();
  }
  return 0;
}

int Serve(const Flags& f) {
  const ExperimentConfig c = Resolve(f);
  std::shared_ptr<const cmaze::Agent> agent;
  const fs::path model = fs::path(c.output_dir) / StageDir(f.stage) / "model.json";
  if (fs::exists(model)) {
    agent = std::make_shared<const cmaze::Agent>(LoadAgent(c, f.stage));
  }
  if (f.dry_run) return 0;
  const auto& l = c.learning;
  cmaze::ServerConfig server = c.server;
  if (!server.log_dir.empty() && fs::path(server.log_dir).is_relative()) {
    server.log_dir = (fs::path(c.output_dir) / server.log_dir).string();
  }
  cmaze::WsServer ws(server, {l.plant, l.real_mu, l.episode, ""}, agent);
  ws.Start();
  std::cerr << "listening on ws://" << server.address << ":" << ws.port()
            << (agent ? " (agent sessions enabled)" : "") << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  ws.Stop();
  return 0;
}

int Export(const Flags& f) {
  const ExperimentConfig c = Resolve(f);
  if (f.dry_run) return 0;
  cmaze::WriteFile((fs::path(c.output_dir) / "config.json").string(),
                   cmaze::ConfigToJson(c).dump(2) + "\n");
  const cmaze::ArxModel arx = cmaze::IdentifyMotor(c.learning.plant, c.learning.excitation);
  cmaze::ExcitationPlan plan = c.learning.excitation;
  plan.dt = c.learning.plant.dt;
  const int substeps = c.learning.plant.sim.substeps;
  const cmaze::ServoParams servo = c.learning.plant.servo;
  const auto data = cmaze::ExciteAndCollect(
      [&](cmaze::PlatformAngles a, const cmaze::Action& u, double dt) {
        for (int i = 0; i < substeps; ++i) a = cmaze::ServoStep(a, u, dt / substeps, servo);
        return a;
      },
      plan);
  std::ostringstream csv;
  cmaze::WriteExcitationCsv(csv, data);
  cmaze::WriteFile((fs::path(c.output_dir) / "excitation.csv").string(), csv.str());
  cmaze::WriteFile((fs::path(c.output_dir) / "arx.json").string(),
                   json(arx).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Circular maze marble controller: calibration, learning, evaluation"};
  app.require_subcommand(1);
  Flags flags;
  uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "experiment config (JSON)");
    sub->add_option("--seed", seed, "base seed");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--stage", flags.stage, "stage label of a learned model");
    sub->add_flag("--headless", flags.headless, "no live streaming");
    sub->add_flag("--dry-run", flags.dry_run, "validate inputs, write nothing");
  };
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Flags&);
  };
  const Command commands[] = {
      {"calibrate", "estimate friction from random-policy data", Calibrate},
      {"learn", "run the staged model-learning experiment", Learn},
      {"eval", "evaluate a learned stage", Eval},
      {"play-agent", "run one agent episode", PlayAgent},
      {"serve", "host play sessions over WebSocket", Serve},
      {"export", "write resolved config and motor identification data", Export},
  };
  std::vector<std::pair<CLI::App*, int (*)(const Flags&)>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    subs.emplace_back(sub, c.run);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  try {
    for (const auto& [sub, run] : subs) {
      if (!sub->parsed()) continue;
      if (sub->count("--seed") > 0) flags.seed = seed;
      return run(flags);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kRuntime;
  }
  return kUsage;
}
