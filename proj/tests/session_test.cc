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

#include "cmaze/session.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <gtest/gtest.h>

namespace cmaze {
namespace {

using nlohmann::json;

std::shared_ptr<const Agent> OracleAgent() {
  static const auto agent = [] {
    const PlantSpec plant;
    return std::make_shared<const Agent>(Agent{
        HybridModel::EngineOnly(plant, FrictionParams::FullDefaults()),
        IdentifyMotor(plant, LearningConfig::DefaultExcitation())});
  }();
  return agent;
}

std::set<std::string> Keys(const json& j) {
  std::set<std::string> out;
  for (const auto& [k, v] : j.items()) out.insert(k);
  return out;
}

TEST(ParseClientFrameTest, Tilt) {
  const ClientFrame f = ParseClientFrame(R"({"type":"tilt","ux":0.5,"uy":-0.25})");
  EXPECT_EQ(f.kind, ClientFrame::Kind::kTilt);
  EXPECT_EQ(f.tilt.action, (Action{0.5, -0.25}));
  EXPECT_FALSE(f.tilt.clamped);
  const ClientFrame c = ParseClientFrame(R"({"type":"tilt","ux":3,"uy":-0.25})");
  EXPECT_EQ(c.tilt.action, (Action{1.0, -0.25}));
  EXPECT_TRUE(c.tilt.clamped);
}

TEST(ParseClientFrameTest, OpenAndReset) {
  const ClientFrame o = ParseClientFrame(R"({"type":"open","mode":"agent","seed":9})");
  EXPECT_EQ(o.kind, ClientFrame::Kind::kOpen);
  EXPECT_EQ(o.open.mode, SessionMode::kAgent);
  EXPECT_EQ(o.open.seed, 9u);
  EXPECT_EQ(ParseClientFrame(R"({"type":"reset"})").kind,
            ClientFrame::Kind::kReset);
}

TEST(ParseClientFrameTest, RejectsMalformedFrames) {
  for (const char* text : {
           "not json",
           "[1,2]",
           R"({"ux":1})",
           R"({"type":"jump"})",
           R"({"type":"tilt","ux":1})",
           R"({"type":"tilt","ux":"1","uy":0})",
           R"({"type":"open","mode":"robot"})",
           R"({"type":"open"})",
           R"({"type":"open","mode":"human","seed":-1})",
       }) {
    EXPECT_THROW(ParseClientFrame(text), std::invalid_argument) << text;
  }
}

TEST(FrameTest, Schemas) {
  FullState s;
  s.theta = kPi / 2;
  s.rho = 0.1;
  s.ring = RingIndex{2};
  const json state = StateFrame(300, 1.0 / 30.0, s, SessionStatus::kRunning);
  EXPECT_EQ(Keys(state),
            (std::set<std::string>{"type", "tick", "t_s", "beta", "gamma",
                                   "theta", "theta_dot", "ring", "x", "y",
                                   "status"}));
  EXPECT_EQ(state["type"], "state");
  EXPECT_NEAR(state["t_s"].get<double>(), 10.0, 1e-12);
  EXPECT_NEAR(state["x"].get<double>(), 0.0, 1e-12);
  EXPECT_NEAR(state["y"].get<double>(), 0.1, 1e-12);
  EXPECT_EQ(state["ring"], 2);
  EXPECT_EQ(state["status"], "running");

  const json summary = SummaryFrame({1, 2, 3, 4}, true, 10);
  EXPECT_EQ(Keys(summary),
            (std::set<std::string>{"type", "per_ring_s", "solved", "total_s"}));
  EXPECT_EQ(summary["per_ring_s"].size(), 4u);

  EXPECT_EQ(Keys(AckFrame("tilt", 3, true)),
            (std::set<std::string>{"type", "command", "tick", "clamped"}));
  EXPECT_EQ(Keys(ErrorFrame("x")), (std::set<std::string>{"type", "message"}));
}

TEST(ParseModeTest, Names) {
  EXPECT_EQ(ParseMode("human"), SessionMode::kHuman);
  EXPECT_EQ(ParseMode(ToString(SessionMode::kAgent)), SessionMode::kAgent);
  EXPECT_THROW(ParseMode("Human"), std::invalid_argument);
  EXPECT_EQ(ToString(SessionStatus::kTimedOut), "timed_out");
}

TEST(SessionTest, AgentModeNeedsAnAgent) {
  EXPECT_THROW(Session("a", SessionMode::kAgent, 1, SessionOptions{}),
               std::invalid_argument);
}

TEST(SessionTest, ThreeHundredTicksAreTenSeconds) {
  Session s("h", SessionMode::kHuman, 3, SessionOptions{});
  json last;
  for (int i = 0; i < 300; ++i) last = s.Tick().back();
  EXPECT_EQ(s.tick(), 300);
  EXPECT_EQ(last["tick"], 300);
  EXPECT_NEAR(last["t_s"].get<double>(), 10.0, 1e-12);
  // level platform, the marble never leaves the outer ring
  EXPECT_NEAR(s.per_ring_seconds()[0], 10.0, 1e-12);
  EXPECT_EQ(s.status(), SessionStatus::kRunning);
}

TEST(SessionTest, AckedTiltAppliesOnTheAcknowledgedTick) {
  Session s("h", SessionMode::kHuman, 4, SessionOptions{});
  for (int i = 0; i < 5; ++i) s.Tick();
  const json ack = s.HandleCommand(R"({"type":"tilt","ux":0.4,"uy":-2})");
  EXPECT_EQ(ack["type"], "ack");
  EXPECT_EQ(ack["tick"], 6);
  EXPECT_EQ(ack["clamped"], true);
  EXPECT_EQ(s.held_action(), Action{});
  const FullState before = s.state();
  const json frame = s.Tick().front();
  EXPECT_EQ(frame["tick"], 6);
  EXPECT_EQ(s.held_action(), (Action{0.4, -1.0}));
  EXPECT_EQ(s.state(), StepFull(before, {0.4, -1.0},
                                FrictionParams::FullDefaults(), PlantSpec{}));
  // the command is held until replaced
  s.Tick();
  EXPECT_EQ(s.held_action(), (Action{0.4, -1.0}));
}

TEST(SessionTest, RejectsBadCommandsWithErrorFrames) {
  Session h("h", SessionMode::kHuman, 4, SessionOptions{});
  EXPECT_EQ(h.HandleCommand("{")["type"], "error");
  EXPECT_EQ(h.HandleCommand(R"({"type":"open","mode":"human"})")["type"],
            "error");
  Session a("a", SessionMode::kAgent, 4, SessionOptions{}, OracleAgent());
  const json r = a.HandleCommand(R"({"type":"tilt","ux":0,"uy":0})");
  EXPECT_EQ(r["type"], "error");
  EXPECT_NE(r["message"].get<std::string>().find("agent"), std::string::npos);
}

TEST(SessionTest, SameSeedSameWorld) {
  Session a("a", SessionMode::kHuman, 8, SessionOptions{});
  Session b("b", SessionMode::kHuman, 8, SessionOptions{});
  Session c("c", SessionMode::kHuman, 9, SessionOptions{});
  EXPECT_EQ(a.state(), b.state());
  EXPECT_NE(a.state(), c.state());
  for (const char* cmd : {R"({"type":"tilt","ux":0.3,"uy":0.6})"}) {
    a.HandleCommand(cmd);
    b.HandleCommand(cmd);
  }
  for (int i = 0; i < 50; ++i) EXPECT_EQ(a.Tick(), b.Tick());
}

TEST(SessionTest, AgentSessionReplaysTheEpisode) {
  SessionOptions options;
  options.episode.max_ticks = 1800;
  Session s("a", SessionMode::kAgent, 21, options, OracleAgent());
  const EpisodeRecord rec =
      RolloutEpisode(options.plant, options.real_mu, *OracleAgent(),
                     options.episode, 21);
  ASSERT_TRUE(rec.solved);
  std::vector<json> last;
  for (const TickRecord& t : rec.ticks) {
    ASSERT_EQ(s.state(), t.full) << t.tick;
    last = s.Tick();
  }
  EXPECT_EQ(s.status(), SessionStatus::kSolved);
  ASSERT_EQ(last.size(), 2u);
  EXPECT_EQ(last[1]["type"], "summary");
  EXPECT_EQ(last[1]["solved"], true);
  const auto times = PerRingTimes(rec, options.plant.dt);
  for (int r = 0; r < kNumRings; ++r) {
    EXPECT_NEAR(last[1]["per_ring_s"][r].get<double>(), times[r], 1e-12);
  }
}

TEST(SessionTest, TimeoutEndsWithASummary) {
  SessionOptions options;
  options.episode.max_ticks = 5;
  Session s("h", SessionMode::kHuman, 1, options);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(s.Tick().size(), 1u);
  const auto frames = s.Tick();
  ASSERT_EQ(frames.size(), 2u);
  EXPECT_EQ(frames[0]["status"], "timed_out");
  EXPECT_EQ(frames[1]["solved"], false);
  EXPECT_NEAR(frames[1]["total_s"].get<double>(), 5 * options.plant.dt, 1e-12);
  EXPECT_TRUE(s.Tick().empty());
  EXPECT_EQ(s.HandleCommand(R"({"type":"tilt","ux":0,"uy":0})")["type"],
            "error");
}

TEST(SessionTest, ResetStartsOver) {
  SessionOptions options;
  options.episode.max_ticks = 5;
  Session s("h", SessionMode::kHuman, 1, options);
  for (int i = 0; i < 5; ++i) s.Tick();
  EXPECT_EQ(s.HandleCommand(R"({"type":"reset"})")["type"], "ack");
  s.HandleCommand(R"({"type":"tilt","ux":1,"uy":1})");
  const auto frames = s.Tick();
  ASSERT_EQ(frames.size(), 1u);
  EXPECT_EQ(frames[0]["tick"], 0);
  EXPECT_EQ(frames[0]["status"], "running");
  EXPECT_EQ(s.status(), SessionStatus::kRunning);
  EXPECT_EQ(s.held_action(), Action{});
  EXPECT_EQ(s.per_ring_seconds()[0], 0.0);
}

TEST(SessionTest, HeldTiltDrivesThePlatform) {
  Session s("h", SessionMode::kHuman, 2, SessionOptions{});
  s.HandleCommand(R"({"type":"tilt","ux":0.5,"uy":0})");
  const double goal = 0.5 * PlantSpec{}.servo.max_tilt;
  double prev_gap = std::abs(s.state().beta - goal);
  for (int i = 0; i < 30; ++i) {
    s.Tick();
    const double gap = std::abs(s.state().beta - goal);
    EXPECT_LE(gap, prev_gap + 1e-15);
    prev_gap = gap;
  }
  EXPECT_LT(prev_gap, 1e-3 * goal);
}

TEST(SessionTest, SummaryMatchesTheLog) {
  const auto dir =
      std::filesystem::temp_directory_path() / "cmaze_session_test_summary";
  std::filesystem::remove_all(dir);
  SessionOptions options;
  options.episode.max_ticks = 40;
  options.log_path = (dir / "s.jsonl").string();
  json summary;
  {
    Session s("h", SessionMode::kHuman, 6, options);
    s.HandleCommand(R"({"type":"tilt","ux":-0.7,"uy":0.4})");
    for (int i = 0; i < 40; ++i) {
      for (const json& f : s.Tick()) {
        if (f["type"] == "summary") summary = f;
      }
    }
  }
  ASSERT_FALSE(summary.is_null());
  std::ifstream in(options.log_path);
  std::string line;
  json logged;
  while (std::getline(in, line)) {
    const json entry = json::parse(line);
    const json& frame = entry["frame"];
    if (frame.value("type", "") == "summary") logged = frame;
  }
  EXPECT_EQ(logged["per_ring_s"], summary["per_ring_s"]);
  EXPECT_EQ(logged["total_s"], summary["total_s"]);
  std::filesystem::remove_all(dir);
}

TEST(SessionTest, LogsEveryFrame) {
  const auto dir =
      std::filesystem::temp_directory_path() / "cmaze_session_test_log";
  std::filesystem::remove_all(dir);
  SessionOptions options;
  options.log_path = (dir / "s.jsonl").string();
  {
    Session s("h", SessionMode::kHuman, 1, options);
    s.HandleCommand(R"({"type":"tilt","ux":0.1,"uy":0})");
    s.Tick();
  }
  std::ifstream in(options.log_path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    EXPECT_NO_THROW(json::parse(line)) << line;
    ++lines;
  }
  // initial state, tilt in, ack out, state out
  EXPECT_EQ(lines, 4);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace cmaze
