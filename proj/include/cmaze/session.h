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


#ifndef CMAZE_SESSION_H_
#define CMAZE_SESSION_H_

#include <array>
#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmaze/pipeline.h"

// Play sessions on the full engine and the JSON frames they exchange.
//
// Frames from the client:
//   {"type":"open", "mode":"human"|"agent", "seed":N}
//   {"type":"tilt", "ux":X, "uy":Y}
//   {"type":"reset"}
// Frames to the client:
//   {"type":"state", "tick", "t_s", "beta", "gamma", "theta", "theta_dot",
//    "ring", "x", "y", "status"}
//   {"type":"summary", "per_ring_s":[4], "solved", "total_s"}
//   {"type":"ack", "command", "tick", "clamped"}
//   {"type":"error", "message"}
// An acknowledged command takes effect on the step that produces the state
// frame with the acknowledged tick.

namespace cmaze {

enum class SessionMode { kHuman, kAgent };
enum class SessionStatus { kRunning, kSolved, kTimedOut, kFaulted };

std::string ToString(SessionMode mode);
std::string ToString(SessionStatus status);
// Throws std::invalid_argument for anything but "human" / "agent".
SessionMode ParseMode(const std::string& text);

struct TiltCommand {
  Action action;
  bool clamped = false;
};
struct ResetCommand {};
struct OpenCommand {
  SessionMode mode = SessionMode::kHuman;
  uint64_t seed = 0;
};

struct ClientFrame {
  enum class Kind { kOpen, kTilt, kReset } kind = Kind::kTilt;
  OpenCommand open;
  TiltCommand tilt;
};

// Parses a client frame. Throws std::invalid_argument with a readable
// message on malformed input.
ClientFrame ParseClientFrame(const std::string& text);

nlohmann::json StateFrame(int tick, double dt, const FullState& s,
                          SessionStatus status);
nlohmann::json SummaryFrame(const std::array<double, kNumRings>& per_ring_s,
                            bool solved, double total_s);
nlohmann::json AckFrame(const std::string& command, int tick, bool clamped);
nlohmann::json ErrorFrame(const std::string& message);

struct SessionOptions {
  PlantSpec plant;
  FrictionParams real_mu = FrictionParams::FullDefaults();
  EpisodeConfig episode;   // noise, time limit and agent settings
  // optional JSONL log of every frame in and out
  std::string log_path;
};

// One maze world with a single controller. Thread-safe: commands may arrive
// from any thread and are applied at the next tick boundary.
class Session {
 public:
  // `agent` is required in agent mode and ignored in human mode.
  Session(std::string id, SessionMode mode, uint64_t seed,
          SessionOptions options, std::shared_ptr<const Agent> agent = {});

  const std::string& id() const { return id_; }
  SessionMode mode() const { return mode_; }

  // Ack or error frame for a client frame; tilt and reset are queued.
  nlohmann::json HandleCommand(const std::string& text);

  // Advances one control tick when running. Returns the state frame and,
  // when the episode ends on this tick, a summary frame.
  std::vector<nlohmann::json> Tick();

  nlohmann::json CurrentStateFrame() const;
  nlohmann::json CurrentSummaryFrame() const;

  int tick() const;
  SessionStatus status() const;
  FullState state() const;
  Action held_action() const;
  std::array<double, kNumRings> per_ring_seconds() const;

 private:
  void ResetWorld(uint64_t seed);
  void Log(const char* direction, const nlohmann::json& frame);
  nlohmann::json StateFrameLocked() const;
  nlohmann::json SummaryFrameLocked() const;

  const std::string id_;
  const SessionMode mode_;
  const SessionOptions options_;
  std::shared_ptr<const Agent> agent_;

  mutable std::mutex mu_;
  uint64_t base_seed_;
  int resets_ = 0;
  std::mt19937_64 rng_;
  FullState world_;
  ReducedState obs_;
  int tick_ = 0;
  std::array<int, kNumRings> ring_ticks_{};
  SessionStatus status_ = SessionStatus::kRunning;
  Action held_;
  std::optional<Action> pending_tilt_;
  bool pending_reset_ = false;
  std::unique_ptr<AgentController> controller_;
  std::ofstream log_;
};

}  // namespace cmaze

#endif  // CMAZE_SESSION_H_
