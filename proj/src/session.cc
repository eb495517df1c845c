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
#include <stdexcept>

namespace cmaze {

using nlohmann::json;

namespace {

double NumberField(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw std::invalid_argument(std::string("missing field '") + key + "'");
  }
  const json& v = j.at(key);
  if (!v.is_number()) {
    throw std::invalid_argument(std::string("field '") + key + "' must be a number");
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw std::invalid_argument(std::string("field '") + key + "' must be finite");
  }
  return d;
}

}  // namespace

std::string ToString(SessionMode mode) {
  return mode == SessionMode::kHuman ? "human" : "agent";
}

std::string ToString(SessionStatus status) {
  switch (status) {
    case SessionStatus::kRunning:
      return "running";
    case SessionStatus::kSolved:
      return "solved";
    case SessionStatus::kTimedOut:
      return "timed_out";
    case SessionStatus::kFaulted:
      return "faulted";
  }
  return "unknown";
}

SessionMode ParseMode(const std::string& text) {
  if (text == "human") return SessionMode::kHuman;
  if (text == "agent") return SessionMode::kAgent;
  throw std::invalid_argument("unknown mode '" + text + "'");
}

ClientFrame ParseClientFrame(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error&) {
    throw std::invalid_argument("frame is not valid JSON");
  }
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw std::invalid_argument("frame needs a string 'type'");
  }
  const std::string type = j.at("type").get<std::string>();
  ClientFrame f;
  if (type == "tilt") {
    f.kind = ClientFrame::Kind::kTilt;
    const double ux = NumberField(j, "ux");
    const double uy = NumberField(j, "uy");
    f.tilt.action = Action{ux, uy}.Clamped();
    f.tilt.clamped = f.tilt.action.ux != ux || f.tilt.action.uy != uy;
  } else if (type == "reset") {
    f.kind = ClientFrame::Kind::kReset;
  } else if (type == "open") {
    f.kind = ClientFrame::Kind::kOpen;
    if (!j.contains("mode") || !j.at("mode").is_string()) {
      throw std::invalid_argument("open frame needs a string 'mode'");
    }
    f.open.mode = ParseMode(j.at("mode").get<std::string>());
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) {
        throw std::invalid_argument("field 'seed' must be a non-negative integer");
      }
      f.open.seed = j.at("seed").get<uint64_t>();
    }
  } else {
    throw std::invalid_argument("unknown frame type '" + type + "'");
  }
  return f;
}

json StateFrame(int tick, double dt, const FullState& s, SessionStatus status) {
  return {{"type", "state"},
          {"tick", tick},
          {"t_s", tick * dt},
          {"beta", s.beta},
          {"gamma", s.gamma},
          {"theta", s.theta},
          {"theta_dot", s.theta_dot},
          {"ring", s.ring.value},
          {"x", s.rho * std::cos(s.theta)},
          {"y", s.rho * std::sin(s.theta)},
          {"status", ToString(status)}};
}

json SummaryFrame(const std::array<double, kNumRings>& per_ring_s, bool solved,
                  double total_s) {
  return {{"type", "summary"},
          {"per_ring_s", std::vector<double>(per_ring_s.begin(), per_ring_s.end())},
          {"solved", solved},
          {"total_s", total_s}};
}

json AckFrame(const std::string& command, int tick, bool clamped) {
  return {{"type", "ack"}, {"command", command}, {"tick", tick}, {"clamped", clamped}};
}

json ErrorFrame(const std::string& message) {
  return {{"type", "error"}, {"message", message}};
}

Session::Session(std::string id, SessionMode mode, uint64_t seed,
                 SessionOptions options, std::shared_ptr<const Agent> agent)
    : id_(std::move(id)),
      mode_(mode),
      options_(std::move(options)),
      agent_(std::move(agent)),
      base_seed_(seed) {
  if (mode_ == SessionMode::kAgent && !agent_) {
    throw std::invalid_argument("agent session without an agent model");
  }
  if (!options_.log_path.empty()) {
    const std::filesystem::path p(options_.log_path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    log_.open(p, std::ios::app);
  }
  std::lock_guard lock(mu_);
  ResetWorld(seed);
  Log("out", StateFrameLocked());
}

void Session::ResetWorld(uint64_t seed) {
  rng_.seed(seed);
  world_ = RandomReset(options_.plant.geom, rng_);
  obs_ = InjectNoise(Observe(world_), options_.episode.noise, rng_);
  tick_ = 0;
  ring_ticks_ = {};
  status_ = SessionStatus::kRunning;
  held_ = {};
  if (mode_ == SessionMode::kAgent) {
    controller_ = std::make_unique<AgentController>(*agent_, options_.episode,
                                                    DeriveSeed(seed, 7, 0));
  }
}

void Session::Log(const char* direction, const json& frame) {
  if (!log_.is_open()) return;
  log_ << json{{"session", id_}, {"dir", direction}, {"frame", frame}}.dump()
       << '\n';
  log_.flush();
}

json Session::HandleCommand(const std::string& text) {
  std::lock_guard lock(mu_);
  json reply;
  try {
    const ClientFrame f = ParseClientFrame(text);
    Log("in", json::parse(text));
    switch (f.kind) {
      case ClientFrame::Kind::kTilt:
        if (mode_ == SessionMode::kAgent) {
          reply = ErrorFrame("tilt rejected: session is agent-controlled");
        } else if (status_ != SessionStatus::kRunning) {
          reply = ErrorFrame("tilt rejected: session is " + ToString(status_));
        } else {
          pending_tilt_ = f.tilt.action;
          reply = AckFrame("tilt", tick_ + 1, f.tilt.clamped);
        }
        break;
      case ClientFrame::Kind::kReset:
        pending_reset_ = true;
        reply = AckFrame("reset", 0, false);
        break;
      case ClientFrame::Kind::kOpen:
        reply = ErrorFrame("session already open");
        break;
    }
  } catch (const std::invalid_argument& e) {
    reply = ErrorFrame(e.what());
  }
  Log("out", reply);
  return reply;
}

std::vector<json> Session::Tick() {
  std::lock_guard lock(mu_);
  std::vector<json> frames;
  if (pending_reset_) {
    pending_reset_ = false;
    pending_tilt_.reset();
    ++resets_;
    ResetWorld(DeriveSeed(base_seed_, 11, resets_));
    frames.push_back(StateFrameLocked());
    Log("out", frames.back());
    return frames;
  }
  if (status_ != SessionStatus::kRunning) return frames;
  if (pending_tilt_) {
    held_ = *pending_tilt_;
    pending_tilt_.reset();
  }

  Action motor = held_;
  int attributed = world_.ring.value;
  if (mode_ == SessionMode::kAgent) {
    TickRecord tr;
    motor = controller_->Act(obs_, &tr);
    if (tr.transit) attributed = controller_->transit_ring();
  }
  ++ring_ticks_[attributed];
  try {
    world_ = StepFull(world_, motor, options_.real_mu, options_.plant);
  } catch (const IntegrationError& e) {
    status_ = SessionStatus::kFaulted;
    frames.push_back(ErrorFrame(std::string("session fault: ") + e.what()));
    Log("out", frames.back());
    return frames;
  }
  obs_ = InjectNoise(Observe(world_), options_.episode.noise, rng_);
  if (controller_) controller_->Advance(obs_);
  ++tick_;
  if (world_.ring.IsGoal()) {
    status_ = SessionStatus::kSolved;
  } else if (tick_ >= options_.episode.max_ticks) {
    status_ = SessionStatus::kTimedOut;
  }
  frames.push_back(StateFrameLocked());
  if (status_ != SessionStatus::kRunning) frames.push_back(SummaryFrameLocked());
  for (const auto& f : frames) Log("out", f);
  return frames;
}

json Session::StateFrameLocked() const {
  return StateFrame(tick_, options_.plant.dt, world_, status_);
}

json Session::SummaryFrameLocked() const {
  std::array<double, kNumRings> t{};
  for (int i = 0; i < kNumRings; ++i) t[i] = ring_ticks_[i] * options_.plant.dt;
  return SummaryFrame(t, status_ == SessionStatus::kSolved,
                      tick_ * options_.plant.dt);
}

json Session::CurrentStateFrame() const {
  std::lock_guard lock(mu_);
  return StateFrameLocked();
}

json Session::CurrentSummaryFrame() const {
  std::lock_guard lock(mu_);
  return SummaryFrameLocked();
}

int Session::tick() const {
  std::lock_guard lock(mu_);
  return tick_;
}

SessionStatus Session::status() const {
  std::lock_guard lock(mu_);
  return status_;
}

FullState Session::state() const {
  std::lock_guard lock(mu_);
  return world_;
}

Action Session::held_action() const {
  std::lock_guard lock(mu_);
  return held_;
}

std::array<double, kNumRings> Session::per_ring_seconds() const {
  std::lock_guard lock(mu_);
  std::array<double, kNumRings> t{};
  for (int i = 0; i < kNumRings; ++i) t[i] = ring_ticks_[i] * options_.plant.dt;
  return t;
}

}  // namespace cmaze
