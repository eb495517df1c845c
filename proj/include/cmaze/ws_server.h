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


#ifndef CMAZE_WS_SERVER_H_
#define CMAZE_WS_SERVER_H_

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "cmaze/config.h"
#include "cmaze/session.h"

namespace cmaze {

// WebSocket endpoint hosting one session per connection. A client opens a
// session with an "open" frame, then receives one state frame per control
// tick and may send tilt / reset frames. All I/O and ticking run on one
// internal thread.
class WsServer {
 public:
  // `agent` may be null, in which case agent sessions are refused.
  WsServer(ServerConfig config, SessionOptions session_options,
           std::shared_ptr<const Agent> agent);
  ~WsServer();

  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  // Binds and starts serving in the background. Port 0 picks a free port.
  // Throws std::runtime_error if binding fails.
  void Start();
  void Stop();
  // Blocks until Stop() is called from another thread or a signal handler.
  void Wait();

  unsigned short port() const { return port_; }
  int active_sessions() const { return active_.load(); }

 private:
  struct Impl;
  // declared first: connections torn down with impl_ still decrement it
  std::atomic<int> active_{0};
  unsigned short port_ = 0;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cmaze

#endif  // CMAZE_WS_SERVER_H_
