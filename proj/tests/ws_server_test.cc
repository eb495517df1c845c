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

#include "cmaze/ws_server.h"

#include <chrono>
#include <string>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>

namespace cmaze {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using nlohmann::json;
using tcp = asio::ip::tcp;

class Client {
 public:
  explicit Client(unsigned short port) : ws_(io_) {
    tcp::resolver resolver(io_);
    asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1",
                                                     std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }

  void Send(const std::string& text) { ws_.write(asio::buffer(text)); }

  json Receive() {
    beast::flat_buffer buffer;
    ws_.read(buffer);
    return json::parse(beast::buffers_to_string(buffer.data()));
  }

  // Next frame of `type`, skipping others.
  json ReceiveType(const std::string& type) {
    for (;;) {
      json f = Receive();
      if (f["type"] == type) return f;
    }
  }

 private:
  asio::io_context io_;
  websocket::stream<tcp::socket> ws_;
};

ServerConfig TestConfig(int capacity = 4) {
  ServerConfig c;
  c.port = 0;
  c.capacity = capacity;
  c.log_dir.clear();
  return c;
}

TEST(WsServerTest, StreamsStateAtTheControlRate) {
  WsServer server(TestConfig(), SessionOptions{}, nullptr);
  server.Start();
  ASSERT_NE(server.port(), 0);
  Client client(server.port());
  client.Send(R"({"type":"open","mode":"human","seed":3})");
  const json ack = client.Receive();
  EXPECT_EQ(ack["type"], "ack");
  EXPECT_EQ(ack["command"], "open");
  EXPECT_TRUE(ack.contains("session"));
  const json first = client.Receive();
  EXPECT_EQ(first["type"], "state");
  EXPECT_EQ(first["tick"], 0);
  EXPECT_EQ(server.active_sessions(), 1);

  client.ReceiveType("state");
  const auto start = std::chrono::steady_clock::now();
  const int frames = 300;   // 10 s
  json last;
  for (int i = 0; i < frames; ++i) last = client.ReceiveType("state");
  const double seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
  EXPECT_NEAR(frames / seconds, 30.0, 1.0);
  EXPECT_EQ(last["tick"], frames + 1);
  server.Stop();
}

TEST(WsServerTest, TiltIsAcknowledgedForTheNextTick) {
  WsServer server(TestConfig(), SessionOptions{}, nullptr);
  server.Start();
  Client client(server.port());
  client.Send(R"({"type":"open","mode":"human","seed":1})");
  client.ReceiveType("ack");
  const int seen = client.ReceiveType("state")["tick"];
  client.Send(R"({"type":"tilt","ux":0.5,"uy":5})");
  const json ack = client.ReceiveType("ack");
  EXPECT_EQ(ack["command"], "tilt");
  EXPECT_EQ(ack["clamped"], true);
  EXPECT_GT(ack["tick"].get<int>(), seen);
  server.Stop();
}

TEST(WsServerTest, RefusesFramesBeforeOpen) {
  WsServer server(TestConfig(), SessionOptions{}, nullptr);
  server.Start();
  Client client(server.port());
  client.Send(R"({"type":"tilt","ux":0,"uy":0})");
  EXPECT_EQ(client.Receive()["type"], "error");
  client.Send("garbage");
  EXPECT_EQ(client.Receive()["type"], "error");
  client.Send(R"({"type":"open","mode":"agent"})");
  const json err = client.Receive();
  EXPECT_EQ(err["type"], "error");
  EXPECT_NE(err["message"].get<std::string>().find("agent"), std::string::npos);
  EXPECT_EQ(server.active_sessions(), 0);
  server.Stop();
}

TEST(WsServerTest, EnforcesCapacity) {
  WsServer server(TestConfig(1), SessionOptions{}, nullptr);
  server.Start();
  Client a(server.port());
  a.Send(R"({"type":"open","mode":"human"})");
  EXPECT_EQ(a.Receive()["type"], "ack");
  Client b(server.port());
  b.Send(R"({"type":"open","mode":"human"})");
  const json err = b.Receive();
  EXPECT_EQ(err["type"], "error");
  EXPECT_NE(err["message"].get<std::string>().find("capacity"),
            std::string::npos);
  server.Stop();
}

TEST(WsServerTest, BadAddressThrows) {
  ServerConfig c = TestConfig();
  c.address = "not an address";
  WsServer server(c, SessionOptions{}, nullptr);
  EXPECT_THROW(server.Start(), std::runtime_error);
}

}  // namespace
}  // namespace cmaze
