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
#include <deque>
#include <filesystem>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace cmaze {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

struct WsServer::Impl {
  ServerConfig config;
  SessionOptions session_options;
  std::shared_ptr<const Agent> agent;
  std::atomic<int>* active = nullptr;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::thread thread;
  int next_id = 0;

  class Connection;
  void Accept();
};

class WsServer::Impl::Connection
    : public std::enable_shared_from_this<Connection> {
 public:
  Connection(Impl& server, tcp::socket socket)
      : server_(server), ws_(std::move(socket)), timer_(server.io) {}

  ~Connection() {
    if (session_) --*server_.active;
  }

  void Run() {
    ws_.set_option(
        websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->Read();
    });
  }

 private:
  void Read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec,
                                                        std::size_t) {
      if (ec) {
        self->closed_ = true;
        self->timer_.cancel();
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->OnFrame(text);
      self->Read();
    });
  }

  void OnFrame(const std::string& text) {
    if (session_) {
      Send(session_->HandleCommand(text).dump());
      return;
    }
    ClientFrame f;
    try {
      f = ParseClientFrame(text);
    } catch (const std::invalid_argument& e) {
      Send(ErrorFrame(e.what()).dump());
      return;
    }
    if (f.kind != ClientFrame::Kind::kOpen) {
      Send(ErrorFrame("no session: send an open frame first").dump());
      return;
    }
    if (f.open.mode == SessionMode::kAgent && !server_.agent) {
      Send(ErrorFrame("agent sessions are not available").dump());
      return;
    }
    if (server_.active->load() >= server_.config.capacity) {
      Send(ErrorFrame("capacity exceeded").dump());
      return;
    }
    const std::string id = "s" + std::to_string(server_.next_id++);
    SessionOptions options = server_.session_options;
    if (!server_.config.log_dir.empty()) {
      options.log_path =
          (std::filesystem::path(server_.config.log_dir) / (id + ".jsonl"))
              .string();
    }
    session_ = std::make_shared<Session>(id, f.open.mode, f.open.seed, options,
                                         server_.agent);
    ++*server_.active;
    nlohmann::json ack = AckFrame("open", 0, false);
    ack["session"] = id;
    Send(ack.dump());
    Send(session_->CurrentStateFrame().dump());
    period_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(options.plant.dt));
    deadline_ = std::chrono::steady_clock::now() + period_;
    ScheduleTick();
  }

  void ScheduleTick() {
    timer_.expires_at(deadline_);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_) return;
      for (const auto& frame : self->session_->Tick()) self->Send(frame.dump());
      self->deadline_ += self->period_;
      self->ScheduleTick();
    });
  }

  void Send(std::string text) {
    outbox_.push_back(std::move(text));
    if (outbox_.size() == 1) Write();
  }

  void Write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->closed_ = true;
                        self->timer_.cancel();
                        return;
                      }
                      self->outbox_.pop_front();
                      if (!self->outbox_.empty()) self->Write();
                    });
  }

  Impl& server_;
  websocket::stream<beast::tcp_stream> ws_;
  asio::steady_timer timer_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  std::shared_ptr<Session> session_;
  std::chrono::steady_clock::duration period_{};
  std::chrono::steady_clock::time_point deadline_;
  bool closed_ = false;
};

void WsServer::Impl::Accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<Connection>(*this, std::move(socket))->Run();
    Accept();
  });
}

WsServer::WsServer(ServerConfig config, SessionOptions session_options,
                   std::shared_ptr<const Agent> agent)
    : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  impl_->session_options = std::move(session_options);
  impl_->agent = std::move(agent);
  impl_->active = &active_;
}

WsServer::~WsServer() { Stop(); }

void WsServer::Start() {
  beast::error_code ec;
  const auto address = asio::ip::make_address(impl_->config.address, ec);
  if (ec) throw std::runtime_error("bad server address: " + impl_->config.address);
  const tcp::endpoint endpoint(address, impl_->config.port);
  impl_->acceptor.open(endpoint.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(endpoint, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw std::runtime_error("cannot listen: " + ec.message());
  port_ = impl_->acceptor.local_endpoint().port();
  impl_->Accept();
  impl_->thread = std::thread([this] { impl_->io.run(); });
}

void WsServer::Stop() {
  if (!impl_) return;
  impl_->io.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void WsServer::Wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace cmaze
