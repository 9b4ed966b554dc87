// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "simorch/server.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "net.hpp"
#include "simorch/error.hpp"

namespace simorch {

struct StoreServer::Session {
  net::Fd fd;
  std::thread thread;
  std::atomic<bool> done{false};
};

namespace {
constexpr int kPollSliceMs = 50;
}

StoreServer::StoreServer(Store& store, ServerOptions options)
    : store_(store), options_(std::move(options)) {}

StoreServer::~StoreServer() {
  stop();
  wait();
}

std::string StoreServer::address() const {
  return options_.bind_address + ":" + std::to_string(port_);
}

void StoreServer::start() {
  auto fd = net::listen_tcp(options_.bind_address, options_.port, &port_);
  listen_fd_ = fd.release();
  acceptor_ = std::thread([this] { accept_loop(); });
}

void StoreServer::stop() { stopping_.store(true); }

void StoreServer::wait() {
  std::lock_guard lock(wait_mu_);
  if (joined_) return;
  if (acceptor_.joinable()) acceptor_.join();
  std::list<std::unique_ptr<Session>> sessions;
  {
    std::lock_guard s(sessions_mu_);
    sessions.swap(sessions_);
  }
  for (auto& s : sessions) {
    if (s->thread.joinable()) s->thread.join();
  }
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
  joined_ = true;
}

void StoreServer::reap_finished() {
  std::lock_guard lock(sessions_mu_);
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if ((*it)->done.load()) {
      (*it)->thread.join();
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
}

void StoreServer::accept_loop() {
  while (!stopping_.load()) {
    if (!net::wait_readable(listen_fd_, kPollSliceMs)) {
      reap_finished();
      continue;
    }
    int cfd = ::accept(listen_fd_, nullptr, nullptr);
    if (cfd < 0) continue;
    auto session = std::make_unique<Session>();
    session->fd = net::Fd(cfd);
    auto* raw = session.get();
    {
      std::lock_guard lock(sessions_mu_);
      sessions_.push_back(std::move(session));
    }
    raw->thread = std::thread([this, raw] { session_loop(*raw); });
  }
  // Stop accepting new connections as soon as shutdown starts.
  ::shutdown(listen_fd_, SHUT_RDWR);
}

void StoreServer::session_loop(Session& session) {
  std::vector<std::uint8_t> payload;
  const int fd = session.fd.get();
  while (!stopping_.load()) {
    if (!net::wait_readable(fd, kPollSliceMs)) continue;
    auto status = net::read_frame(fd, options_.max_frame_bytes, payload);
    if (status != net::FrameStatus::kOk) break;  // EOF, error or oversize
    bool shutdown = false;
    auto response = wire::handle_request(store_, payload, shutdown);
    try {
      net::write_frame(fd, response);
    } catch (const Error&) {
      break;
    }
    if (shutdown) stopping_.store(true);
  }
  session.fd.reset();
  session.done.store(true);
}

int serve(Store& store, const ServerOptions& options, const std::string& port_file) {
  StoreServer server(store, options);
  try {
    server.start();
  } catch (const Error& e) {
    std::cerr << "simorch store: " << e.what() << "\n";
    return 1;
  }
  if (!port_file.empty()) {
    // Write then rename so readers never observe a partial file.
    auto tmp = port_file + ".tmp";
    {
      std::ofstream out(tmp);
      out << server.port() << "\n";
    }
    std::filesystem::rename(tmp, port_file);
  }
  std::cerr << "simorch store listening on " << server.address() << "\n";
  server.wait();
  return 0;
}

}  // namespace simorch
