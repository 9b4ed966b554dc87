// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_SERVER_HPP_
#define SIMORCH_SERVER_HPP_

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "simorch/store.hpp"
#include "simorch/wire.hpp"

namespace simorch {

struct ServerOptions {
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  std::uint32_t max_frame_bytes = wire::kDefaultMaxFrameBytes;
};

/// TCP front end of a Store. One session thread per connection; requests on
/// a connection are answered strictly in order. A SHUTDOWN request (or
/// stop()) closes the listener and lets in-flight requests finish.
class StoreServer {
 public:
  StoreServer(Store& store, ServerOptions options);
  ~StoreServer();

  StoreServer(const StoreServer&) = delete;
  StoreServer& operator=(const StoreServer&) = delete;

  /// Binds and starts accepting. Throws TRANSPORT if the bind fails.
  void start();
  /// Blocks until a SHUTDOWN request arrives or stop() is called, then
  /// joins all sessions.
  void wait();
  void stop();

  std::uint16_t port() const { return port_; }
  std::string address() const;
  bool running() const { return !stopping_.load(); }

 private:
  struct Session;

  void accept_loop();
  void session_loop(Session& session);
  void reap_finished();

  Store& store_;
  ServerOptions options_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex sessions_mu_;
  std::list<std::unique_ptr<Session>> sessions_;
  std::mutex wait_mu_;
  bool joined_ = false;
};

/// Runs a server in the calling thread until SHUTDOWN. When `port_file` is
/// non-empty the bound port is written there once listening.
int serve(Store& store, const ServerOptions& options, const std::string& port_file);

}  // namespace simorch

#endif  // SIMORCH_SERVER_HPP_
