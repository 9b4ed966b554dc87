// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_SRC_NET_HPP_
#define SIMORCH_SRC_NET_HPP_

// POSIX socket helpers shared by the store server and the TCP client.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace simorch::net {

/// Owns a file descriptor; closes it on destruction.
class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& other) noexcept : fd_(other.release()) {}
  Fd& operator=(Fd&& other) noexcept;
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int f = fd_;
    fd_ = -1;
    return f;
  }
  void reset();

 private:
  int fd_ = -1;
};

/// Binds and listens; throws TRANSPORT on failure. `bound_port` receives the
/// actual port (useful with port 0).
Fd listen_tcp(const std::string& bind_address, std::uint16_t port,
              std::uint16_t* bound_port);
Fd connect_tcp(const std::string& host, std::uint16_t port);

/// Waits up to `timeout_ms` for the fd to become readable.
bool wait_readable(int fd, int timeout_ms);

enum class FrameStatus { kOk, kClosed, kOversize };

/// Reads one length-prefixed frame. Returns kClosed on EOF or I/O error.
FrameStatus read_frame(int fd, std::uint32_t max_bytes,
                       std::vector<std::uint8_t>& payload);
/// Throws TRANSPORT on failure.
void write_frame(int fd, std::span<const std::uint8_t> payload);

/// Parses "host:port"; throws INVALID_CONFIG.
std::pair<std::string, std::uint16_t> parse_address(const std::string& addr);

}  // namespace simorch::net

#endif  // SIMORCH_SRC_NET_HPP_
