// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "simorch/error.hpp"

namespace simorch::net {

namespace {

std::string errno_text() { return std::strerror(errno); }

bool read_exact(int fd, std::uint8_t* buf, std::size_t n) {
  while (n > 0) {
    ssize_t got = ::recv(fd, buf, n, 0);
    if (got == 0) return false;
    if (got < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    buf += got;
    n -= static_cast<std::size_t>(got);
  }
  return true;
}

void write_all(int fd, const std::uint8_t* buf, std::size_t n) {
  while (n > 0) {
    ssize_t put = ::send(fd, buf, n, MSG_NOSIGNAL);
    if (put < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kTransport, "send failed: " + errno_text());
    }
    buf += put;
    n -= static_cast<std::size_t>(put);
  }
}

}  // namespace

Fd& Fd::operator=(Fd&& other) noexcept {
  if (this != &other) {
    reset();
    fd_ = other.release();
  }
  return *this;
}

void Fd::reset() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

Fd listen_tcp(const std::string& bind_address, std::uint16_t port,
              std::uint16_t* bound_port) {
  Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
  if (!fd.valid()) throw Error(ErrorCode::kTransport, "socket: " + errno_text());
  int one = 1;
  ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind_address.c_str(), &addr.sin_addr) != 1) {
    throw Error(ErrorCode::kTransport, "bad bind address '" + bind_address + "'");
  }
  if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw Error(ErrorCode::kTransport, "bind " + bind_address + ":" +
                                           std::to_string(port) + ": " + errno_text());
  }
  if (::listen(fd.get(), 128) != 0) {
    throw Error(ErrorCode::kTransport, "listen: " + errno_text());
  }
  if (bound_port != nullptr) {
    socklen_t len = sizeof(addr);
    ::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&addr), &len);
    *bound_port = ntohs(addr.sin_port);
  }
  return fd;
}

Fd connect_tcp(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  auto service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw Error(ErrorCode::kTransport, "resolve '" + host + "': " + ::gai_strerror(rc));
  }
  Fd fd;
  std::string last_error = "no addresses";
  for (auto* p = res; p != nullptr; p = p->ai_next) {
    Fd candidate(::socket(p->ai_family, p->ai_socktype, p->ai_protocol));
    if (!candidate.valid()) continue;
    if (::connect(candidate.get(), p->ai_addr, p->ai_addrlen) == 0) {
      fd = std::move(candidate);
      break;
    }
    last_error = errno_text();
  }
  ::freeaddrinfo(res);
  if (!fd.valid()) {
    throw Error(ErrorCode::kTransport,
                "connect " + host + ":" + service + ": " + last_error);
  }
  int one = 1;
  ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

bool wait_readable(int fd, int timeout_ms) {
  pollfd p{fd, POLLIN, 0};
  int rc = ::poll(&p, 1, timeout_ms);
  return rc > 0;
}

FrameStatus read_frame(int fd, std::uint32_t max_bytes,
                       std::vector<std::uint8_t>& payload) {
  std::uint8_t header[4];
  if (!read_exact(fd, header, 4)) return FrameStatus::kClosed;
  std::uint32_t len = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                      (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
  if (len > max_bytes) return FrameStatus::kOversize;
  payload.resize(len);
  if (len > 0 && !read_exact(fd, payload.data(), len)) return FrameStatus::kClosed;
  return FrameStatus::kOk;
}

void write_frame(int fd, std::span<const std::uint8_t> payload) {
  if (payload.size() > 0xFFFFFFFFu) throw Error(ErrorCode::kTransport, "frame too large");
  auto len = static_cast<std::uint32_t>(payload.size());
  std::vector<std::uint8_t> buf(4 + payload.size());
  buf[0] = static_cast<std::uint8_t>(len >> 24);
  buf[1] = static_cast<std::uint8_t>(len >> 16);
  buf[2] = static_cast<std::uint8_t>(len >> 8);
  buf[3] = static_cast<std::uint8_t>(len);
  if (!payload.empty()) std::memcpy(buf.data() + 4, payload.data(), payload.size());
  write_all(fd, buf.data(), buf.size());
}

std::pair<std::string, std::uint16_t> parse_address(const std::string& addr) {
  auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
    throw Error(ErrorCode::kInvalidConfig, "store address must be host:port, got '" + addr + "'");
  }
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(addr.substr(colon + 1), &used);
    if (used != addr.size() - colon - 1) throw std::invalid_argument("port");
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidConfig, "bad port in '" + addr + "'");
  }
  if (port == 0 || port > 65535) {
    throw Error(ErrorCode::kInvalidConfig, "port out of range in '" + addr + "'");
  }
  return {addr.substr(0, colon), static_cast<std::uint16_t>(port)};
}

}  // namespace simorch::net
