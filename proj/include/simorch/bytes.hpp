// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_BYTES_HPP_
#define SIMORCH_BYTES_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simorch/error.hpp"

namespace simorch {

// Integers travel big-endian, doubles little-endian.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put_be(v, 2); }
  void u32(std::uint32_t v) { put_be(v, 4); }
  void u64(std::uint64_t v) { put_be(v, 8); }

  void f64(double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }

  void f64s(std::span<const double> values) {
    if constexpr (std::endian::native == std::endian::little) {
      auto old = buf_.size();
      buf_.resize(old + values.size() * 8);
      if (!values.empty()) std::memcpy(buf_.data() + old, values.data(), values.size() * 8);
    } else {
      for (double v : values) f64(v);
    }
  }

  /// u16 length prefix + raw bytes.
  void str(std::string_view s) {
    if (s.size() > 0xFFFF) throw Error(ErrorCode::kMalformed, "string longer than 65535 bytes");
    u16(static_cast<std::uint16_t>(s.size()));
    raw(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  }

  void raw(std::span<const std::uint8_t> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
  }

  std::vector<std::uint8_t>& bytes() { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  void put_be(std::uint64_t v, int n) {
    for (int i = n - 1; i >= 0; --i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::vector<std::uint8_t> buf_;
};

/// Cursor over a byte span. Every read past the end throws MALFORMED with
/// the supplied context so decode errors name what was truncated.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8(const char* what = "u8") { need(1, what); return bytes_[pos_++]; }
  std::uint16_t u16(const char* what = "u16") { return static_cast<std::uint16_t>(get_be(2, what)); }
  std::uint32_t u32(const char* what = "u32") { return static_cast<std::uint32_t>(get_be(4, what)); }
  std::uint64_t u64(const char* what = "u64") { return get_be(8, what); }

  double f64(const char* what = "f64") {
    need(8, what);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }

  void f64s(std::span<double> out, const char* what = "f64 array") {
    if (out.size() > remaining() / 8) throw short_read(what);
    if constexpr (std::endian::native == std::endian::little) {
      if (!out.empty()) std::memcpy(out.data(), bytes_.data() + pos_, out.size() * 8);
      pos_ += out.size() * 8;
    } else {
      for (auto& v : out) v = f64(what);
    }
  }

  std::string str(const char* what = "string") {
    auto n = u16(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::span<const std::uint8_t> rest() {
    auto r = bytes_.subspan(pos_);
    pos_ = bytes_.size();
    return r;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  Error short_read(const char* what) const {
    return Error(ErrorCode::kMalformed, std::string("short ") + what);
  }
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw short_read(what);
  }
  std::uint64_t get_be(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace simorch

#endif  // SIMORCH_BYTES_HPP_
