// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_WIRE_HPP_
#define SIMORCH_WIRE_HPP_

// Binary protocol between store clients and the store server.
//
// Frame:    u32 big-endian payload length, then payload (never empty).
// Request:  u8 command code, then a command-specific body.
// Response: u8 status (0 OK, 1 NOT_FOUND, 2 ERROR), then a body. ERROR
//           bodies are an ASCII reason string (unprefixed).
//
// Field encodings: integers big-endian; strings u16 length + UTF-8 bytes;
// tensors as WireTensor (u8 dtype, u8 ndim, ndim x u64 dims, row-major
// little-endian f64 data).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "simorch/bytes.hpp"
#include "simorch/store.hpp"
#include "simorch/tensor.hpp"

namespace simorch::wire {

inline constexpr std::uint32_t kDefaultMaxFrameBytes = 256u << 20;

enum class Command : std::uint8_t {
  kPing = 0,
  kPutTensor = 1,
  kGetTensor = 2,
  kDelete = 3,
  kExists = 4,
  kPutDataset = 5,
  kGetDataset = 6,
  kListAppend = 7,
  kListLength = 8,
  kListGet = 9,
  kPutModel = 10,
  kModelExists = 11,
  kRunModel = 12,
  kShutdown = 13,
};

enum class Status : std::uint8_t { kOk = 0, kNotFound = 1, kError = 2 };

/// Decoded request. Only the members relevant to `code` are meaningful.
struct Request {
  Command code = Command::kPing;
  Kind kind = Kind::kTensor;         // DELETE, EXISTS
  std::string key;                   // primary key / list key / model key
  std::string key2;                  // LIST_APPEND dataset key
  Tensor tensor;                     // PUT_TENSOR
  Dataset dataset;                   // PUT_DATASET
  std::vector<std::uint8_t> model;   // PUT_MODEL serialized model
  std::vector<std::string> inputs;   // RUN_MODEL
  std::vector<std::string> outputs;  // RUN_MODEL

  bool operator==(const Request& other) const;
};

struct Response {
  Status status = Status::kOk;
  std::vector<std::uint8_t> body;
};

void encode_tensor(ByteWriter& w, const Tensor& t);
Tensor decode_tensor(ByteReader& r);
void encode_dataset(ByteWriter& w, const Dataset& d);
Dataset decode_dataset(ByteReader& r);

std::vector<std::uint8_t> encode_request(const Request& req);
/// Throws MALFORMED (short or trailing body) or PROTOCOL (unknown code).
Request decode_request(std::span<const std::uint8_t> payload);

std::vector<std::uint8_t> encode_response(const Response& resp);
Response decode_response(std::span<const std::uint8_t> payload);

/// Executes one request payload against the store and returns the response
/// payload. Never throws for bad input; failures become ERROR responses.
/// Sets `shutdown` when the request was SHUTDOWN.
std::vector<std::uint8_t> handle_request(Store& store,
                                         std::span<const std::uint8_t> payload,
                                         bool& shutdown);

}  // namespace simorch::wire

#endif  // SIMORCH_WIRE_HPP_
