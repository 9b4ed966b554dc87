// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include "doctest.h"
#include "simorch/wire.hpp"
#include "test_support.hpp"

using namespace simorch;
using namespace simorch::wire;

namespace {

std::string random_key(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(0, 24), ch(32, 126);
  std::string s(len(rng), ' ');
  for (auto& c : s) c = static_cast<char>(ch(rng));
  return s;
}

Request random_request(std::mt19937_64& rng) {
  Request req;
  req.code = static_cast<Command>(std::uniform_int_distribution<int>(0, 13)(rng));
  switch (req.code) {
    case Command::kPutTensor:
      req.key = random_key(rng);
      req.tensor = testing::random_tensor(rng, 4, 2000);
      break;
    case Command::kDelete:
    case Command::kExists:
      req.kind = static_cast<Kind>(std::uniform_int_distribution<int>(0, 3)(rng));
      req.key = random_key(rng);
      break;
    case Command::kPutDataset: {
      req.dataset.name = random_key(rng);
      req.key = req.dataset.name;
      int n = std::uniform_int_distribution<int>(0, 3)(rng);
      for (int i = 0; i < n; ++i) {
        req.dataset.add_tensor(random_key(rng), testing::random_tensor(rng, 3, 500));
      }
      int m = std::uniform_int_distribution<int>(0, 3)(rng);
      for (int i = 0; i < m; ++i) {
        auto k = random_key(rng);
        int c = std::uniform_int_distribution<int>(0, 3)(rng);
        for (int j = 0; j < c; ++j) req.dataset.add_meta_string(k, random_key(rng));
        if (c == 0) req.dataset.meta[k];
      }
      break;
    }
    case Command::kListAppend:
      req.key = random_key(rng);
      req.key2 = random_key(rng);
      break;
    case Command::kPutModel: {
      req.key = random_key(rng);
      int n = std::uniform_int_distribution<int>(0, 64)(rng);
      for (int i = 0; i < n; ++i) req.model.push_back(static_cast<std::uint8_t>(rng()));
      break;
    }
    case Command::kRunModel: {
      req.key = random_key(rng);
      int n = std::uniform_int_distribution<int>(0, 4)(rng);
      for (int i = 0; i < n; ++i) {
        req.inputs.push_back(random_key(rng));
        req.outputs.push_back(random_key(rng));
      }
      break;
    }
    case Command::kPing:
    case Command::kShutdown:
      break;
    default:
      req.key = random_key(rng);
  }
  return req;
}

Response run(Store& store, const std::vector<std::uint8_t>& payload) {
  bool shutdown = false;
  return decode_response(handle_request(store, payload, shutdown));
}

std::string reason(const Response& r) { return std::string(r.body.begin(), r.body.end()); }

}  // namespace

TEST_CASE("request encode/decode is the identity on random commands") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 500; ++i) {
    auto req = random_request(rng);
    auto back = decode_request(encode_request(req));
    REQUIRE(back == req);
  }
}

TEST_CASE("wire tensor layout") {
  ByteWriter w;
  encode_tensor(w, Tensor({1, 2}, {1.0, -2.0}));
  auto& b = w.bytes();
  REQUIRE(b.size() == 2 + 8 * 2 + 8 * 2);
  CHECK(b[0] == 0);  // FLOAT64
  CHECK(b[1] == 2);  // ndim
  CHECK(b[9] == 1);  // dims[0] big-endian
  CHECK(b[17] == 2);
  // 1.0 = 0x3FF0000000000000 little-endian
  CHECK(b[18 + 6] == 0xF0);
  CHECK(b[18 + 7] == 0x3F);
  CHECK(b[26 + 7] == 0xC0);  // -2.0
}

TEST_CASE("handle_request basics") {
  Store store;
  Request ping;
  ping.code = Command::kPing;
  auto r = run(store, encode_request(ping));
  CHECK(r.status == Status::kOk);
  CHECK(r.body.empty());

  Request get;
  get.code = Command::kGetTensor;
  get.key = "missing";
  r = run(store, encode_request(get));
  CHECK(r.status == Status::kNotFound);
  CHECK(r.body.empty());
}

TEST_CASE("truncated PUT_TENSOR reports a short body") {
  Store store;
  Request put;
  put.code = Command::kPutTensor;
  put.key = "k";
  put.tensor = Tensor({4}, {1, 2, 3, 4});
  auto payload = encode_request(put);
  payload.resize(payload.size() - 5);
  auto r = run(store, payload);
  CHECK(r.status == Status::kError);
  CHECK(reason(r) == "short tensor body");
  CHECK_FALSE(store.get_tensor("k"));
}

TEST_CASE("zero-sized tensor on the wire is rejected with its code") {
  Store store;
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(Command::kPutTensor));
  w.str("z");
  w.u8(0);
  w.u8(1);
  w.u64(0);
  auto r = run(store, w.bytes());
  CHECK(r.status == Status::kError);
  CHECK(reason(r).rfind("ZERO_SIZED", 0) == 0);
  CHECK(store.stats().zero_sized_rejections == 1);
}

TEST_CASE("unknown command and empty payload") {
  Store store;
  std::vector<std::uint8_t> unknown{200};
  CHECK(run(store, unknown).status == Status::kError);
  CHECK(run(store, {}).status == Status::kError);
}

TEST_CASE("RUN_MODEL and SHUTDOWN through the handler") {
  Store store;
  Request put;
  put.code = Command::kPutModel;
  put.key = "I";
  put.model = mlp::serialize(mlp::MlpModel::identity(2));
  CHECK(run(store, encode_request(put)).status == Status::kOk);
  store.put_tensor("x", Tensor({1, 2}, {3, 4}));
  Request rm;
  rm.code = Command::kRunModel;
  rm.key = "I";
  rm.inputs = {"x"};
  rm.outputs = {"y"};
  CHECK(run(store, encode_request(rm)).status == Status::kOk);
  CHECK(store.get_tensor("y")->data()[1] == 4.0);
  rm.key = "gone";
  CHECK(run(store, encode_request(rm)).status == Status::kNotFound);

  Request stop;
  stop.code = Command::kShutdown;
  bool shutdown = false;
  auto resp = decode_response(handle_request(store, encode_request(stop), shutdown));
  CHECK(resp.status == Status::kOk);
  CHECK(shutdown);
}

TEST_CASE("handler survives random payloads") {
  Store store;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10000; ++i) {
    std::vector<std::uint8_t> payload(std::uniform_int_distribution<int>(0, 64)(rng));
    for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
    if (!payload.empty()) payload[0] %= 16;
    bool shutdown = false;
    auto resp = decode_response(handle_request(store, payload, shutdown));
    CHECK((resp.status == Status::kOk || resp.status == Status::kNotFound ||
           resp.status == Status::kError));
  }
}
