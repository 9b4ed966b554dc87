// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <random>
#include <thread>

#include "doctest.h"
#include "net.hpp"
#include "simorch/error.hpp"
#include "test_support.hpp"

using namespace simorch;
using namespace std::chrono_literals;

namespace {

Dataset tiny(const std::string& name) {
  Dataset d;
  d.name = name;
  d.add_tensor("v", Tensor({1}, {1.0}));
  return d;
}

}  // namespace

TEST_CASE("writes are visible to a second TCP client") {
  testing::ServerFixture fx;
  auto a = fx.client();
  auto b = fx.client();
  a.ping();
  Tensor t({2, 2}, {1, 2, 3, 4});
  a.put_tensor("k", t);
  auto got = b.get_tensor("k");
  REQUIRE(got);
  CHECK(got->bit_equal(t));
  CHECK_FALSE(b.get_tensor("missing"));
  b.delete_key(Kind::kTensor, "k");
  CHECK_FALSE(a.exists(Kind::kTensor, "k"));
}

TEST_CASE("datasets, lists and models over TCP") {
  testing::ServerFixture fx;
  auto c = fx.client();
  for (int i = 0; i < 5; ++i) c.put_dataset(tiny("d" + std::to_string(i)));
  for (int i = 0; i < 5; ++i) CHECK(c.list_append("L", "d" + std::to_string(i)) == i + 1u);
  auto items = c.list_get("L");
  REQUIRE(items);
  CHECK(*items == std::vector<std::string>{"d0", "d1", "d2", "d3", "d4"});
  CHECK_THROWS_AS(c.list_append("L", "nope"), Error);
  auto ds = c.get_dataset("d3");
  REQUIRE(ds);
  CHECK(ds->tensor("v").data()[0] == 1.0);
  CHECK(c.get_field("{d3}.v")->data()[0] == 1.0);
  CHECK_FALSE(c.get_field("{d3}.w"));

  c.put_model("I", mlp::MlpModel::identity(2));
  CHECK(c.model_exists("I"));
  c.put_tensor("x", Tensor({1, 2}, {5, 6}));
  CHECK(c.run_model("I", {"x"}, {"y"}));
  CHECK(c.get_tensor("y")->data()[1] == 6.0);
  CHECK_FALSE(c.run_model("J", {"x"}, {"y"}));
  std::vector<std::uint8_t> junk{1, 2, 3};
  try {
    c.put_model_bytes("bad", junk);
    FAIL("expected MALFORMED_MODEL");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMalformedModel);
  }
}

TEST_CASE("zero-sized tensors keep their code through the server") {
  testing::ServerFixture fx;
  auto c = fx.client();
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(wire::Command::kPutTensor));
  w.str("z");
  w.u8(0);
  w.u8(2);
  w.u64(3);
  w.u64(0);
  auto fd = net::connect_tcp("127.0.0.1", fx.server->port());
  net::write_frame(fd.get(), w.bytes());
  std::vector<std::uint8_t> payload;
  REQUIRE(net::read_frame(fd.get(), 1 << 20, payload) == net::FrameStatus::kOk);
  auto resp = wire::decode_response(payload);
  CHECK(resp.status == wire::Status::kError);
  CHECK(fx.store.stats().zero_sized_rejections == 1);
  CHECK_FALSE(c.exists(Kind::kTensor, "z"));
}

TEST_CASE("data source prefixes keys") {
  testing::ServerFixture fx;
  auto c = fx.client();
  c.set_data_source("member3");
  c.put_tensor("p", Tensor::flag());
  CHECK(fx.store.exists(Kind::kTensor, "member3.p"));
  c.put_dataset(tiny("d"));
  c.list_append("L", "d");
  CHECK(fx.store.list_get("member3.L")->front() == "member3.d");
  CHECK(c.list_get("L")->front() == "d");
  c.set_data_source("");
  CHECK_FALSE(c.exists(Kind::kTensor, "p"));
}

TEST_CASE("poll_key attempt counts") {
  auto fx = std::make_unique<testing::ServerFixture>();
  auto c = fx->client();
  const PollSpec spec{10ms, 20};

  c.put_tensor("ready", Tensor::flag());
  auto before = c.requests_sent();
  auto r = c.poll_key(Kind::kTensor, "ready", spec);
  CHECK(r.found);
  CHECK(r.attempts == 1);
  CHECK(c.requests_sent() - before == 1);

  before = c.requests_sent();
  r = c.poll_key(Kind::kTensor, "never", spec);
  CHECK_FALSE(r.found);
  CHECK(r.attempts == 20);
  CHECK(c.requests_sent() - before == 20);

  // Writer appears after about five intervals.
  std::thread writer([&] {
    auto w = fx->client();
    std::this_thread::sleep_for(50ms);
    w.put_tensor("late", Tensor::flag());
  });
  r = c.poll_key(Kind::kTensor, "late", PollSpec{10ms, 1000});
  writer.join();
  CHECK(r.found);
  CHECK(r.attempts >= 2);
  CHECK(r.attempts <= 1000);
  // Polling never consumes the value.
  CHECK(c.exists(Kind::kTensor, "late"));
}

TEST_CASE("poll_list_length found, timeout and overshoot") {
  testing::ServerFixture fx;
  auto c = fx.client();
  for (int i = 0; i < 3; ++i) {
    c.put_dataset(tiny("d" + std::to_string(i)));
    c.list_append("L", "d" + std::to_string(i));
  }
  const PollSpec spec{5ms, 4};
  CHECK(c.poll_list_length("L", 3, spec).found);
  auto r = c.poll_list_length("L", 4, spec);
  CHECK_FALSE(r.found);
  CHECK(r.attempts == 4);
  try {
    c.poll_list_length("L", 2, spec);
    FAIL("expected OVERSHOOT");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOvershoot);
  }
}

TEST_CASE("concurrent clients append 400 entries") {
  testing::ServerFixture fx;
  std::vector<std::thread> ranks;
  for (int r = 0; r < 4; ++r) {
    ranks.emplace_back([&fx, r] {
      auto c = fx.client();
      for (int i = 0; i < 100; ++i) {
        auto key = "r" + std::to_string(r) + "_" + std::to_string(i);
        c.put_dataset(tiny(key));
        c.list_append("L", key);
      }
    });
  }
  for (auto& t : ranks) t.join();
  auto c = fx.client();
  CHECK(c.poll_list_length("L", 400, PollSpec{1ms, 1}).found);
}

TEST_CASE("server survives random frames and oversize frames") {
  Store store;
  ServerOptions opts;
  opts.max_frame_bytes = 4096;
  StoreServer server(store, opts);
  server.start();
  std::mt19937_64 rng(17);
  {
    auto fd = net::connect_tcp("127.0.0.1", server.port());
    for (int i = 0; i < 10000; ++i) {
      std::vector<std::uint8_t> payload(std::uniform_int_distribution<int>(1, 48)(rng));
      for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
      payload[0] %= 13;  // avoid SHUTDOWN
      net::write_frame(fd.get(), payload);
      std::vector<std::uint8_t> resp;
      REQUIRE(net::read_frame(fd.get(), 1 << 20, resp) == net::FrameStatus::kOk);
      REQUIRE(!resp.empty());
      REQUIRE(resp[0] <= 2);
    }
  }
  {
    auto fd = net::connect_tcp("127.0.0.1", server.port());
    std::vector<std::uint8_t> big(8192, 0);
    net::write_frame(fd.get(), big);
    std::vector<std::uint8_t> resp;
    CHECK(net::read_frame(fd.get(), 1 << 20, resp) == net::FrameStatus::kClosed);
  }
  auto c = Client::connect(server.address());
  c.ping();
  c.shutdown_server();
  server.wait();
  CHECK_FALSE(server.running());
}

TEST_CASE("in-process client uses the same codec") {
  Store store;
  auto c = Client::in_process(store);
  c.put_tensor("a", Tensor({3}, {1, 2, 3}));
  CHECK(store.get_tensor("a")->data()[2] == 3.0);
  CHECK(split_field_key("{ds}.f") == std::make_pair(std::string("ds"), std::string("f")));
  CHECK_THROWS_AS(split_field_key("ds.f"), Error);
}

TEST_CASE("connecting to a dead port is a transport error") {
  std::uint16_t port = 0;
  { auto fd = net::listen_tcp("127.0.0.1", 0, &port); }
  try {
    auto c = Client::connect("127.0.0.1:" + std::to_string(port));
    c.ping();
    FAIL("expected TRANSPORT");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTransport);
  }
}
