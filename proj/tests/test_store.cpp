// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <random>
#include <set>
#include <thread>

#include "doctest.h"
#include "simorch/error.hpp"
#include "simorch/mlp.hpp"
#include "simorch/store.hpp"
#include "test_support.hpp"

using namespace simorch;

namespace {

Dataset make_dataset(const std::string& name) {
  Dataset d;
  d.name = name;
  d.add_tensor("x", Tensor({1}, {1.0}));
  return d;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kWorkflow;
}

}  // namespace

TEST_CASE("flags are single-element tensors") {
  Store store;
  store.put_tensor("flag", Tensor::flag());
  auto t = store.get_tensor("flag");
  REQUIRE(t);
  CHECK(t->dims() == std::vector<std::size_t>{1});
  CHECK(t->data()[0] == 1.0);
}

TEST_CASE("put then get returns identical bytes") {
  Store store;
  Tensor t({2, 3}, {0, 1, 2, 3, 4, 5});
  store.put_tensor("k", t);
  CHECK(store.get_tensor("k")->bit_equal(t));
  store.put_tensor("k", Tensor({1}, {7.0}));
  CHECK(store.get_tensor("k")->data()[0] == 7.0);
}

TEST_CASE("zero-sized and malformed tensors are rejected") {
  CHECK(code_of([] { Tensor({0}, {}); }) == ErrorCode::kZeroSized);
  CHECK(code_of([] { Tensor({2, 2}, {1, 2, 3}); }) == ErrorCode::kMalformed);
  CHECK(code_of([] { Tensor({}, {}); }) == ErrorCode::kMalformed);
}

TEST_CASE("get of missing or deleted key is NOT_FOUND") {
  Store store;
  CHECK_FALSE(store.get_tensor("nope"));
  store.put_tensor("k", Tensor::flag());
  store.delete_key(Kind::kTensor, "k");
  CHECK_FALSE(store.get_tensor("k"));
}

TEST_CASE("delete is idempotent") {
  Store store;
  store.put_model("M", mlp::MlpModel::identity(2));
  store.delete_key(Kind::kModel, "M");
  CHECK_FALSE(store.model_exists("M"));
  CHECK_NOTHROW(store.delete_key(Kind::kModel, "M"));
  CHECK_NOTHROW(store.delete_key(Kind::kList, "never"));
}

TEST_CASE("list append and length") {
  Store store;
  store.put_dataset(make_dataset("d0"));
  CHECK_FALSE(store.list_length("L"));
  CHECK(store.list_append("L", "d0") == 1);
  CHECK(*store.list_length("L") == 1);
  CHECK(code_of([&] { store.list_append("L", "missing"); }) == ErrorCode::kDangling);
  CHECK(*store.list_length("L") == 1);
  store.delete_key(Kind::kList, "L");
  CHECK_FALSE(store.list_length("L"));
}

TEST_CASE("concurrent appends match the sequential oracle") {
  constexpr int kRanks = 4;
  constexpr int kPerRank = 100;
  Store store;
  for (int r = 0; r < kRanks; ++r) {
    for (int i = 0; i < kPerRank; ++i) {
      store.put_dataset(make_dataset("r" + std::to_string(r) + "_" + std::to_string(i)));
    }
  }
  std::vector<std::thread> threads;
  for (int r = 0; r < kRanks; ++r) {
    threads.emplace_back([&store, r] {
      for (int i = 0; i < kPerRank; ++i) {
        store.list_append("L", "r" + std::to_string(r) + "_" + std::to_string(i));
      }
    });
  }
  for (auto& t : threads) t.join();

  Store oracle;
  for (int r = 0; r < kRanks; ++r) {
    for (int i = 0; i < kPerRank; ++i) {
      auto key = "r" + std::to_string(r) + "_" + std::to_string(i);
      oracle.put_dataset(make_dataset(key));
      oracle.list_append("L", key);
    }
  }
  auto got = *store.list_get("L");
  auto want = *oracle.list_get("L");
  CHECK(got.size() == kRanks * kPerRank);
  CHECK(std::multiset(got.begin(), got.end()) == std::multiset(want.begin(), want.end()));
  // Each rank's own appends keep their order.
  for (int r = 0; r < kRanks; ++r) {
    int last = -1;
    for (const auto& e : got) {
      if (e.rfind("r" + std::to_string(r) + "_", 0) != 0) continue;
      int i = std::stoi(e.substr(e.find('_') + 1));
      CHECK(i > last);
      last = i;
    }
  }
}

TEST_CASE("namespaces are isolated") {
  Store store;
  store.put_tensor("x", Tensor::flag());
  CHECK(store.exists(Kind::kTensor, "x"));
  CHECK_FALSE(store.exists(Kind::kDataset, "x"));
  CHECK_FALSE(store.exists(Kind::kList, "x"));
  CHECK_FALSE(store.exists(Kind::kModel, "x"));
  CHECK_FALSE(store.get_dataset("x"));
  CHECK(code_of([&] { store.list_append("L", "x"); }) == ErrorCode::kDangling);
  CHECK(code_of([&] { store.run_model("x", std::vector<std::string>{"x"},
                                      std::vector<std::string>{"y"}); }) ==
        ErrorCode::kNotFound);
}

TEST_CASE("randomized tensor round trip is bit exact") {
  std::mt19937_64 rng(42);
  Store store;
  for (int i = 0; i < 40; ++i) {
    auto t = testing::random_tensor(rng, 4, 100000);
    store.put_tensor("t", t);
    REQUIRE(store.get_tensor("t")->bit_equal(t));
  }
}

TEST_CASE("run_model") {
  Store store;
  SUBCASE("identity model returns its input") {
    store.put_model("I", mlp::MlpModel::identity(3));
    Tensor x({4, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
    store.put_tensor("x", x);
    std::vector<std::string> in{"x"}, out{"y"};
    store.run_model("I", in, out);
    CHECK(store.get_tensor("y")->bit_equal(x));
  }
  SUBCASE("two-layer net matches the local forward pass bitwise") {
    std::vector<std::size_t> widths{2, 5, 2};
    auto m = mlp::MlpModel::random(widths, mlp::Activation::kTanh, 7);
    store.put_model("M", mlp::deserialize(mlp::serialize(m)));
    Tensor q({3, 2}, {0.1, -0.2, 0.5, 0.25, -1.0, 2.0});
    store.put_tensor("q", q);
    std::vector<std::string> in{"q"}, out{"d"};
    store.run_model("M", in, out);
    auto local = mlp::forward(m, q);
    CHECK(store.get_tensor("d")->bit_equal(local));
    CHECK(store.get_tensor("d")->dims() == std::vector<std::size_t>{3, 2});
    store.run_model("M", in, std::vector<std::string>{"d2"});
    CHECK(store.get_tensor("d2")->bit_equal(*store.get_tensor("d")));
  }
  SUBCASE("deleted model is NOT_FOUND") {
    store.put_model("M", mlp::MlpModel::identity(2));
    store.put_tensor("x", Tensor({1, 2}, {1, 2}));
    store.delete_key(Kind::kModel, "M");
    CHECK(code_of([&] { store.run_model("M", std::vector<std::string>{"x"},
                                        std::vector<std::string>{"y"}); }) ==
          ErrorCode::kNotFound);
  }
  SUBCASE("feature count mismatch") {
    store.put_model("M", mlp::MlpModel::identity(2));
    store.put_tensor("x", Tensor({1, 3}, {1, 2, 3}));
    CHECK(code_of([&] { store.run_model("M", std::vector<std::string>{"x"},
                                        std::vector<std::string>{"y"}); }) ==
          ErrorCode::kShapeMismatch);
    CHECK_FALSE(store.get_tensor("y"));
  }
}

TEST_CASE("observer sees mutations in order") {
  Store store;
  std::vector<StoreEvent> events;
  store.set_observer([&](const StoreEvent& e) { events.push_back(e); });
  store.put_dataset(make_dataset("d"));
  store.list_append("L", "d");
  store.delete_key(Kind::kList, "L");
  store.delete_key(Kind::kList, "L");
  REQUIRE(events.size() == 3);
  CHECK(events[1].op == StoreEvent::Op::kAppend);
  CHECK(events[1].detail == 1);
  CHECK(events[2].op == StoreEvent::Op::kDelete);
}

TEST_CASE("hub topology connection count") {
  std::vector<std::uint64_t> counts{1024, 32, 16};
  CHECK(topology_connections(true, counts) == 16896);
  std::vector<std::uint64_t> idle{0, 0, 16};
  CHECK(topology_connections(true, idle) == 0);
  std::vector<std::uint64_t> small{8, 8, 4};
  CHECK(topology_connections(true, small) == 64);
  CHECK_THROWS_AS(topology_connections(false, counts), Error);
}
