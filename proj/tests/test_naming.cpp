// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "simorch/error.hpp"
#include "simorch/naming.hpp"
#include "test_support.hpp"

using namespace simorch;

TEST_CASE("render substitutes placeholders only") {
  CHECK(render("a_{{ x }}_{{y}}", {{"x", "1"}, {"y", "two"}}) == "a_1_two");
  CHECK(render("plain {not} {{ x }}", {{"x", "7"}}) == "plain {not} 7");
  try {
    render("{{ missing }}", {});
    FAIL("expected UNBOUND_PLACEHOLDER");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnboundPlaceholder);
    CHECK(e.message().find("missing") != std::string::npos);
  }
}

TEST_CASE("default convention produces the documented key") {
  auto n = NamingConvention::defaults_for("pUPhi");
  CHECK(n.full_key(0, 0, "p", "inlet") ==
        "{pUPhi_time_index_0_mpi_rank_0}.field_name_p_patch_inlet");
  CHECK(n.dataset_name(12, 3) == "pUPhi_time_index_12_mpi_rank_3");
}

TEST_CASE("empty patches produce no block") {
  CHECK_FALSE(FieldBlock::make("p", "wall", {}, 1));
  auto b = FieldBlock::make("U", "inlet", {1, 2, 3, 4, 5, 6}, 3);
  REQUIRE(b);
  CHECK(b->values.dims() == std::vector<std::size_t>{2, 3});
}

TEST_CASE("publisher and blind consumer agree on keys") {
  testing::ServerFixture fx;
  auto producer = fx.client();
  FieldPublisher pub(producer, "pUPhi");
  pub.publish_metadata();

  std::vector<FieldBlock> blocks;
  for (const char* patch : {"internal", "inlet"}) {
    blocks.push_back(*FieldBlock::make("p", patch, {1.0, 2.0}, 1));
    blocks.push_back(*FieldBlock::make("U", patch, {1, 0, 0, 0, 1, 0}, 3));
    blocks.push_back(*FieldBlock::make("phi", patch, {0.5, 0.25}, 1));
  }
  auto ds = pub.send_fields(2, 1, blocks);
  CHECK(ds == "pUPhi_time_index_2_mpi_rank_1");
  auto stored = fx.store.get_dataset(ds);
  REQUIRE(stored);
  CHECK(stored->tensors.size() == 6);

  auto consumer = fx.client();
  auto resolver = FieldResolver::from_store(consumer, "pUPhi");
  auto key = resolver.field_key("p", 1, 2, "inlet");
  CHECK(key == "{pUPhi_time_index_2_mpi_rank_1}.field_name_p_patch_inlet");
  auto p = consumer.get_field(key);
  REQUIRE(p);
  CHECK(p->data()[1] == 2.0);
  auto u = consumer.get_field(resolver.field_key("U", 1, 2));
  REQUIRE(u);
  CHECK(u->dims() == std::vector<std::size_t>{2, 3});
}

TEST_CASE("publisher errors") {
  Store store;
  auto c = Client::in_process(store);
  CHECK_THROWS_AS(FieldPublisher(c, ""), Error);
  FieldPublisher pub(c, "x");
  try {
    pub.send_fields(0, 0, {});
    FAIL("expected ZERO_SIZED");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kZeroSized);
  }
  try {
    FieldResolver::from_store(c, "absent", PollSpec{std::chrono::milliseconds(1), 3});
    FAIL("expected TIMEOUT");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTimeout);
  }
  NamingConvention bad{"{{ who }}", "f"};
  FieldPublisher custom(c, "y", bad);
  CHECK_THROWS_AS(custom.send_fields(0, 0, {*FieldBlock::make("p", "a", {1.0}, 1)}), Error);
}

TEST_CASE("publisher respects the data source prefix") {
  Store store;
  auto c = Client::in_process(store);
  c.set_data_source("m1");
  FieldPublisher pub(c, "s");
  pub.publish_metadata();
  pub.send_fields(0, 0, {*FieldBlock::make("p", "internal", {3.0}, 1)});
  CHECK(store.exists(Kind::kDataset, "m1.s_metadata"));
  CHECK(store.exists(Kind::kDataset, "m1.s_time_index_0_mpi_rank_0"));
  auto r = FieldResolver::from_store(c, "s");
  CHECK(c.get_field(r.field_key("p", 0, 0))->data()[0] == 3.0);
}
