// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_TESTS_MESHMOTION_PROTOCOL_HPP_
#define SIMORCH_TESTS_MESHMOTION_PROTOCOL_HPP_

#include <mutex>
#include <string>
#include <vector>

#include "simorch/meshmotion.hpp"
#include "simorch/store.hpp"

namespace simorch::testing {

/// Records store mutations and checks them against the mesh-motion
/// signalling protocol.
class ProtocolRecorder {
 public:
  explicit ProtocolRecorder(Store& store) {
    store.set_observer([this](const StoreEvent& e) {
      std::lock_guard lock(mu_);
      events_.push_back(e);
    });
  }

  std::vector<StoreEvent> events() const {
    std::lock_guard lock(mu_);
    return events_;
  }

  struct Verdict {
    std::size_t list_cycles = 0;    // full fill-then-delete rounds per list (min of both)
    bool lists_ok = true;           // every round filled 1..ranks in order, then deleted
    std::size_t model_cycles = 0;   // put followed by delete
    bool model_ok = true;           // strictly alternating put/delete, flag only after a put
    bool end_time_put = false;
    std::size_t zero_sized_puts = 0;
    std::string first_problem;
  };

  Verdict check(std::size_t ranks) const {
    namespace mm = meshmotion;
    Verdict v;
    auto problem = [&](const std::string& what) {
      if (v.first_problem.empty()) v.first_problem = what;
    };
    std::size_t cycles[2] = {0, 0}, fill[2] = {0, 0};
    bool model_live = false;
    for (const auto& e : events()) {
      // Metadata datasets carry strings only; any other empty put is a bug.
      const bool metadata = e.kind == Kind::kDataset && e.key.ends_with("_metadata");
      if (e.op == StoreEvent::Op::kPut && e.detail == 0 && !metadata) ++v.zero_sized_puts;
      for (int l = 0; l < 2; ++l) {
        if (e.kind != Kind::kList || e.key != (l == 0 ? mm::kPointsList : mm::kDisplacementsList))
          continue;
        if (e.op == StoreEvent::Op::kAppend) {
          if (e.detail != ++fill[l]) {
            v.lists_ok = false;
            problem(e.key + " append reached " + std::to_string(e.detail));
          }
        } else if (e.op == StoreEvent::Op::kDelete) {
          if (fill[l] != ranks) {
            v.lists_ok = false;
            problem(e.key + " deleted at length " + std::to_string(fill[l]));
          }
          ++cycles[l];
          fill[l] = 0;
        }
      }
      if (e.kind == Kind::kModel && e.key == mm::kModelKey) {
        if ((e.op == StoreEvent::Op::kPut) == model_live) {
          v.model_ok = false;
          problem("model put/delete out of order");
        }
        if (e.op == StoreEvent::Op::kDelete) ++v.model_cycles;
        model_live = e.op == StoreEvent::Op::kPut;
      }
      if (e.kind == Kind::kTensor && e.key == mm::kModelFlag && e.op == StoreEvent::Op::kPut &&
          !model_live) {
        v.model_ok = false;
        problem("flag set without a model");
      }
      if (e.kind == Kind::kTensor && e.key == mm::kEndTimeKey && e.op == StoreEvent::Op::kPut)
        v.end_time_put = true;
    }
    v.list_cycles = std::min(cycles[0], cycles[1]);
    if (fill[0] || fill[1]) {
      v.lists_ok = false;
      problem("lists left partially filled");
    }
    return v;
  }

 private:
  mutable std::mutex mu_;
  std::vector<StoreEvent> events_;
};

}  // namespace simorch::testing

#endif  // SIMORCH_TESTS_MESHMOTION_PROTOCOL_HPP_
