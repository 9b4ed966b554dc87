// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "simorch/error.hpp"

namespace simorch {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformed: return "MALFORMED";
    case ErrorCode::kZeroSized: return "ZERO_SIZED";
    case ErrorCode::kNotFound: return "NOT_FOUND";
    case ErrorCode::kDangling: return "DANGLING";
    case ErrorCode::kShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::kMalformedModel: return "MALFORMED_MODEL";
    case ErrorCode::kNonFiniteLoss: return "NON_FINITE_LOSS";
    case ErrorCode::kNoConvergence: return "NO_CONVERGENCE";
    case ErrorCode::kRankOutOfRange: return "RANK_OUT_OF_RANGE";
    case ErrorCode::kNotSpd: return "NOT_SPD";
    case ErrorCode::kUnboundPlaceholder: return "UNBOUND_PLACEHOLDER";
    case ErrorCode::kInvalidName: return "INVALID_NAME";
    case ErrorCode::kOvershoot: return "OVERSHOOT";
    case ErrorCode::kTimeout: return "TIMEOUT";
    case ErrorCode::kTransport: return "TRANSPORT";
    case ErrorCode::kProtocol: return "PROTOCOL";
    case ErrorCode::kWorkerStarved: return "WORKER_STARVED";
    case ErrorCode::kIncomplete: return "INCOMPLETE";
    case ErrorCode::kOutOfBounds: return "OUT_OF_BOUNDS";
    case ErrorCode::kModelStarved: return "MODEL_STARVED";
    case ErrorCode::kInvertedCell: return "INVERTED_CELL";
    case ErrorCode::kSpawnFailed: return "SPAWN_FAILED";
    case ErrorCode::kInvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::kWorkflow: return "WORKFLOW";
  }
  return "UNKNOWN";
}

}  // namespace simorch
