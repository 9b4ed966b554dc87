// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_ERROR_HPP_
#define SIMORCH_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace simorch {

enum class ErrorCode {
  kMalformed,
  kZeroSized,
  kNotFound,
  kDangling,
  kShapeMismatch,
  kMalformedModel,
  kNonFiniteLoss,
  kNoConvergence,
  kRankOutOfRange,
  kNotSpd,
  kUnboundPlaceholder,
  kInvalidName,
  kOvershoot,
  kTimeout,
  kTransport,
  kProtocol,
  kWorkerStarved,
  kIncomplete,
  kOutOfBounds,
  kModelStarved,
  kInvertedCell,
  kSpawnFailed,
  kInvalidConfig,
  kWorkflow,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The reason without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace simorch

#endif  // SIMORCH_ERROR_HPP_
