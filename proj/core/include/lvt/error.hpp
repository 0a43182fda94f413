// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lvt {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kNonOrthonormal,
  kEmptyViewSet,
  kMissingConditioning,
  kNonFinite,
  kFrameMismatch,
  kNonUnitDirection,
  kNonFiniteLoss,
  kMalformedPly,
  kMalformedManifest,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define LVT_CHECK(cond, code, msg)            \
  do {                                        \
    if (!(cond)) throw ::lvt::Error((code), (msg)); \
  } while (false)

}  // namespace lvt
