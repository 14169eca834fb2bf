// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace msgs {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  Io,
  Numeric,
  Unsupported,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the core library. The C API maps the code onto its
/// status enum and keeps the message as the thread's last error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Io: return "io";
    case ErrorCode::Numeric: return "numeric";
    case ErrorCode::Unsupported: return "unsupported";
  }
  return "unknown";
}

}  // namespace msgs
