#pragma once

#include <stdexcept>
#include <string>

namespace pdm {

enum class ErrorCode {
  invalid_argument,
  size_mismatch,
  unsupported_bit_depth,
  io,
  parse,
  accel_mismatch,
  no_session,
  invariant,
};

const char* to_string(ErrorCode code) noexcept;

/// Library-wide exception. The code distinguishes failure classes that callers
/// (CLI exit codes, HTTP status mapping, tests) need to tell apart.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pdm
