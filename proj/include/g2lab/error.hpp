#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace g2lab {

// Machine-readable category carried by every library exception. The CLI maps
// these one-to-one onto process exit codes.
enum class ErrorCode {
  invalid_argument,
  overflow,
  duration_mismatch,
  geometry_mismatch,
  degenerate,
  corrupt_file,
  io,
  config,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace g2lab
