#pragma once

#include <stdexcept>
#include <string>

namespace wta {

enum class ErrorCode {
  invalid_argument = 1,
  config = 2,
  io = 3,
  diverged = 4,
  unsupported = 5,
  internal = 6,
};

// Every failure raised by the core carries one of the codes above so the
// C boundary can translate it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorCode::invalid_argument, what);
}

}  // namespace wta
