#pragma once

#include <stdexcept>
#include <string>

namespace licattack {

enum class ErrorCode {
  kIo = 1,
  kFormat,
  kValidation,
  kNumeric,
  kTraining,
  kInternal,
};

// Single exception type for the whole library; the code maps 1:1 onto the
// C API status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string msg)
      : std::runtime_error(std::move(msg)), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace licattack
