#pragma once

#include <stdexcept>
#include <string>

namespace qlmi {

enum class ErrorCode {
  InvalidArgument = 1,
  ModeMismatch,
  NotSymplectic,
  Unphysical,
  SingularConditioning,
  NoUniqueSteadyState,
  StepFailure,
  ParseError,
  ValidationError,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures surface as this type; `code()` lets the C API and the
// CLI map them onto stable integer codes.
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

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond)
    fail(code, what);
}

}  // namespace qlmi
