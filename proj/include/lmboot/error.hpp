#pragma once

#include <stdexcept>
#include <string>

namespace lmboot {

enum class ErrorKind {
  kInvalidParameter,
  kInvalidDesign,
  kNumericalDegeneracy,
  kDegenerateInput,
  kUnsupportedOrder,
  kNonConvergence,
  kIo,
};

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidParameter: return "invalid parameter";
    case ErrorKind::kInvalidDesign: return "invalid design";
    case ErrorKind::kNumericalDegeneracy: return "numerical degeneracy";
    case ErrorKind::kDegenerateInput: return "degenerate input";
    case ErrorKind::kUnsupportedOrder: return "unsupported order";
    case ErrorKind::kNonConvergence: return "non-convergence";
    case ErrorKind::kIo: return "i/o error";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace lmboot
