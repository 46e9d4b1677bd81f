#pragma once

#include <stdexcept>
#include <string>

namespace su2vol {

enum class ErrorKind {
  NotOnGroup,
  NotSPD,
  InvalidParameters,
  GimbalLock,
  OutOfRegime,
  OutOfRange,
  MalformedTree,
  Parse,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotOnGroup: return "NotOnGroup";
    case ErrorKind::NotSPD: return "NotSPD";
    case ErrorKind::InvalidParameters: return "InvalidParameters";
    case ErrorKind::GimbalLock: return "GimbalLock";
    case ErrorKind::OutOfRegime: return "OutOfRegime";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::MalformedTree: return "MalformedTree";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

/// Every failure raised by the library carries its kind so callers (the CLI in
/// particular) can map it onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace su2vol
