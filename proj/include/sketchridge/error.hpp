#pragma once

#include <stdexcept>
#include <string>

namespace sketchridge {

enum class ErrorKind {
  InvalidInput,
  SingularSystem,
  InvalidSparsity,
  DimensionMismatch,
  InstanceTooLarge,
  InvalidLambda,
  EmptyGrid,
  DegenerateGcv,
  NoValidLambda,
  InvalidConfig,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::InvalidSparsity: return "InvalidSparsity";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorKind::InvalidLambda: return "InvalidLambda";
    case ErrorKind::EmptyGrid: return "EmptyGrid";
    case ErrorKind::DegenerateGcv: return "DegenerateGcv";
    case ErrorKind::NoValidLambda: return "NoValidLambda";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace sketchridge
