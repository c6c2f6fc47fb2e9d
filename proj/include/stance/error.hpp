#pragma once

#include <stdexcept>
#include <string>

namespace stance {

enum class ErrorCode {
  MalformedDocument,
  OrphanPost,
  MultipleSources,
  CycleDetected,
  DuplicatePost,
  UnknownPost,
  MixedThreads,
  DimensionMismatch,
  ShapeMismatch,
  EmptyMask,
  EmptyDataset,
  NonFiniteLoss,
  InvalidConfig,
  LengthMismatch,
  EmptyInput,
  EmptyMatrix,
  Io,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries a code so callers (and tests)
// can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stance
