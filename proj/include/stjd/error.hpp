#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stjd {

// Machine-readable failure codes. The CLI prints the code name verbatim.
enum class ErrorCode {
  kTruncatedFile,
  kMalformedNumber,
  kJointCountMismatch,
  kEmptySequence,
  kInvalidArgument,
  kIndexOutOfRange,
  kNonFiniteInput,
  kSequenceTooShort,
  kTooFewJoints,
  kMultiChannelUnsupported,
  kPartMapIncomplete,
  kUnsupportedChannelCount,
  kMaskShapeMismatch,
  kShapeMismatch,
  kEmptyMask,
  kEmptyBank,
  kDegenerateSplit,
  kZeroVariance,
  kLengthMismatch,
  kUnknownClass,
  kInvalidConfig,
  kIoError,
  kFormatError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stjd
