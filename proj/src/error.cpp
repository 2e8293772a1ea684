#include "stjd/error.hpp"

namespace stjd {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kMalformedNumber: return "MalformedNumber";
    case ErrorCode::kJointCountMismatch: return "JointCountMismatch";
    case ErrorCode::kEmptySequence: return "EmptySequence";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kSequenceTooShort: return "SequenceTooShort";
    case ErrorCode::kTooFewJoints: return "TooFewJoints";
    case ErrorCode::kMultiChannelUnsupported: return "MultiChannelUnsupported";
    case ErrorCode::kPartMapIncomplete: return "PartMapIncomplete";
    case ErrorCode::kUnsupportedChannelCount: return "UnsupportedChannelCount";
    case ErrorCode::kMaskShapeMismatch: return "MaskShapeMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kEmptyBank: return "EmptyBank";
    case ErrorCode::kDegenerateSplit: return "DegenerateSplit";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kUnknownClass: return "UnknownClass";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kFormatError: return "FormatError";
  }
  return "Unknown";
}

}  // namespace stjd
