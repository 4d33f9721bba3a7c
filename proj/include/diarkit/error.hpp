// diarkit/error.hpp
//
// Error type shared by every diarkit module.

#pragma once

#include <stdexcept>
#include <string>

namespace diarkit {

enum class ErrorCode {
  kNotFound,
  kUnsupportedFormat,
  kCorruptHeader,
  kTruncatedFile,
  kIoError,
  kEmptyBuffer,
  kMalformedLine,
  kNonNumericTime,
  kNonPositiveDuration,
  kSilentInput,
  kLengthMismatch,
  kTooShort,
  kTooFewFrames,
  kSegmentOutOfRange,
  kDimMismatch,
  kZeroVector,
  kEmptyInput,
  kKTooLarge,
  kEmptyMatrix,
  kMixedFiles,
  kEmptyReference,
  kEmptyScores,
  kZeroBaseline,
  kIndexOutOfRange,
  kImpossibleAlignment,
  kUnnormalizedRow,
  kLabelOutOfRange,
  kEmptyData,
  kBadSpeakerCount,
  kBadSplit,
  kUnpairedFile,
  kInvalidArgument,
};

inline const char *to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kCorruptHeader: return "CorruptHeader";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kEmptyBuffer: return "EmptyBuffer";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kNonNumericTime: return "NonNumericTime";
    case ErrorCode::kNonPositiveDuration: return "NonPositiveDuration";
    case ErrorCode::kSilentInput: return "SilentInput";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kTooFewFrames: return "TooFewFrames";
    case ErrorCode::kSegmentOutOfRange: return "SegmentOutOfRange";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kMixedFiles: return "MixedFiles";
    case ErrorCode::kEmptyReference: return "EmptyReference";
    case ErrorCode::kEmptyScores: return "EmptyScores";
    case ErrorCode::kZeroBaseline: return "ZeroBaseline";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kImpossibleAlignment: return "ImpossibleAlignment";
    case ErrorCode::kUnnormalizedRow: return "UnnormalizedRow";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kEmptyData: return "EmptyData";
    case ErrorCode::kBadSpeakerCount: return "BadSpeakerCount";
    case ErrorCode::kBadSplit: return "BadSplit";
    case ErrorCode::kUnpairedFile: return "UnpairedFile";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// Thrown by every diarkit operation that rejects its input. `line()` is set
// only by the RTTM parser (1-based), 0 otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message, int line = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        line_(line) {}

  ErrorCode code() const { return code_; }
  int line() const { return line_; }

 private:
  ErrorCode code_;
  int line_;
};

}  // namespace diarkit
