#include "partmatch/error.h"

namespace partmatch {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kIndexOutOfRange: return "index out of range";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kUnsupportedVersion: return "unsupported version";
    case ErrorCode::kDimensionOverflow: return "dimension overflow";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kDimMismatch: return "dimension mismatch";
    case ErrorCode::kNoSupport: return "no support";
    case ErrorCode::kNoVisibleVertex: return "no visible vertex";
    case ErrorCode::kTooFewSamples: return "too few samples";
    case ErrorCode::kNoViewpoint: return "no viewpoint";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kSchema: return "schema mismatch";
    case ErrorCode::kIo: return "io error";
  }
  return "unknown";
}

}  // namespace partmatch
