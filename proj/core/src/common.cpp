#include "farview/common.hpp"

namespace farview {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kProtocol: return "protocol error";
    case ErrorCode::kFraming: return "framing error";
    case ErrorCode::kIncompleteMessage: return "incomplete message";
    case ErrorCode::kArgument: return "argument error";
    case ErrorCode::kAllocation: return "allocation error";
    case ErrorCode::kPermission: return "permission error";
    case ErrorCode::kTranslationFault: return "translation fault";
    case ErrorCode::kBounds: return "bounds error";
    case ErrorCode::kResourceExhausted: return "resource exhausted";
    case ErrorCode::kRequest: return "request error";
    case ErrorCode::kUnknownPipeline: return "unknown pipeline";
    case ErrorCode::kRegionBusy: return "region busy";
    case ErrorCode::kAborted: return "aborted";
    case ErrorCode::kDoubleFree: return "double free";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kIo: return "io error";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kOracleMismatch: return "oracle mismatch";
  }
  return "unknown error";
}

}  // namespace farview
