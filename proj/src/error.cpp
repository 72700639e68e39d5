#include "mtie/error.hpp"

namespace mtie {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedSchema: return "MalformedSchema";
    case ErrorCode::InvalidSchema: return "InvalidSchema";
    case ErrorCode::UnresolvedTemplate: return "UnresolvedTemplate";
    case ErrorCode::InvalidTemplate: return "InvalidTemplate";
    case ErrorCode::UnknownType: return "UnknownType";
    case ErrorCode::SlotMissing: return "SlotMissing";
    case ErrorCode::TaskMismatch: return "TaskMismatch";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::ReplayMiss: return "ReplayMiss";
    case ErrorCode::EmptyReply: return "EmptyReply";
    case ErrorCode::UnsupportedForm: return "UnsupportedForm";
    case ErrorCode::NetworkForbidden: return "NetworkForbidden";
    case ErrorCode::MalformedTranscript: return "MalformedTranscript";
    case ErrorCode::Unparseable: return "Unparseable";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::BadSize: return "BadSize";
    case ErrorCode::RegimeUnsupported: return "RegimeUnsupported";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace mtie
