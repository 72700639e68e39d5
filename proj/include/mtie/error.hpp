#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mtie {

enum class ErrorCode {
  // schema / templates
  MalformedSchema,
  InvalidSchema,
  UnresolvedTemplate,
  InvalidTemplate,
  UnknownType,
  SlotMissing,
  TaskMismatch,
  // chat
  TransportError,
  RateLimited,
  ReplayMiss,
  EmptyReply,
  UnsupportedForm,
  NetworkForbidden,
  MalformedTranscript,
  // parse
  Unparseable,
  ArityMismatch,
  // datasets
  MalformedRecord,
  UnknownLabel,
  BadSize,
  // eval
  RegimeUnsupported,
  IdMismatch,
  // cli / batch
  ConfigError,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported through this one exception type; the
// code distinguishes the failure kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace mtie
