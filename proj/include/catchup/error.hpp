#pragma once

#include <stdexcept>
#include <string>

namespace catchup {

enum class ErrorCode {
  UnsortedTokens,
  InvalidRequest,
  BackendUnavailable,
  UnknownParticipant,
  UnknownTarget,
  MalformedPayload,
  ProtocolError,
  BadConfig,
  SchemaError,
  ScheduleOutOfRange,
  ParseError,
  VersionError,
  NoRejoinFound,
  ClockError,
  PortInUse,
  IoError,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace catchup
