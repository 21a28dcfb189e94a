#pragma once

#include <stdexcept>
#include <string>

namespace itws {

enum class ErrorCode {
  InvalidParameter,
  Conflict,
  NotFound,
  ParseError,
  SpawnError,
  ProbeAborted,
  ProbeInvalid,
  InsufficientDiversity,
  InsufficientQuorum,
  NoMajority,
  TotalFailure,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::ParseError: return "parse-error";
    case ErrorCode::SpawnError: return "spawn-error";
    case ErrorCode::ProbeAborted: return "probe-aborted";
    case ErrorCode::ProbeInvalid: return "probe-invalid";
    case ErrorCode::InsufficientDiversity: return "insufficient-diversity";
    case ErrorCode::InsufficientQuorum: return "insufficient-quorum";
    case ErrorCode::NoMajority: return "no-majority";
    case ErrorCode::TotalFailure: return "total-failure";
  }
  return "unknown";
}

}  // namespace itws
