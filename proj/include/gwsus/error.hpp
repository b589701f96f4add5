#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gwsus {

enum class ErrorCode {
  DuplicateOrigin,
  AlreadyRegistered,
  DepthExceeded,
  CycleDetected,
  InvalidParent,
  Unregistered,
  UnknownNode,
  DuplicateUpdateId,
  InvalidArtifact,
  NotNeeded,
  NegativeDuration,
  InvalidLedger,
  KeyMismatch,
  ZeroBandwidth,
  InvalidConfig,
  IncomparableRuns,
  UnknownEvent,
  UsageError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateOrigin: return "DuplicateOrigin";
    case ErrorCode::AlreadyRegistered: return "AlreadyRegistered";
    case ErrorCode::DepthExceeded: return "DepthExceeded";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::InvalidParent: return "InvalidParent";
    case ErrorCode::Unregistered: return "Unregistered";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::DuplicateUpdateId: return "DuplicateUpdateId";
    case ErrorCode::InvalidArtifact: return "InvalidArtifact";
    case ErrorCode::NotNeeded: return "NotNeeded";
    case ErrorCode::NegativeDuration: return "NegativeDuration";
    case ErrorCode::InvalidLedger: return "InvalidLedger";
    case ErrorCode::KeyMismatch: return "KeyMismatch";
    case ErrorCode::ZeroBandwidth: return "ZeroBandwidth";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IncomparableRuns: return "IncomparableRuns";
    case ErrorCode::UnknownEvent: return "UnknownEvent";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the condition rather than the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gwsus
