#pragma once

#include <stdexcept>
#include <string>

namespace memfront {

enum class ErrorCode {
  InvalidArgument,
  ZeroWeight,
  NegativeKernel,
  DivergentMoment,
  InsufficientHistory,
  NotBistable,
  OutOfRegime,
  NoConvergence,
  DomainTooSmall,
  MonotonicityViolation,
  BracketFailure,
  StabilityViolation,
  NaNDetected,
  FrontExited,
  NoCrossing,
  NotPositive,
  ResolutionError,
  ConfigError,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroWeight: return "ZeroWeight";
    case ErrorCode::NegativeKernel: return "NegativeKernel";
    case ErrorCode::DivergentMoment: return "DivergentMoment";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::NotBistable: return "NotBistable";
    case ErrorCode::OutOfRegime: return "OutOfRegime";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DomainTooSmall: return "DomainTooSmall";
    case ErrorCode::MonotonicityViolation: return "MonotonicityViolation";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::StabilityViolation: return "StabilityViolation";
    case ErrorCode::NaNDetected: return "NaNDetected";
    case ErrorCode::FrontExited: return "FrontExited";
    case ErrorCode::NoCrossing: return "NoCrossing";
    case ErrorCode::NotPositive: return "NotPositive";
    case ErrorCode::ResolutionError: return "ResolutionError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace memfront
