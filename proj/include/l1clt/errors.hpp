#pragma once

#include <stdexcept>
#include <string>

namespace l1clt {

enum class ErrorCode {
  InvalidArgument,
  NonUnitIntegral,
  Unbounded,
  DomainError,
  QuadratureFailure,
  DegenerateSet,
  EmptySet,
  DegenerateDenominator,
  NonPositiveValue,
  WindowTooSmall,
  PartitionDegenerate,
  SeriesDiverges,
  ScheduleViolation,
  RejectionTooSlow,
  Overflow,
  ConfigError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonUnitIntegral: return "NonUnitIntegral";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::DegenerateSet: return "DegenerateSet";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::WindowTooSmall: return "WindowTooSmall";
    case ErrorCode::PartitionDegenerate: return "PartitionDegenerate";
    case ErrorCode::SeriesDiverges: return "SeriesDiverges";
    case ErrorCode::ScheduleViolation: return "ScheduleViolation";
    case ErrorCode::RejectionTooSlow: return "RejectionTooSlow";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

// All library failures carry a code so the CLI can map them to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace l1clt
