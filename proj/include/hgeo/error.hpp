#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hgeo {

enum class ErrorCode {
  DuplicateRegionId,
  InvalidCoordinate,
  NonPositivePopulation,
  UnknownRegionId,
  NegativeWeight,
  NonPositiveProbability,
  EmptyArrivals,
  StepTooLarge,
  InvalidParameter,
  TooFewPoints,
  EmptyInput,
  NoScorableCandidate,
  TooFewCommonRegions,
  NonMonotoneCumulative,
  ParseError,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateRegionId: return "DuplicateRegionId";
    case ErrorCode::InvalidCoordinate: return "InvalidCoordinate";
    case ErrorCode::NonPositivePopulation: return "NonPositivePopulation";
    case ErrorCode::UnknownRegionId: return "UnknownRegionId";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::NonPositiveProbability: return "NonPositiveProbability";
    case ErrorCode::EmptyArrivals: return "EmptyArrivals";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoScorableCandidate: return "NoScorableCandidate";
    case ErrorCode::TooFewCommonRegions: return "TooFewCommonRegions";
    case ErrorCode::NonMonotoneCumulative: return "NonMonotoneCumulative";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code; the
/// message is prefixed with the code name so CLI output stays greppable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hgeo
