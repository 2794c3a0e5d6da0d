#pragma once

#include <stdexcept>
#include <string>

namespace sohkit {

// Failure categories surfaced by the library. Each maps to one class of
// precondition or runtime failure so callers (and tests) can dispatch on it.
enum class ErrorCode {
  SchemaError,
  EmptyInput,
  InsufficientData,
  AnchorNotReached,
  MalformedCurve,
  MissingPhase,
  InvalidNominal,
  EmptyWindow,
  DegenerateDistribution,
  UndefinedCorrelation,
  NoInformativeFeatures,
  InvalidHyperparameter,
  NotPositiveDefinite,
  FitFailure,
  DimensionMismatch,
  NoModels,
  ConfigError,
  IoError,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::SchemaError: return "schema-error";
    case ErrorCode::EmptyInput: return "empty-input";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::AnchorNotReached: return "anchor-not-reached";
    case ErrorCode::MalformedCurve: return "malformed-curve";
    case ErrorCode::MissingPhase: return "missing-phase";
    case ErrorCode::InvalidNominal: return "invalid-nominal";
    case ErrorCode::EmptyWindow: return "empty-window";
    case ErrorCode::DegenerateDistribution: return "degenerate-distribution";
    case ErrorCode::UndefinedCorrelation: return "undefined-correlation";
    case ErrorCode::NoInformativeFeatures: return "no-informative-features";
    case ErrorCode::InvalidHyperparameter: return "invalid-hyperparameter";
    case ErrorCode::NotPositiveDefinite: return "not-positive-definite";
    case ErrorCode::FitFailure: return "fit-failure";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::NoModels: return "no-models";
    case ErrorCode::ConfigError: return "config-error";
    case ErrorCode::IoError: return "io-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace sohkit
