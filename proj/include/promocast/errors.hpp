#pragma once

#include <stdexcept>
#include <string>

namespace promocast {

enum class ErrorCode {
  // core
  NonPositiveDemand,
  NonPositivePrice,
  LengthMismatch,
  InconsistentPromoPrice,
  TrainLenOutOfRange,
  NonPositiveInput,
  // metrics
  TooShort,
  ZeroMean,
  NegativeCov,
  ConstantInput,
  ZeroDenominator,
  // arima
  SeriesTooShort,
  NonInvertibleOptimum,
  SingularRegression,
  MissingFutureCovariate,
  // ets
  ParamOutOfRange,
  DegenerateOptimum,
  // dlr
  NonPositiveInnovationVariance,
  ConstantPrice,
  // hybrid
  TooFewNonPromoWeeks,
  EmptyRecords,
  UnknownPromoType,
  // ml
  ConstantColumn,
  TooFewRows,
  NoConvergence,
  DivergedLoss,
  SchemaMismatch,
  // datagen
  InvalidConfig,
  CalibrationFailure,
  // evalharness / cli
  ModelFitFailure,
  IoError,
  UnknownSkul,
  UnknownModel,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::NonPositiveDemand: return "NonPositiveDemand";
    case ErrorCode::NonPositivePrice: return "NonPositivePrice";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InconsistentPromoPrice: return "InconsistentPromoPrice";
    case ErrorCode::TrainLenOutOfRange: return "TrainLenOutOfRange";
    case ErrorCode::NonPositiveInput: return "NonPositiveInput";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::ZeroMean: return "ZeroMean";
    case ErrorCode::NegativeCov: return "NegativeCov";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::NonInvertibleOptimum: return "NonInvertibleOptimum";
    case ErrorCode::SingularRegression: return "SingularRegression";
    case ErrorCode::MissingFutureCovariate: return "MissingFutureCovariate";
    case ErrorCode::ParamOutOfRange: return "ParamOutOfRange";
    case ErrorCode::DegenerateOptimum: return "DegenerateOptimum";
    case ErrorCode::NonPositiveInnovationVariance: return "NonPositiveInnovationVariance";
    case ErrorCode::ConstantPrice: return "ConstantPrice";
    case ErrorCode::TooFewNonPromoWeeks: return "TooFewNonPromoWeeks";
    case ErrorCode::EmptyRecords: return "EmptyRecords";
    case ErrorCode::UnknownPromoType: return "UnknownPromoType";
    case ErrorCode::ConstantColumn: return "ConstantColumn";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::CalibrationFailure: return "CalibrationFailure";
    case ErrorCode::ModelFitFailure: return "ModelFitFailure";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnknownSkul: return "UnknownSkul";
    case ErrorCode::UnknownModel: return "UnknownModel";
  }
  return "UnknownError";
}

/// Library-wide exception carrying a machine-checkable code.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace promocast
