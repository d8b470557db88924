#pragma once

#include <stdexcept>
#include <string>

namespace stiefel {

enum class ErrorKind {
  Dimension,
  ConstraintViolation,
  TangencyViolation,
  RankDeficient,
  PivotFailure,
  DegenerateFrame,
  NotSymmetric,
  BadWeights,
  ValidationFailure,
  BaseMismatch,
  NotCritical,
  SolveFailure,
  DegenerateSpectrum,
  Parse,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "DimensionError";
    case ErrorKind::ConstraintViolation: return "ConstraintViolation";
    case ErrorKind::TangencyViolation: return "TangencyViolation";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::PivotFailure: return "PivotFailure";
    case ErrorKind::DegenerateFrame: return "DegenerateFrame";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::BadWeights: return "BadWeights";
    case ErrorKind::ValidationFailure: return "ValidationFailure";
    case ErrorKind::BaseMismatch: return "BaseMismatch";
    case ErrorKind::NotCritical: return "NotCritical";
    case ErrorKind::SolveFailure: return "SolveFailure";
    case ErrorKind::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorKind::Parse: return "ParseError";
  }
  return "Error";
}

/// Base class of every exception thrown by the library. `kind()` lets callers
/// (the CLI in particular) branch on the failure category without RTTI.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class KindedError : public Error {
 public:
  explicit KindedError(const std::string& what) : Error(K, what) {}
};

using DimensionError = KindedError<ErrorKind::Dimension>;
using TangencyViolation = KindedError<ErrorKind::TangencyViolation>;
using RankDeficient = KindedError<ErrorKind::RankDeficient>;
using PivotFailure = KindedError<ErrorKind::PivotFailure>;
using DegenerateFrame = KindedError<ErrorKind::DegenerateFrame>;
using NotSymmetric = KindedError<ErrorKind::NotSymmetric>;
using BadWeights = KindedError<ErrorKind::BadWeights>;
using ValidationFailure = KindedError<ErrorKind::ValidationFailure>;
using BaseMismatch = KindedError<ErrorKind::BaseMismatch>;
using NotCritical = KindedError<ErrorKind::NotCritical>;
using SolveFailure = KindedError<ErrorKind::SolveFailure>;
using DegenerateSpectrum = KindedError<ErrorKind::DegenerateSpectrum>;

/// Carries the largest entry of |M^T M - I| so callers can report how far off
/// the input was.
class ConstraintViolation : public Error {
 public:
  ConstraintViolation(double max_deviation, const std::string& what)
      : Error(ErrorKind::ConstraintViolation, what), max_deviation_(max_deviation) {}

  double max_deviation() const noexcept { return max_deviation_; }

 private:
  double max_deviation_;
};

/// Parse failure with the location (line number and/or JSON field path).
class ParseError : public Error {
 public:
  ParseError(const std::string& context, const std::string& what)
      : Error(ErrorKind::Parse, context.empty() ? what : context + ": " + what),
        context_(context),
        detail_(what) {}

  const std::string& context() const noexcept { return context_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string context_;
  std::string detail_;
};

}  // namespace stiefel
