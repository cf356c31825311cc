#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ivtrial {

/// Failure categories raised by the library. Every thrown ivtrial::Error
/// carries one of these so callers (the Monte Carlo harness, the CLI) can
/// count or map failures without parsing messages.
enum class ErrorKind {
  DimensionMismatch,
  RankDeficient,
  Separation,
  NonConvergence,
  ColumnMismatch,
  UnknownNode,
  InvalidGraph,
  InvalidDesign,
  EmptyArm,
  EmptyStratum,
  NegativeComplierFraction,
  WeakInstrument,
  WeakInteraction,
  AdherenceOrderViolated,
  InvalidParam,
  TooManyResampleFailures,
  UnknownEstimator,
  ParseError,
  MissingColumn,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ivtrial
