#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kafr {

enum class ErrorKind {
  MalformedRecord,
  UnknownClassId,
  EmptyStream,
  DegeneratePolygon,
  EmptyTracks,
  RolesUnavailable,
  InvalidFraction,
  DimensionMismatch,
  EmptyInput,
  UnreachableTarget,
  UncoveredFrame,
  ZeroBaseline,
  InvalidParams,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every recoverable data or parameter error in the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Calibration could not reach the requested fraction even with the smallest
/// possible budget. `ceiling` is the best achievable fraction.
class UnreachableTarget : public Error {
 public:
  UnreachableTarget(double target, double ceiling);

  double target() const noexcept { return target_; }
  double ceiling() const noexcept { return ceiling_; }

 private:
  double target_;
  double ceiling_;
};

}  // namespace kafr
