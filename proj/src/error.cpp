#include "kafr/error.hpp"

#include <fmt/format.h>

namespace kafr {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::UnknownClassId: return "UnknownClassId";
    case ErrorKind::EmptyStream: return "EmptyStream";
    case ErrorKind::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorKind::EmptyTracks: return "EmptyTracks";
    case ErrorKind::RolesUnavailable: return "RolesUnavailable";
    case ErrorKind::InvalidFraction: return "InvalidFraction";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::UnreachableTarget: return "UnreachableTarget";
    case ErrorKind::UncoveredFrame: return "UncoveredFrame";
    case ErrorKind::ZeroBaseline: return "ZeroBaseline";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

UnreachableTarget::UnreachableTarget(double target, double ceiling)
    : Error(ErrorKind::UnreachableTarget,
            fmt::format("target fraction {} unreachable; ceiling is {}", target, ceiling)),
      target_(target),
      ceiling_(ceiling) {}

}  // namespace kafr
