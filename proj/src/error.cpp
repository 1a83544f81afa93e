#include "hatnav/error.hpp"

#include <cmath>

#include "hatnav/rng.hpp"

namespace hatnav {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kEmptyMesh: return "EmptyMesh";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kInvalidResolution: return "InvalidResolution";
    case ErrorCode::kDegenerateBounds: return "DegenerateBounds";
    case ErrorCode::kEmptyGrid: return "EmptyGrid";
    case ErrorCode::kNonUniformSpacing: return "NonUniformSpacing";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kStartBlocked: return "StartBlocked";
    case ErrorCode::kGoalBlocked: return "GoalBlocked";
    case ErrorCode::kNoFeasiblePath: return "NoFeasiblePath";
    case ErrorCode::kDivergedCost: return "DivergedCost";
    case ErrorCode::kWaypointBlocked: return "WaypointBlocked";
    case ErrorCode::kTooFewWaypoints: return "TooFewWaypoints";
    case ErrorCode::kEmptyCloud: return "EmptyCloud";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

double Rng::normal() {
  // Box-Muller; one value per call keeps the stream position predictable.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view label) {
  // FNV-1a over the label, mixed with the root through one SplitMix step.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  Rng mix(root ^ h);
  return mix.next();
}

}  // namespace hatnav
