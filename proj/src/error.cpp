#include "dpdopt/error.hpp"

namespace dpdopt {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::kDegenerateWeights: return "DegenerateWeights";
    case ErrorCode::kNotSymmetric: return "NotSymmetric";
    case ErrorCode::kNotStochastic: return "NotStochastic";
    case ErrorCode::kNegativeEntry: return "NegativeEntry";
    case ErrorCode::kZeroSelfWeight: return "ZeroSelfWeight";
    case ErrorCode::kSpectralGapViolation: return "SpectralGapViolation";
    case ErrorCode::kUnknownTopology: return "UnknownTopology";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSingularPoint: return "SingularPoint";
    case ErrorCode::kNotUnitNorm: return "NotUnitNorm";
    case ErrorCode::kNonFiniteState: return "NonFiniteState";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kMissingPerAgentData: return "MissingPerAgentData";
    case ErrorCode::kNotAStrictSaddle: return "NotAStrictSaddle";
  }
  return "Unknown";
}

}  // namespace dpdopt
