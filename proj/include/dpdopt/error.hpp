#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dpdopt {

enum class ErrorCode {
  kDisconnectedGraph,
  kDegenerateWeights,
  kNotSymmetric,
  kNotStochastic,
  kNegativeEntry,
  kZeroSelfWeight,
  kSpectralGapViolation,
  kUnknownTopology,
  kDimensionMismatch,
  kSingularPoint,
  kNotUnitNorm,
  kNonFiniteState,
  kInvalidConfig,
  kMissingPerAgentData,
  kNotAStrictSaddle,
};

// Stable name used in diagnostics ("SpectralGapViolation", ...).
std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_name(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dpdopt
