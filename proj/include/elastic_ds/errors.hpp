#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace elastic_ds {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateFrame,
  kNonMonotoneTimestamps,
  kInsufficientData,
  kEmDidNotImprove,
  kSingularCovariance,
  kRankDeficientSystem,
  kZeroLengthChain,
  kIndexCollision,
  kOptimizationDiverged,
  kInfeasibleAttractor,
  kViaPointNotOnDemo,
  kNonMonotoneViaPoints,
  kChainGapTooLarge,
  kNonFiniteState,
  kDegenerateDirection,
  kParseError,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported with this exception type; code() lets
// callers (the CLI in particular) map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace elastic_ds
