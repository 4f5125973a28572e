#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ossync {

/// Failure categories raised by the synthesis, solver and simulation layers.
enum class ErrorKind {
  kInvalidArgument,
  kDimensionMismatch,
  kSingularMatrix,
  kSpectraOverlap,
  kNotStabilizable,
  kNoStabilizingSolution,
  kNoSpanningTree,
  kInconsistentCheck,
  kSigmaTooLarge,
  kDuplicateFrequency,
  kIrrationalRatio,
  kNoSolution,
  kImaginaryAxisHamiltonian,
  kSingularKkt,
  kMaxIter,
  kNumericalBreakdown,
  kInfeasibleInitialPoint,
  kNoFeasibleQ,
  kStalledStep,
  kNonFiniteState,
  kWindowOutOfRange,
  kParseError,
  kMissingArtifact,
};

std::string_view to_string(ErrorKind kind);

class OssError : public std::runtime_error {
 public:
  OssError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Regulator equations without an exact solution. Carries the least-squares
// residual so callers can report how far from exact tracking the agent is.
class NoSolutionError : public OssError {
 public:
  NoSolutionError(double residual, const std::string& what)
      : OssError(ErrorKind::kNoSolution, what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace ossync
