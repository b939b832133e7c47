#pragma once

#include <stdexcept>
#include <string>

namespace bohm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BOHM_DEFINE_ERROR(Name)          \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

// lattice
BOHM_DEFINE_ERROR(MemoryBudgetExceeded);
BOHM_DEFINE_ERROR(InvalidExtent);
BOHM_DEFINE_ERROR(AxisMismatch);
BOHM_DEFINE_ERROR(FormatError);

// schrodinger
BOHM_DEFINE_ERROR(StepperBoundaryMismatch);
BOHM_DEFINE_ERROR(ConvergenceFailure);

// currents / subsystem
BOHM_DEFINE_ERROR(NonuniformFrames);
BOHM_DEFINE_ERROR(PartitionMismatch);
BOHM_DEFINE_ERROR(DenseBudgetExceeded);

// bohmian
BOHM_DEFINE_ERROR(TrajectoryEscapedDomain);

// classical_phase
BOHM_DEFINE_ERROR(AnalyticDensityUnavailable);
BOHM_DEFINE_ERROR(InsufficientSamples);

// statmech
BOHM_DEFINE_ERROR(NotADensityMatrix);
BOHM_DEFINE_ERROR(TruncationInsufficient);
BOHM_DEFINE_ERROR(GridTooCoarse);
BOHM_DEFINE_ERROR(WindowEmpty);
BOHM_DEFINE_ERROR(DiagonalizationBudget);
BOHM_DEFINE_ERROR(OutsideAllCells);
BOHM_DEFINE_ERROR(EmptyRegion);

#undef BOHM_DEFINE_ERROR

}  // namespace bohm
