// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mmlab {

// Base class for every error raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Survival probability 1-F(s) fell below the machine-safe floor; the caller
// must stay inside the frozen-boundary closure [0, s_max].
struct TailUnderflow : Error {
  using Error::Error;
};

// Inverse-CDF bracketing/bisection failed to converge.
struct SamplerFailure : Error {
  using Error::Error;
};

// Observed intensity exceeded the cached thinning bound.
struct ThinningBoundViolated : Error {
  using Error::Error;
};

// Explicit-scheme stability bound dt*(sigma2_max + lambda_max) <= 1/2 fails.
struct StabilityViolation : Error {
  using Error::Error;
};

// Inventory truncation [-q_max, q_max] contaminates the interior values.
struct QRangeTooSmall : Error {
  using Error::Error;
};

// A control query needs zeta values outside the solved inventory range.
struct QRangeExceeded : Error {
  using Error::Error;
};

// Lookup outside the solved (t,s) lattice.
struct OutOfGrid : Error {
  using Error::Error;
};

// The backtested policy could not answer at a reached state.
struct PolicyUndefined : Error {
  using Error::Error;
};

// An estimator was given too few events.
struct InsufficientData : Error {
  using Error::Error;
};

// The likelihood optimizer stopped without meeting its tolerance.
struct OptimizerNotConverged : Error {
  using Error::Error;
};

// A file required by a subcommand is absent or inconsistent.
struct MissingArtifact : Error {
  using Error::Error;
};

// Malformed configuration or serialized document.
struct SchemaError : Error {
  using Error::Error;
};

}  // namespace mmlab
