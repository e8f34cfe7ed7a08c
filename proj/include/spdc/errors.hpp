#pragma once

#include <stdexcept>
#include <string>

namespace spdc {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input is outside the physical or mathematical domain of an operation
/// (wavelength outside a crystal's validity range, angle outside [0, 90], ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Malformed invocation or configuration: bad flag combinations, unparsable
/// files, zero-step sweeps. Maps to exit code 2 at the CLI.
class UsageError : public Error {
public:
  using Error::Error;
};

/// A bracketing solver was handed an interval without a sign change.
class BracketError : public DomainError {
public:
  BracketError(const std::string& what, double f_lo, double f_hi)
      : DomainError(what), f_lo(f_lo), f_hi(f_hi) {}
  double f_lo;
  double f_hi;
};

/// No phase-matched solution exists on the search bracket. Carries the
/// mismatch values at the bracket endpoints for diagnostics.
class NoPhaseMatchError : public DomainError {
public:
  NoPhaseMatchError(const std::string& what, double delta_k_lo, double delta_k_hi)
      : DomainError(what), delta_k_lo(delta_k_lo), delta_k_hi(delta_k_hi) {}
  double delta_k_lo;
  double delta_k_hi;
};

/// Iterative root search exhausted its iteration budget. Carries the best
/// estimate reached so the caller can decide whether it is usable.
class RootConvergenceError : public Error {
public:
  RootConvergenceError(const std::string& what, double best, double f_best)
      : Error(what), best_estimate(best), f_at_best(f_best) {}
  double best_estimate;
  double f_at_best;
};

/// An estimator is undefined for the given inputs (e.g. zero coincidences).
class UndefinedEstimatorError : public DomainError {
public:
  using DomainError::DomainError;
};

/// A simulation request would materialize an unreasonable number of events.
class ResourceLimitError : public Error {
public:
  using Error::Error;
};

} // namespace spdc
