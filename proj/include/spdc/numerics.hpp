#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "spdc/errors.hpp"

namespace spdc::numerics {

/// Result of a least-squares fit. Parameter meaning depends on the fit:
///   linear_fit:    parameters = {slope, intercept}
///   power_law_fit: parameters = {a, b} for y = a * x^b
///   gaussian_fit:  parameters = {amplitude, center, sigma}
struct FitResult {
  std::vector<double> parameters;
  std::vector<double> uncertainties; // one-sigma, same order as parameters
  double rss = 0.0;                  // residual sum of squares
  double r_squared = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct RootOptions {
  double tol_x = 1e-12;
  double tol_f = 0.0;
  int max_iter = 200;
};

/// Fit could not converge; moment-based estimates are attached so callers
/// can still report something sensible.
class FitConvergenceError : public Error {
public:
  FitConvergenceError(const std::string& what, FitResult moment_estimates)
      : Error(what), moment_estimates(std::move(moment_estimates)) {}
  FitResult moment_estimates;
};

/// Derivative-free bracketed root finding (Brent: bisection with
/// inverse-quadratic/secant acceleration). Requires f(lo)*f(hi) < 0.
/// Never evaluates f outside [lo, hi]. Stops when |f| <= tol_f or the
/// bracket width falls below tol_x.
double bracketed_root(const std::function<double(double)>& f, double lo, double hi,
                      const RootOptions& opts = {});

/// Ordinary (or weighted) least squares y = slope*x + intercept.
/// weights, when given, are inverse-variance weights; a zero weight removes
/// the point from the fit.
FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& weights = {});

/// Power-law fit via least squares in log-log space.
struct PowerLawFit {
  FitResult free_fit;          // parameters = {a, b}
  double inverse_coefficient;  // a for the constrained model y = a / x
  double inverse_coefficient_uncertainty;
};
PowerLawFit power_law_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Nonlinear least-squares Gaussian a*exp(-(x-c)^2 / (2 sigma^2)) fitted to
/// (center, count) bins after subtracting a constant floor. Initialized from
/// moments; Levenberg-Marquardt with a bounded iteration budget.
FitResult gaussian_fit(const std::vector<double>& bin_centers,
                       const std::vector<double>& bin_counts, double floor,
                       int max_iter = 200);

inline double fwhm_from_sigma(double sigma) {
  return 2.0 * std::sqrt(2.0 * std::log(2.0)) * sigma;
}

} // namespace spdc::numerics
