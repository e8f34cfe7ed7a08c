#include "spdc/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace spdc::numerics {

namespace {

struct OlsSums {
  double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
};

double safe_r_squared(double rss, double tss) {
  if (tss <= 0.0) return rss <= 0.0 ? 1.0 : 0.0;
  return 1.0 - rss / tss;
}

// Solve a symmetric positive definite 3x3 system in place.
bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3>& b) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-300) return false;
    std::swap(a[col], a[pivot]);
    std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(pivot)]);
    for (int r = col + 1; r < 3; ++r) {
      const double factor = a[r][col] / a[col][col];
      for (int c = col; c < 3; ++c) a[r][c] -= factor * a[col][c];
      b[static_cast<std::size_t>(r)] -= factor * b[static_cast<std::size_t>(col)];
    }
  }
  for (int row = 2; row >= 0; --row) {
    double acc = b[static_cast<std::size_t>(row)];
    for (int c = row + 1; c < 3; ++c) acc -= a[row][c] * b[static_cast<std::size_t>(c)];
    b[static_cast<std::size_t>(row)] = acc / a[row][row];
  }
  return true;
}

bool invert3(const std::array<std::array<double, 3>, 3>& a,
             std::array<std::array<double, 3>, 3>& inv) {
  for (int col = 0; col < 3; ++col) {
    std::array<double, 3> e{};
    e[static_cast<std::size_t>(col)] = 1.0;
    if (!solve3(a, e)) return false;
    for (int row = 0; row < 3; ++row) inv[row][col] = e[static_cast<std::size_t>(row)];
  }
  return true;
}

} // namespace

double bracketed_root(const std::function<double(double)>& f, double lo, double hi,
                      const RootOptions& opts) {
  double a = lo;
  double b = hi;
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) {
    std::ostringstream oss;
    oss << "no sign change on [" << lo << ", " << hi << "]: f(lo) = " << fa
        << ", f(hi) = " << fb;
    throw BracketError(oss.str(), fa, fb);
  }

  // Brent: b is the current best iterate, [b, c] always brackets the root.
  double c = a;
  double fc = fa;
  double d = b - a;
  double e = d;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 =
        2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * opts.tol_x;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0 || std::abs(fb) <= opts.tol_f) return b;

    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double p, q;
      const double s = fb / fa;
      if (a == c) { // secant
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else { // inverse quadratic interpolation
        const double qq = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol1 ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
  }
  std::ostringstream oss;
  oss << "root search did not converge in " << opts.max_iter
      << " iterations; best estimate " << b << " with f = " << fb;
  throw RootConvergenceError(oss.str(), b, fb);
}

FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& weights) {
  if (x.size() != y.size())
    throw UsageError("linear_fit: x and y sizes differ");
  if (!weights.empty() && weights.size() != x.size())
    throw UsageError("linear_fit: weights size differs from data size");

  OlsSums sums;
  std::size_t used = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w < 0.0) throw UsageError("linear_fit: negative weight");
    if (w == 0.0) continue;
    sums.s += w;
    sums.sx += w * x[i];
    sums.sy += w * y[i];
    sums.sxx += w * x[i] * x[i];
    sums.sxy += w * x[i] * y[i];
    ++used;
  }
  if (used < 2) throw DomainError("linear_fit: need at least 2 points with nonzero weight");
  const double delta = sums.s * sums.sxx - sums.sx * sums.sx;
  if (!(std::abs(delta) > 1e-12 * sums.s * std::max(sums.sxx, 1e-300)))
    throw DomainError("linear_fit: degenerate design, all x values identical");

  FitResult fit;
  const double slope = (sums.s * sums.sxy - sums.sx * sums.sy) / delta;
  const double intercept = (sums.sxx * sums.sy - sums.sx * sums.sxy) / delta;
  fit.parameters = {slope, intercept};

  const double mean_y = sums.sy / sums.s;
  double rss = 0.0, tss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w == 0.0) continue;
    const double r = y[i] - (slope * x[i] + intercept);
    rss += w * r * r;
    tss += w * (y[i] - mean_y) * (y[i] - mean_y);
  }
  fit.rss = rss;
  fit.r_squared = safe_r_squared(rss, tss);

  // Residual-scaled covariance (weights treated as relative).
  const double s2 = used > 2 ? rss / static_cast<double>(used - 2) : 0.0;
  fit.uncertainties = {std::sqrt(std::max(0.0, s2 * sums.s / delta)),
                       std::sqrt(std::max(0.0, s2 * sums.sxx / delta))};
  fit.converged = true;
  return fit;
}

PowerLawFit power_law_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw UsageError("power_law_fit: x and y sizes differ");
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw DomainError("power_law_fit: all x and y values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const FitResult log_fit = linear_fit(lx, ly);
  const double b = log_fit.parameters[0];
  const double a = std::exp(log_fit.parameters[1]);

  PowerLawFit out;
  out.free_fit = log_fit;
  out.free_fit.parameters = {a, b};
  out.free_fit.uncertainties = {a * log_fit.uncertainties[1], log_fit.uncertainties[0]};

  // Constrained y = a / x: intercept-only fit of log y + log x.
  double mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mean += ly[i] + lx[i];
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = ly[i] + lx[i] - mean;
    var += r * r;
  }
  const std::size_t n = x.size();
  const double se = n > 1 ? std::sqrt(var / static_cast<double>(n - 1) / static_cast<double>(n))
                          : 0.0;
  out.inverse_coefficient = std::exp(mean);
  out.inverse_coefficient_uncertainty = out.inverse_coefficient * se;
  return out;
}

FitResult gaussian_fit(const std::vector<double>& bin_centers,
                       const std::vector<double>& bin_counts, double floor, int max_iter) {
  const std::size_t n = bin_centers.size();
  if (n != bin_counts.size()) throw UsageError("gaussian_fit: bin arrays differ in size");
  if (n < 5) throw DomainError("gaussian_fit: need at least 5 bins");

  // Work in coordinates centered on the mean bin position so that the fit is
  // translation equivariant.
  const double x_shift =
      std::accumulate(bin_centers.begin(), bin_centers.end(), 0.0) / static_cast<double>(n);
  std::vector<double> u(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = bin_centers[i] - x_shift;
    z[i] = bin_counts[i] - floor;
  }

  // Moment initialization from the above-floor mass.
  double w_sum = 0.0, wc = 0.0;
  double z_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::max(z[i], 0.0);
    w_sum += w;
    wc += w * u[i];
    z_max = std::max(z_max, z[i]);
  }
  if (!(w_sum > 0.0) || !(z_max > 0.0))
    throw DomainError("gaussian_fit: no counts above the floor");
  const double c0 = wc / w_sum;
  double var0 = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    var0 += std::max(z[i], 0.0) * (u[i] - c0) * (u[i] - c0);
  var0 /= w_sum;
  double spacing = n > 1 ? std::abs(bin_centers[1] - bin_centers[0]) : 1.0;
  if (spacing <= 0.0) spacing = 1.0;
  const double sigma0 = var0 > 0.0 ? std::sqrt(var0) : spacing;

  auto moment_result = [&]() {
    FitResult m;
    m.parameters = {z_max, c0 + x_shift, sigma0};
    m.uncertainties = {0.0, 0.0, 0.0};
    m.converged = false;
    return m;
  };

  double amp = z_max;
  double center = c0;
  double sigma = sigma0;

  auto rss_of = [&](double a, double c, double s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = (u[i] - c) / s;
      const double r = z[i] - a * std::exp(-0.5 * t * t);
      acc += r * r;
    }
    return acc;
  };

  double rss = rss_of(amp, center, sigma);
  double lambda = 1e-3;
  int iterations = 0;
  bool converged = false;
  std::array<std::array<double, 3>, 3> jtj{};

  for (; iterations < max_iter; ++iterations) {
    jtj = {};
    std::array<double, 3> jtr{};
    for (std::size_t i = 0; i < n; ++i) {
      const double t = (u[i] - center) / sigma;
      const double e = std::exp(-0.5 * t * t);
      const double m = amp * e;
      const double r = z[i] - m;
      const std::array<double, 3> j{e, m * t / sigma, m * t * t / sigma};
      for (int p = 0; p < 3; ++p) {
        jtr[static_cast<std::size_t>(p)] += j[static_cast<std::size_t>(p)] * r;
        for (int q = 0; q < 3; ++q)
          jtj[p][q] += j[static_cast<std::size_t>(p)] * j[static_cast<std::size_t>(q)];
      }
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 12 && !stepped; ++attempt) {
      auto damped = jtj;
      for (int p = 0; p < 3; ++p) damped[p][p] *= 1.0 + lambda;
      std::array<double, 3> step = jtr;
      if (!solve3(damped, step)) {
        lambda *= 10.0;
        continue;
      }
      const double amp_new = amp + step[0];
      const double center_new = center + step[1];
      double sigma_new = sigma + step[2];
      if (sigma_new <= 0.0) sigma_new = 0.5 * sigma;
      const double rss_new = rss_of(amp_new, center_new, sigma_new);
      if (rss_new <= rss) {
        const double step_scale = std::abs(step[0]) / std::max(std::abs(amp), 1e-300) +
                                  std::abs(step[1]) / std::max(sigma, 1e-300) +
                                  std::abs(step[2]) / std::max(sigma, 1e-300);
        const double improvement = rss - rss_new;
        amp = amp_new;
        center = center_new;
        sigma = sigma_new;
        rss = rss_new;
        lambda = std::max(lambda * 0.1, 1e-14);
        stepped = true;
        if (step_scale < 1e-10 || improvement <= 1e-12 * std::max(rss, 1e-300))
          converged = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!stepped) {
      // Not even a heavily damped step improves the residual: the parameters
      // are stationary to working precision.
      converged = true;
    }
    if (converged) break;
  }

  if (!converged) {
    std::ostringstream oss;
    oss << "gaussian_fit did not converge in " << max_iter
        << " iterations; moment estimates attached";
    throw FitConvergenceError(oss.str(), moment_result());
  }

  FitResult fit;
  fit.parameters = {amp, center + x_shift, std::abs(sigma)};
  fit.rss = rss;
  fit.converged = true;
  fit.iterations = iterations;

  double mean_z = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(n);
  double tss = 0.0;
  for (std::size_t i = 0; i < n; ++i) tss += (z[i] - mean_z) * (z[i] - mean_z);
  fit.r_squared = safe_r_squared(rss, tss);

  const double s2 = n > 3 ? rss / static_cast<double>(n - 3) : 0.0;
  std::array<std::array<double, 3>, 3> cov{};
  if (invert3(jtj, cov)) {
    fit.uncertainties = {std::sqrt(std::max(0.0, s2 * cov[0][0])),
                         std::sqrt(std::max(0.0, s2 * cov[1][1])),
                         std::sqrt(std::max(0.0, s2 * cov[2][2]))};
  } else {
    fit.uncertainties = {0.0, 0.0, 0.0};
  }
  return fit;
}

} // namespace spdc::numerics
