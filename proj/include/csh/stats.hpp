#pragma once

// Least-squares fits and Monte Carlo accumulators (GSL backed).

#include <gsl/gsl_fit.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "core.hpp"

namespace csh {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;  // from the fit residuals (or the weights when weighted)
  std::size_t points = 0;
};

// Ordinary least squares y = intercept + slope * x.
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionError("linear fit needs >= 2 paired points");
  LinearFit f;
  double c00, c01, c11, sumsq;
  gsl_fit_linear(x.data(), 1, y.data(), 1, x.size(), &f.intercept, &f.slope, &c00, &c01, &c11, &sumsq);
  f.slope_stderr = std::sqrt(c11);
  f.points = x.size();
  return f;
}

// Weighted fit with per-point standard deviations sigma (weights 1/sigma^2).
inline LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                                     const std::vector<double>& sigma) {
  if (x.size() != y.size() || x.size() != sigma.size() || x.size() < 2)
    throw PreconditionError("weighted fit needs >= 2 paired points with sigmas");
  std::vector<double> w(sigma.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(sigma[i] > 0)) throw PreconditionError("weighted fit needs positive sigmas");
    w[i] = 1.0 / (sigma[i] * sigma[i]);
  }
  LinearFit f;
  double c00, c01, c11, chisq;
  gsl_fit_wlinear(x.data(), 1, w.data(), 1, y.data(), 1, x.size(), &f.intercept, &f.slope, &c00, &c01, &c11,
                  &chisq);
  f.slope_stderr = std::sqrt(c11);
  f.points = x.size();
  return f;
}

// Slope of log y against log x; every value must be positive.
inline LinearFit log_log_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw PreconditionError("log-log fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return linear_fit(lx, ly);
}

// Running mean of complex samples with the standard error of the mean.
struct ComplexMean {
  std::size_t n = 0;
  cplx sum{0.0};
  double sum_sq = 0.0;  // sum of |z|^2

  void add(cplx z) {
    ++n;
    sum += z;
    sum_sq += std::norm(z);
  }
  void merge(const ComplexMean& o) {
    n += o.n;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  cplx mean() const { return n ? sum / static_cast<double>(n) : cplx(0.0); }
  // Standard error of the complex mean (root of the summed component variances).
  double stderr_of_mean() const {
    if (n < 2) return 0.0;
    const double dn = static_cast<double>(n);
    const double var = std::max(0.0, (sum_sq - std::norm(sum) / dn) / (dn - 1.0));
    return std::sqrt(var / dn);
  }
};

}  // namespace csh
