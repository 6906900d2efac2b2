#pragma once

#include <span>
#include <vector>

namespace fracns {

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
  double stderr_mean() const;
  std::size_t n = 0;
};
MeanVar mean_var(std::span<const double> x);

/// One-sample Kolmogorov-Smirnov distance of x against N(0, sigma^2).
double ks_statistic_normal(std::vector<double> x, double sigma);
/// Asymptotic p-value P(D_n > d) with Stephens' finite-n correction.
double ks_pvalue(double d, std::size_t n);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};
/// Ordinary least squares of y on x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace fracns
