#include "fracns/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fracns/errors.hpp"

namespace fracns {

double MeanVar::stderr_mean() const { return n > 0 ? std::sqrt(variance / static_cast<double>(n)) : 0.0; }

MeanVar mean_var(std::span<const double> x) {
  MeanVar mv;
  mv.n = x.size();
  if (x.empty()) return mv;
  double s = 0.0;
  for (double v : x) s += v;
  mv.mean = s / static_cast<double>(x.size());
  if (x.size() > 1) {
    double q = 0.0;
    for (double v : x) q += (v - mv.mean) * (v - mv.mean);
    mv.variance = q / static_cast<double>(x.size() - 1);
  }
  return mv;
}

double ks_statistic_normal(std::vector<double> x, double sigma) {
  if (x.empty()) throw ConfigError("KS statistic needs samples");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = 0.5 * std::erfc(-x[i] / (sigma * std::numbers::sqrt2));
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double t = (sn + 0.12 + 0.11 / sn) * d;
  if (t < 0.2) return 1.0;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * t * t);
    p += (j % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit_line needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) rss += std::pow(y[i] - f.intercept - f.slope * x[i], 2);
    f.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return f;
}

}  // namespace fracns
