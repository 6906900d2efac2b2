#include "fracns/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fracns/errors.hpp"

namespace fracns {

CovarianceEstimate empirical_covariance(const std::vector<std::vector<cplx>>& rows) {
  const std::size_t n = rows.size();
  if (n < 2) throw ConfigError("empirical_covariance needs at least 2 samples");
  const std::size_t p = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != p) throw ShapeError("empirical_covariance: ragged sample rows");

  std::vector<cplx> s1(p), s2(p * p);
  for (const auto& r : rows)
    for (std::size_t a = 0; a < p; ++a) {
      s1[a] += r[a];
      for (std::size_t b = 0; b < p; ++b) s2[a * p + b] += r[a] * std::conj(r[b]);
    }
  const double nd = static_cast<double>(n);
  CovarianceEstimate est;
  est.dim = p;
  est.samples = n;
  est.value.resize(p * p);
  est.stderr_.resize(p * p);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b)
      est.value[a * p + b] = (s2[a * p + b] - s1[a] * std::conj(s1[b]) / nd) / (nd - 1.0);

  if (n < 3) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::fill(est.stderr_.begin(), est.stderr_.end(), cplx{nan, nan});
    return est;
  }

  // Jackknife over leave-one-out estimates, computed from the running sums in two passes.
  auto loo = [&](const std::vector<cplx>& r, std::size_t a, std::size_t b) {
    const cplx m1a = s1[a] - r[a];
    const cplx m1b = s1[b] - r[b];
    const cplx m2 = s2[a * p + b] - r[a] * std::conj(r[b]);
    return (m2 - m1a * std::conj(m1b) / (nd - 1.0)) / (nd - 2.0);
  };
  std::vector<cplx> loo_mean(p * p);
  for (const auto& r : rows)
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) loo_mean[a * p + b] += loo(r, a, b);
  for (auto& m : loo_mean) m /= nd;
  std::vector<double> sq_re(p * p), sq_im(p * p);
  for (const auto& r : rows)
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) {
        const cplx dev = loo(r, a, b) - loo_mean[a * p + b];
        sq_re[a * p + b] += dev.real() * dev.real();
        sq_im[a * p + b] += dev.imag() * dev.imag();
      }
  for (std::size_t i = 0; i < p * p; ++i)
    est.stderr_[i] = {std::sqrt((nd - 1.0) / nd * sq_re[i]), std::sqrt((nd - 1.0) / nd * sq_im[i])};
  return est;
}

CovarianceEstimate empirical_covariance(const std::vector<SpectralField>& samples,
                                        const std::vector<Probe>& probes) {
  std::vector<std::vector<cplx>> rows;
  rows.reserve(samples.size());
  for (const auto& f : samples) {
    std::vector<cplx> r;
    r.reserve(probes.size());
    for (const auto& pr : probes) r.push_back(f(pr.component, pr.mode));
    rows.push_back(std::move(r));
  }
  return empirical_covariance(rows);
}

CovarianceAccumulator::CovarianceAccumulator(std::size_t dim) : dim_(dim) {}

void CovarianceAccumulator::add(const std::vector<cplx>& row) {
  if (row.size() != dim_) throw ShapeError("covariance accumulator: wrong row length");
  rows_.push_back(row);
}

CovarianceEstimate CovarianceAccumulator::finish() const { return empirical_covariance(rows_); }

}  // namespace fracns
