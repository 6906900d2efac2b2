#pragma once

#include <cstddef>
#include <vector>

#include "fracns/spectral_field.hpp"

namespace fracns {

struct Probe {
  int component;
  std::size_t mode;
};

/// Complex covariance C_ab = E[(x_a - m_a) conj(x_b - m_b)] with jackknife
/// standard errors reported separately for the real and imaginary parts.
struct CovarianceEstimate {
  std::size_t dim = 0;
  std::size_t samples = 0;
  std::vector<cplx> value;   ///< row-major dim x dim
  std::vector<cplx> stderr_; ///< (se of real part, se of imaginary part)
  cplx at(std::size_t a, std::size_t b) const { return value[a * dim + b]; }
  cplx se(std::size_t a, std::size_t b) const { return stderr_[a * dim + b]; }
};

/// rows[s][a] is observation a of sample s. Requires >= 2 samples; the standard
/// errors are NaN below 3.
CovarianceEstimate empirical_covariance(const std::vector<std::vector<cplx>>& rows);

CovarianceEstimate empirical_covariance(const std::vector<SpectralField>& samples,
                                        const std::vector<Probe>& probes);

/// Collects only the probed values, so large ensembles never keep whole fields.
class CovarianceAccumulator {
 public:
  explicit CovarianceAccumulator(std::size_t dim);
  void add(const std::vector<cplx>& row);
  CovarianceEstimate finish() const;

 private:
  std::size_t dim_;
  std::vector<std::vector<cplx>> rows_;
};

}  // namespace fracns
