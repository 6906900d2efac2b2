#pragma once

#include <complex>
#include <span>
#include <vector>

#include "fracns/wave_grid.hpp"

namespace fracns {

using cplx = std::complex<double>;

/// d-component Fourier coefficients of a real vector field over the full mode
/// box of a WaveGrid, laid out as [component][mode].
///
/// set() keeps the reality constraint u(-k) = conj(u(k)); ref() is raw
/// access and leaves symmetry to the caller.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(GridPtr grid);

  const WaveGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int components() const { return grid_->dim(); }
  std::size_t modes() const { return grid_->mode_count(); }

  cplx operator()(int comp, std::size_t idx) const { return data_[comp * modes() + idx]; }
  cplx& ref(int comp, std::size_t idx) { return data_[comp * modes() + idx]; }

  /// Writes mode idx and its conjugate partner; the zero mode keeps only the real part.
  void set(int comp, std::size_t idx, cplx value);

  std::span<cplx> component(int comp) { return {data_.data() + comp * modes(), modes()}; }
  std::span<const cplx> component(int comp) const {
    return {data_.data() + comp * modes(), modes()};
  }
  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }

  void fill_zero();
  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double s);

 private:
  GridPtr grid_;
  std::vector<cplx> data_;
};

/// L2 inner product (1/M^d) sum_k u(k) . conj(v(k)); real for real fields.
double inner(const SpectralField& u, const SpectralField& v);
double norm(const SpectralField& u);

/// max_k,i |u_i(-k) - conj(u_i(k))| divided by the largest coefficient modulus.
double conjugate_symmetry_error(const SpectralField& u);

/// max_k |k . u(k)| / (|k| |u(k)|) over modes with u(k) != 0.
double divergence_residual(const SpectralField& u);

/// Largest relative deviation max|u - v| / max|v| over all coefficients.
double max_relative_difference(const SpectralField& u, const SpectralField& v);

}  // namespace fracns
