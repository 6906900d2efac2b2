#include "fracns/spectral_field.hpp"

#include <algorithm>
#include <cmath>

#include "fracns/errors.hpp"

namespace fracns {

SpectralField::SpectralField(GridPtr grid) : grid_(std::move(grid)) {
  data_.assign(static_cast<std::size_t>(grid_->dim()) * grid_->mode_count(), cplx{0.0, 0.0});
}

void SpectralField::set(int comp, std::size_t idx, cplx value) {
  const std::size_t neg = grid_->negate(idx);
  if (neg == idx) {
    ref(comp, idx) = cplx{value.real(), 0.0};
    return;
  }
  ref(comp, idx) = value;
  ref(comp, neg) = std::conj(value);
}

void SpectralField::fill_zero() { std::fill(data_.begin(), data_.end(), cplx{0.0, 0.0}); }

static void check_same(const SpectralField& a, const SpectralField& b) {
  if (!a.grid().same_shape(b.grid())) throw ShapeError("fields live on different grids");
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  check_same(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  check_same(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (auto& c : data_) c *= s;
  return *this;
}

double inner(const SpectralField& u, const SpectralField& v) {
  check_same(u, v);
  double acc = 0.0;
  const auto& a = u.data();
  const auto& b = v.data();
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return acc / u.grid().volume();
}

double norm(const SpectralField& u) { return std::sqrt(inner(u, u)); }

double conjugate_symmetry_error(const SpectralField& u) {
  const auto& g = u.grid();
  double err = 0.0, scale = 0.0;
  for (int c = 0; c < u.components(); ++c)
    for (std::size_t idx = 0; idx < g.mode_count(); ++idx) {
      err = std::max(err, std::abs(u(c, g.negate(idx)) - std::conj(u(c, idx))));
      scale = std::max(scale, std::abs(u(c, idx)));
    }
  return scale > 0.0 ? err / scale : 0.0;
}

double divergence_residual(const SpectralField& u) {
  const auto& g = u.grid();
  double worst = 0.0;
  for (std::size_t idx = 0; idx < g.mode_count(); ++idx) {
    const double kn = g.wavenumber(idx);
    if (kn == 0.0) continue;
    const Vec& k = g.wavevector(idx);
    cplx div{0.0, 0.0};
    double amp2 = 0.0;
    for (int c = 0; c < u.components(); ++c) {
      div += k[c] * u(c, idx);
      amp2 += std::norm(u(c, idx));
    }
    if (amp2 == 0.0) continue;
    worst = std::max(worst, std::abs(div) / (kn * std::sqrt(amp2)));
  }
  return worst;
}

double max_relative_difference(const SpectralField& u, const SpectralField& v) {
  check_same(u, v);
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < u.data().size(); ++i) {
    diff = std::max(diff, std::abs(u.data()[i] - v.data()[i]));
    scale = std::max(scale, std::abs(v.data()[i]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace fracns
