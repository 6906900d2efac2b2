#include "fracns/operators.hpp"

#include <cmath>
#include <numbers>

#include "fracns/errors.hpp"

namespace fracns {

Mat leray_multiplier(const Vec& k, int dim) {
  Mat p{};
  for (int i = 0; i < dim; ++i) p[i][i] = 1.0;
  const double k2 = norm2(k);
  if (k2 == 0.0) return p;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) p[i][j] -= k[i] * k[j] / k2;
  return p;
}

std::vector<Vec> divfree_basis(const Vec& k, int dim) {
  const double kn = std::sqrt(norm2(k));
  if (kn == 0.0) throw ConfigError("divfree_basis: zero wavevector has no orthogonal basis");
  const Vec u{k[0] / kn, k[1] / kn, k[2] / kn};
  if (dim == 2) return {Vec{-u[1], u[0], 0.0}};
  int axis = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(u[a]) < std::abs(u[axis])) axis = a;
  Vec v1{0.0, 0.0, 0.0};
  v1[axis] = 1.0;
  const double c = u[axis];
  for (int a = 0; a < 3; ++a) v1[a] -= c * u[a];
  const double n1 = std::sqrt(norm2(v1));
  for (auto& x : v1) x /= n1;
  const Vec v2{u[1] * v1[2] - u[2] * v1[1], u[2] * v1[0] - u[0] * v1[2], u[0] * v1[1] - u[1] * v1[0]};
  return {v1, v2};
}

void apply_leray_inplace(SpectralField& u) {
  const auto& g = u.grid();
  const int d = g.dim();
  for (std::size_t idx = 0; idx < g.mode_count(); ++idx) {
    const double k2 = g.wavenumber(idx) * g.wavenumber(idx);
    if (k2 == 0.0) continue;
    const Vec& k = g.wavevector(idx);
    cplx kdotu{0.0, 0.0};
    for (int c = 0; c < d; ++c) kdotu += k[c] * u(c, idx);
    for (int c = 0; c < d; ++c) u.ref(c, idx) -= k[c] * kdotu / k2;
  }
}

SpectralField apply_leray(const SpectralField& u) {
  SpectralField out = u;
  apply_leray_inplace(out);
  return out;
}

double frac_laplacian_symbol(double wavenumber, double theta, LaplacianPower power) {
  if (wavenumber == 0.0) return 0.0;
  const double e = power == LaplacianPower::forward ? 2.0 * theta : theta;
  return std::pow(2.0 * std::numbers::pi * wavenumber, e);
}

SpectralField frac_laplacian_apply(const SpectralField& u, double theta, LaplacianPower power) {
  if (!(theta > 0.0)) throw ConfigError("fractional exponent must be positive");
  SpectralField out = u;
  const auto& g = u.grid();
  for (std::size_t idx = 0; idx < g.mode_count(); ++idx) {
    const double s = frac_laplacian_symbol(g.wavenumber(idx), theta, power);
    for (int c = 0; c < u.components(); ++c) out.ref(c, idx) *= s;
  }
  return out;
}

SpectralField apply_cutoff(const SpectralField& u, const CutoffProfile& rho) {
  SpectralField out = u;
  const auto& g = u.grid();
  for (std::size_t idx = 0; idx < g.mode_count(); ++idx) {
    const double s = rho(g.wavevector(idx));
    for (int c = 0; c < u.components(); ++c) out.ref(c, idx) *= s;
  }
  return out;
}

void remove_mean(SpectralField& u) {
  const std::size_t z = u.grid().zero_index();
  for (int c = 0; c < u.components(); ++c) u.ref(c, z) = 0.0;
}

}  // namespace fracns
