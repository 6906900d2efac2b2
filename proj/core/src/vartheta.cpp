#include "fracns/vartheta.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "fracns/diffusivity.hpp"
#include "fracns/errors.hpp"

namespace fracns {

double vartheta_N(const Vec& k, double lambda, const CutoffProfile& cutoff, int dim, double side) {
  if (dim != 2 && dim != 3) throw ConfigError("vartheta_N supports d = 2 or 3");
  const double N = cutoff.radius();
  const double rk = cutoff(k);
  if (rk == 0.0) return 0.0;
  const int K = cutoff.max_axis_index(side);
  const Index kn{static_cast<int>(std::lround(k[0] * side)), static_cast<int>(std::lround(k[1] * side)),
                 static_cast<int>(std::lround(k[2] * side))};
  const bool square = cutoff.kind() == CutoffKind::smooth;
  double acc = 0.0;
  const int zlo = dim == 3 ? -K : 0, zhi = dim == 3 ? K : 0;
  for (int a = -K; a <= K; ++a)
    for (int b = -K; b <= K; ++b)
      for (int c = zlo; c <= zhi; ++c) {
        const Vec l{a / side, b / side, c / side};
        const double rl = cutoff(l);
        if (rl == 0.0) continue;
        const Vec m{(kn[0] - a) / side, (kn[1] - b) / side, (kn[2] - c) / side};
        const double rm = cutoff(m);
        if (rm == 0.0) continue;
        double R = rl * rm * rk;
        if (square) R *= R;
        acc += R / (lambda + norm2(l) + norm2(m));
      }
  return acc * std::pow(N, 2 - dim) / std::pow(side, dim);
}

double theta_integral(const Vec& k_scaled, double r, double c, int dim, double tol) {
  if (dim != 2 && dim != 3) throw ConfigError("theta_integral supports d = 2 or 3");
  const double kappa = std::sqrt(norm2(k_scaled));
  if (kappa >= 2.0 * r) return 0.0;
  using boost::math::quadrature::gauss_kronrod;
  // Polar coordinates about x = 0: |x| = s, angle to k_N with cosine t.
  // Denominator c + 2 s^2 + kappa^2 - 2 s kappa t; the lens constraint |x - k_N| <= r
  // becomes t >= t_min(s).
  auto angular = [&](double s) -> double {
    if (s == 0.0) return 0.0;
    const double A = c + 2.0 * s * s + kappa * kappa;
    const double B = 2.0 * s * kappa;
    double tmin = -1.0;
    if (kappa > 0.0) tmin = std::max(-1.0, (s * s + kappa * kappa - r * r) / (2.0 * s * kappa));
    if (tmin >= 1.0) return 0.0;
    if (dim == 3) {
      // 2 pi s^2 int_{tmin}^1 dt / (A - B t)
      const double inner = B > 0.0 ? std::log((A - B * tmin) / (A - B)) / B : (1.0 - tmin) / A;
      return 2.0 * std::numbers::pi * s * s * inner;
    }
    // d = 2: 2 s int_0^{phi_max} dphi / (A - B cos phi)
    const double phimax = std::acos(tmin);
    if (B == 0.0) return 2.0 * s * phimax / A;
    const double root = std::sqrt(A * A - B * B);
    const double half = phimax >= std::numbers::pi
                            ? std::numbers::pi / root
                            : 2.0 / root * std::atan(std::sqrt((A + B) / (A - B)) * std::tan(phimax / 2.0));
    return 2.0 * s * half;
  };
  const double split = std::abs(r - kappa);
  double total = 0.0;
  double err = 0.0;
  if (split > 0.0)
    total += gauss_kronrod<double, 61>::integrate(angular, 0.0, split, 15, tol, &err);
  total += gauss_kronrod<double, 61>::integrate(angular, split, r, 15, tol, &err);
  return total;
}

double vartheta_limit(int dim) {
  if (dim < 3) throw ConfigError("vartheta has a finite limit only for d >= 3");
  return omega_d(dim) / (2.0 * (dim - 2));
}

}  // namespace fracns
