#pragma once

#include <functional>
#include <string>

#include "fracns/wave_grid.hpp"

namespace fracns {

enum class CutoffKind { sharp, smooth };

/// Fourier mollifier: indicator of the closed ball |k| <= N, or chi(|k|/N)
/// for a radial profile chi supported in the open unit ball.
class CutoffProfile {
 public:
  using Profile = std::function<double(double)>;

  static CutoffProfile sharp(double radius);
  /// Default profile is the bump exp(1 - 1/(1 - r^2)).
  static CutoffProfile smooth(double radius, Profile chi = {});

  CutoffKind kind() const { return kind_; }
  double radius() const { return radius_; }

  double operator()(const Vec& k) const;
  double profile(double r) const;

  /// Largest integer index along one axis with a non-zero multiplier on a torus of this side.
  int max_axis_index(double side) const;

 private:
  CutoffProfile(CutoffKind kind, double radius, Profile chi);
  CutoffKind kind_;
  double radius_;
  Profile chi_;
};

CutoffKind parse_cutoff_kind(const std::string& name);
std::string to_string(CutoffKind kind);

}  // namespace fracns
