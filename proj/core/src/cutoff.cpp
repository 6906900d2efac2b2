#include "fracns/cutoff.hpp"

#include <cmath>

#include "fracns/errors.hpp"

namespace fracns {

namespace {
double bump(double r) {
  if (r >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r * r));
}
}  // namespace

CutoffProfile::CutoffProfile(CutoffKind kind, double radius, Profile chi)
    : kind_(kind), radius_(radius), chi_(std::move(chi)) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("cutoff radius must be positive");
}

CutoffProfile CutoffProfile::sharp(double radius) { return {CutoffKind::sharp, radius, {}}; }

CutoffProfile CutoffProfile::smooth(double radius, Profile chi) {
  return {CutoffKind::smooth, radius, chi ? std::move(chi) : Profile(bump)};
}

double CutoffProfile::profile(double r) const {
  if (kind_ == CutoffKind::sharp) return r <= 1.0 + 1e-12 ? 1.0 : 0.0;
  if (r >= 1.0) return 0.0;
  return chi_(r);
}

double CutoffProfile::operator()(const Vec& k) const {
  return profile(std::sqrt(norm2(k)) / radius_);
}

int CutoffProfile::max_axis_index(double side) const {
  const double limit = radius_ * side;
  if (kind_ == CutoffKind::sharp) return static_cast<int>(std::floor(limit * (1.0 + 1e-12)));
  return static_cast<int>(std::ceil(limit)) - 1;
}

CutoffKind parse_cutoff_kind(const std::string& name) {
  if (name == "sharp") return CutoffKind::sharp;
  if (name == "smooth") return CutoffKind::smooth;
  throw ConfigError("unknown cutoff kind '" + name + "'");
}

std::string to_string(CutoffKind kind) { return kind == CutoffKind::sharp ? "sharp" : "smooth"; }

}  // namespace fracns
