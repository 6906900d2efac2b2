#include "fracns/wave_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fracns/errors.hpp"

namespace fracns {

WaveGrid::WaveGrid(int dim, double side, int modes_per_axis, int points_per_axis)
    : dim_(dim), side_(side), modes_(modes_per_axis), points_(points_per_axis) {
  if (dim != 2 && dim != 3) throw ConfigError("grid dimension must be 2 or 3");
  if (!(side > 0.0) || !std::isfinite(side)) throw ConfigError("torus side must be positive");
  if (modes_per_axis < 1 || modes_per_axis % 2 == 0)
    throw ConfigError("modes_per_axis must be a positive odd integer");
  if (points_per_axis < modes_per_axis)
    throw ConfigError("points_per_axis must be at least modes_per_axis");
  volume_ = std::pow(side, dim);
  count_ = 1;
  for (int a = 0; a < dim; ++a) count_ *= static_cast<std::size_t>(modes_);
  ints_.resize(count_);
  waves_.resize(count_);
  norms_.resize(count_);
  const int K = radius();
  for (std::size_t idx = 0; idx < count_; ++idx) {
    Index n{0, 0, 0};
    std::size_t rest = idx;
    for (int a = dim - 1; a >= 0; --a) {
      n[a] = static_cast<int>(rest % modes_) - K;
      rest /= modes_;
    }
    ints_[idx] = n;
    Vec k{n[0] / side, n[1] / side, n[2] / side};
    waves_[idx] = k;
    norms_[idx] = std::sqrt(norm2(k));
  }
}

std::shared_ptr<const WaveGrid> WaveGrid::for_cutoff(int dim, double side, double radius) {
  if (!(radius > 0.0)) throw ConfigError("cutoff radius must be positive");
  const int K = static_cast<int>(std::floor(radius * side * (1.0 + 1e-12)));
  const int modes = 2 * K + 1;
  const int points = fft_friendly_size(std::max(3 * K + 1, modes));
  return std::make_shared<const WaveGrid>(dim, side, modes, points);
}

std::size_t WaveGrid::point_count() const {
  std::size_t n = 1;
  for (int a = 0; a < dim_; ++a) n *= static_cast<std::size_t>(points_);
  return n;
}

bool WaveGrid::contains(const Index& n) const {
  const int K = radius();
  for (int a = 0; a < dim_; ++a)
    if (n[a] < -K || n[a] > K) return false;
  for (int a = dim_; a < 3; ++a)
    if (n[a] != 0) return false;
  return true;
}

std::size_t WaveGrid::index(const Index& n) const {
  if (!contains(n)) throw ShapeError("mode index outside the grid box");
  const int K = radius();
  std::size_t idx = 0;
  for (int a = 0; a < dim_; ++a) idx = idx * modes_ + static_cast<std::size_t>(n[a] + K);
  return idx;
}

bool WaveGrid::same_shape(const WaveGrid& other) const {
  return dim_ == other.dim_ && side_ == other.side_ && modes_ == other.modes_ &&
         points_ == other.points_;
}

int fft_friendly_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

}  // namespace fracns
