#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

namespace fracns {

/// Wavevector or physical point; unused trailing entries are zero when d = 2.
using Vec = std::array<double, 3>;
using Index = std::array<int, 3>;

inline double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm2(const Vec& a) { return dot(a, a); }

/// Integer mode box [-K, K]^d on the lattice (1/M) Z^d, together with the
/// collocation grid size used for transforms.
///
/// Mode indices are row-major over the box with the last axis fastest, which
/// makes the negation map idx -> mode_count() - 1 - idx.
class WaveGrid {
 public:
  WaveGrid(int dim, double side, int modes_per_axis, int points_per_axis);

  /// Smallest box holding every mode with |k| <= radius, and a collocation
  /// grid that keeps quadratic products of such fields alias-free.
  static std::shared_ptr<const WaveGrid> for_cutoff(int dim, double side, double radius);

  int dim() const { return dim_; }
  double side() const { return side_; }
  double volume() const { return volume_; }
  int modes_per_axis() const { return modes_; }
  int radius() const { return (modes_ - 1) / 2; }
  int points_per_axis() const { return points_; }
  std::size_t mode_count() const { return count_; }
  std::size_t point_count() const;
  std::size_t zero_index() const { return (count_ - 1) / 2; }
  std::size_t negate(std::size_t idx) const { return count_ - 1 - idx; }

  /// Representatives of the pairs {k, -k}, k != 0, are exactly idx < zero_index().
  bool in_half_space(std::size_t idx) const { return idx < zero_index(); }

  bool contains(const Index& n) const;
  std::size_t index(const Index& n) const;
  const Index& integer_index(std::size_t idx) const { return ints_[idx]; }
  const Vec& wavevector(std::size_t idx) const { return waves_[idx]; }
  double wavenumber(std::size_t idx) const { return norms_[idx]; }

  bool same_shape(const WaveGrid& other) const;

 private:
  int dim_;
  double side_;
  double volume_;
  int modes_;
  int points_;
  std::size_t count_;
  std::vector<Index> ints_;
  std::vector<Vec> waves_;
  std::vector<double> norms_;
};

using GridPtr = std::shared_ptr<const WaveGrid>;

/// Smallest integer >= n whose only prime factors are 2, 3, 5.
int fft_friendly_size(int n);

}  // namespace fracns
