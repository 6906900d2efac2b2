#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "fracns/cutoff.hpp"
#include "fracns/spectral_field.hpp"

namespace fracns {

/// Mode box [-K, K]^d on (1/M) Z^d for chaos kernels. A slot is a pair
/// (component l, mode k), numbered mode * d + l.
class ChaosBox {
 public:
  ChaosBox(int dim, double side, int radius);

  int dim() const { return grid_.dim(); }
  double side() const { return grid_.side(); }
  double volume() const { return grid_.volume(); }
  int radius() const { return grid_.radius(); }
  std::size_t mode_count() const { return grid_.mode_count(); }
  std::size_t slot_count() const { return grid_.mode_count() * static_cast<std::size_t>(dim()); }
  const WaveGrid& modes() const { return grid_; }

  /// Number of entries of a level-n kernel; throws ConfigError above kMaxEntries.
  std::size_t level_size(int n) const;
  static constexpr std::size_t kMaxEntries = std::size_t{1} << 24;

 private:
  WaveGrid grid_;
};

using ChaosBoxPtr = std::shared_ptr<const ChaosBox>;

/// Kernels phi_0..phi_{n_max}, each a dense row-major array over slot tuples.
class ChaosVector {
 public:
  ChaosVector(ChaosBoxPtr box, int n_max);

  const ChaosBox& box() const { return *box_; }
  const ChaosBoxPtr& box_ptr() const { return box_; }
  int n_max() const { return static_cast<int>(levels_.size()) - 1; }
  std::vector<cplx>& level(int n) { return levels_.at(n); }
  const std::vector<cplx>& level(int n) const { return levels_.at(n); }

  /// Averages every level over slot permutations.
  void symmetrize();
  /// Applies the Leray multiplier in every slot and clears slots at k = 0.
  void project_divfree();
  /// Zero every level except n.
  void keep_only(int n);

  ChaosVector& operator+=(const ChaosVector& other);
  ChaosVector& operator*=(cplx s);

 private:
  ChaosBoxPtr box_;
  std::vector<std::vector<cplx>> levels_;
};

/// sum_n n! M^{-dn} sum phi_n conj(psi_n). Throws ShapeError for different boxes.
cplx fock_inner(const ChaosVector& phi, const ChaosVector& psi);
double fock_norm(const ChaosVector& phi);

/// || w(N) (lambda - L_theta)^beta phi || with a level weight w.
double fock_norm_weighted(const ChaosVector& phi, const std::function<double(int)>& weight, double beta,
                          double lambda, double theta);

/// Multiplies level-n kernels by -(2 pi)^{2 theta} sum_i |k_i|^{2 theta}.
ChaosVector apply_L_theta(const ChaosVector& phi, double theta);

enum class BoxOverflow { error, truncate };

/// Chaos-raising part of the transport generator, times `coupling`. The output
/// has n_max = phi.n_max() + 1 unless out_n_max is given (higher levels dropped).
/// Throws ConfigError when the box does not hold the cutoff ball and overflow == error.
ChaosVector apply_G_plus(const ChaosVector& phi, const CutoffProfile& cutoff, double coupling = 1.0,
                         BoxOverflow overflow = BoxOverflow::error, int out_n_max = -1);
/// Chaos-lowering part, times `coupling`; output has the same n_max as phi.
ChaosVector apply_G_minus(const ChaosVector& phi, const CutoffProfile& cutoff, double coupling = 1.0,
                          BoxOverflow overflow = BoxOverflow::error);

/// Fraction of cutoff-admissible pairs (p, q, p + q) that are not all inside the box.
double chaos_truncation_loss(const ChaosBox& box, const CutoffProfile& cutoff);

/// Random symmetric, divergence-free, mean-free kernel at one level with
/// complex Gaussian entries scaled by profile(|k_1|, ..., |k_n|) (default 1).
ChaosVector random_chaos_vector(const ChaosBoxPtr& box, int n_max, int level, std::uint64_t seed,
                                std::uint32_t stream,
                                const std::function<double(const std::vector<double>&)>& profile = {});

/// Level-1 kernel of the real functional u -> <u, h>.
ChaosVector chaos_from_field(const ChaosBoxPtr& box, int n_max, const SpectralField& h);

/// Wick polynomial W_n(phi)(u) for n in {1, 2} evaluated on a mean-free
/// divergence-free sample u whose grid contains the chaos box.
cplx wick_evaluate(const ChaosVector& phi, int level, const SpectralField& u);

}  // namespace fracns
