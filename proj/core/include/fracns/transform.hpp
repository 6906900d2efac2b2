#pragma once

#include <memory>
#include <span>
#include <vector>

#include "fracns/spectral_field.hpp"

namespace fracns {

namespace detail {
struct PlanSet;
struct AlignedBuffer;
}  // namespace detail

/// Real <-> spectral transforms on the collocation grid of a WaveGrid.
///
///   forward:  u(k) = (M/P)^d sum_x phi(x) e^{-2 pi i k.x}   (restricted to the mode box)
///   inverse:  phi(x) = M^{-d} sum_k u(k) e^{2 pi i k.x}
///
/// Physical arrays are [component][x_0][x_1][x_2] with x_j = j M / P. Plans are
/// shared process-wide; buffers are owned per instance, so each thread needs
/// its own Transformer.
class Transformer {
 public:
  explicit Transformer(GridPtr grid);
  ~Transformer();
  Transformer(const Transformer&) = delete;
  Transformer& operator=(const Transformer&) = delete;

  const WaveGrid& grid() const { return *grid_; }

  std::vector<double> inverse(const SpectralField& u);
  SpectralField forward(std::span<const double> physical);

  /// Scalar transforms; box arrays have mode_count() entries, physical arrays point_count().
  void inverse_scalar(const cplx* box, double* physical);
  void forward_scalar(const double* physical, cplx* box);

  /// Half-spectrum access for kernels that stay in the packed layout.
  std::size_t half_size() const;
  cplx* half_buffer();
  double* real_buffer();
  void execute_inverse();  ///< half_buffer -> real_buffer, unnormalized
  void execute_forward();  ///< real_buffer -> half_buffer, unnormalized
  /// As above with another real array from allocate_real().
  void execute_inverse_into(double* physical);
  void execute_forward_from(double* physical);

  struct RealDeleter {
    void operator()(double* p) const;
  };
  using RealArray = std::unique_ptr<double[], RealDeleter>;
  /// SIMD-aligned array usable with the *_into / *_from calls.
  static RealArray allocate_real(std::size_t n);
  /// Packed position of box mode idx, and whether the packed entry stores its conjugate.
  std::size_t packed_position(std::size_t idx) const;
  bool packed_conjugate(std::size_t idx) const;
  double forward_scale() const { return fscale_; }
  double inverse_scale() const { return iscale_; }

 private:
  GridPtr grid_;
  std::shared_ptr<const detail::PlanSet> plans_;
  std::unique_ptr<detail::AlignedBuffer> buf_;
  std::vector<std::size_t> pos_;
  std::vector<char> conj_;
  double fscale_;
  double iscale_;
};

}  // namespace fracns
