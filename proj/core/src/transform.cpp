#include "fracns/transform.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <tuple>

#include "fracns/errors.hpp"

namespace fracns {

namespace detail {

struct PlanSet {
  fftw_plan c2r = nullptr;
  fftw_plan r2c = nullptr;
};

struct AlignedBuffer {
  AlignedBuffer(std::size_t real_n, std::size_t half_n)
      : real(fftw_alloc_real(real_n)), half(fftw_alloc_complex(half_n)) {}
  ~AlignedBuffer() {
    fftw_free(real);
    fftw_free(half);
  }
  double* real;
  fftw_complex* half;
};

}  // namespace detail

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Plans live until process exit; FFTW's planner is not thread-safe, execution is.
std::shared_ptr<const detail::PlanSet> plans_for(int dim, int points) {
  static std::map<std::pair<int, int>, std::shared_ptr<detail::PlanSet>> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto key = std::make_pair(dim, points);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  int n[3] = {points, points, points};
  std::size_t real_n = 1, half_n = 1;
  for (int a = 0; a < dim; ++a) real_n *= points;
  half_n = real_n / points * (points / 2 + 1);
  detail::AlignedBuffer scratch(real_n, half_n);
  auto set = std::make_shared<detail::PlanSet>();
  set->c2r = fftw_plan_dft_c2r(dim, n, scratch.half, scratch.real, FFTW_ESTIMATE);
  set->r2c = fftw_plan_dft_r2c(dim, n, scratch.real, scratch.half, FFTW_ESTIMATE);
  if (!set->c2r || !set->r2c) throw std::runtime_error("FFTW plan creation failed");
  cache.emplace(key, set);
  return set;
}

}  // namespace

Transformer::Transformer(GridPtr grid) : grid_(std::move(grid)) {
  const int d = grid_->dim();
  const int P = grid_->points_per_axis();
  plans_ = plans_for(d, P);
  buf_ = std::make_unique<detail::AlignedBuffer>(grid_->point_count(), half_size());
  const std::size_t nmodes = grid_->mode_count();
  pos_.resize(nmodes);
  conj_.resize(nmodes);
  const int halfP = P / 2 + 1;
  auto wrap = [P](int n) { return n < 0 ? n + P : n; };
  for (std::size_t idx = 0; idx < nmodes; ++idx) {
    Index n = grid_->integer_index(idx);
    bool c = n[d - 1] < 0;
    if (c)
      for (int a = 0; a < d; ++a) n[a] = -n[a];
    std::size_t p = 0;
    for (int a = 0; a < d - 1; ++a) p = p * P + static_cast<std::size_t>(wrap(n[a]));
    p = p * halfP + static_cast<std::size_t>(n[d - 1]);
    pos_[idx] = p;
    conj_[idx] = c ? 1 : 0;
  }
  const double M = grid_->side();
  fscale_ = std::pow(M / P, d);
  iscale_ = 1.0 / grid_->volume();
}

Transformer::~Transformer() = default;

std::size_t Transformer::half_size() const {
  const int P = grid_->points_per_axis();
  return grid_->point_count() / P * (P / 2 + 1);
}

cplx* Transformer::half_buffer() { return reinterpret_cast<cplx*>(buf_->half); }
double* Transformer::real_buffer() { return buf_->real; }
std::size_t Transformer::packed_position(std::size_t idx) const { return pos_[idx]; }
bool Transformer::packed_conjugate(std::size_t idx) const { return conj_[idx] != 0; }

void Transformer::execute_inverse() { fftw_execute_dft_c2r(plans_->c2r, buf_->half, buf_->real); }
void Transformer::execute_forward() { fftw_execute_dft_r2c(plans_->r2c, buf_->real, buf_->half); }

void Transformer::execute_inverse_into(double* physical) {
  fftw_execute_dft_c2r(plans_->c2r, buf_->half, physical);
}
void Transformer::execute_forward_from(double* physical) {
  fftw_execute_dft_r2c(plans_->r2c, physical, buf_->half);
}

void Transformer::RealDeleter::operator()(double* p) const { fftw_free(p); }

Transformer::RealArray Transformer::allocate_real(std::size_t n) { return RealArray(fftw_alloc_real(n)); }

void Transformer::inverse_scalar(const cplx* box, double* physical) {
  cplx* half = half_buffer();
  std::fill(half, half + half_size(), cplx{0.0, 0.0});
  const std::size_t nmodes = grid_->mode_count();
  for (std::size_t idx = 0; idx < nmodes; ++idx)
    if (!conj_[idx]) half[pos_[idx]] = box[idx] * iscale_;
  execute_inverse();
  std::memcpy(physical, buf_->real, grid_->point_count() * sizeof(double));
}

void Transformer::forward_scalar(const double* physical, cplx* box) {
  std::memcpy(buf_->real, physical, grid_->point_count() * sizeof(double));
  execute_forward();
  const cplx* half = half_buffer();
  const std::size_t nmodes = grid_->mode_count();
  for (std::size_t idx = 0; idx < nmodes; ++idx) {
    const cplx v = half[pos_[idx]] * fscale_;
    box[idx] = conj_[idx] ? std::conj(v) : v;
  }
}

std::vector<double> Transformer::inverse(const SpectralField& u) {
  if (!u.grid().same_shape(*grid_)) throw ShapeError("inverse transform: field grid mismatch");
  const std::size_t np = grid_->point_count();
  std::vector<double> out(np * u.components());
  for (int c = 0; c < u.components(); ++c)
    inverse_scalar(u.component(c).data(), out.data() + c * np);
  return out;
}

SpectralField Transformer::forward(std::span<const double> physical) {
  const std::size_t np = grid_->point_count();
  if (physical.size() != np * static_cast<std::size_t>(grid_->dim()))
    throw ShapeError("forward transform: physical array has the wrong size");
  SpectralField u(grid_);
  for (int c = 0; c < grid_->dim(); ++c)
    forward_scalar(physical.data() + c * np, u.component(c).data());
  return u;
}

}  // namespace fracns
