#include "fracns/philox.hpp"

#include <cmath>
#include <numbers>

namespace fracns {

namespace {
constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_unit(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(a) << 21) ^ (b >> 11);
  return (static_cast<double>(bits & ((1ull << 53) - 1)) + 0.5) * 0x1.0p-53;
}

PhiloxCounter block_for(const DrawAddress& a, std::uint32_t block) {
  const std::uint32_t step_lo = static_cast<std::uint32_t>(a.step);
  const std::uint32_t step_hi = static_cast<std::uint32_t>(a.step >> 32) & 0xFFFFu;
  return {a.slot, step_lo, step_hi | ((block & 0xFFu) << 16) | (static_cast<std::uint32_t>(a.purpose) << 24),
          a.stream};
}

PhiloxKey key_for(const DrawAddress& a) {
  return {static_cast<std::uint32_t>(a.seed), static_cast<std::uint32_t>(a.seed >> 32)};
}
}  // namespace

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::array<double, 2> CounterNormals::uniforms(std::uint32_t block) const {
  const auto r = philox4x32(block_for(addr_, block), key_for(addr_));
  return {to_unit(r[0], r[1]), to_unit(r[2], r[3])};
}

std::array<double, 2> CounterNormals::pair(std::uint32_t block) const {
  const auto u = uniforms(block);
  const double rad = std::sqrt(-2.0 * std::log(u[0]));
  const double ang = 2.0 * std::numbers::pi * u[1];
  return {rad * std::cos(ang), rad * std::sin(ang)};
}

std::uint64_t NormalStream::next_u64() {
  DrawAddress a = addr_;
  a.slot = static_cast<std::uint32_t>(counter_ >> 8);
  const std::uint32_t block = static_cast<std::uint32_t>(counter_ & 0xFFu);
  ++counter_;
  const auto r = philox4x32(block_for(a, block), key_for(a));
  return (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
}

double NormalStream::uniform() {
  const std::uint64_t v = next_u64();
  return (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;
}

double NormalStream::next() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  DrawAddress a = addr_;
  a.slot = static_cast<std::uint32_t>(counter_ >> 8);
  const auto z = CounterNormals(a).pair(static_cast<std::uint32_t>(counter_ & 0xFFu));
  ++counter_;
  spare_ = z[1];
  have_spare_ = true;
  return z[0];
}

}  // namespace fracns
