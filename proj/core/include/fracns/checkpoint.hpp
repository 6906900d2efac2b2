#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "fracns/spectral_field.hpp"

namespace fracns {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Saved state of one trajectory. On disk (all integers and doubles little-endian):
///
///   "FRNSCKPT" | u32 version | u64 config_hash | u64 seed | u32 stream | u64 step
///   | u32 dim | u32 modes_per_axis | u32 points_per_axis | f64 side
///   | u64 config_length | config bytes | u64 coefficient_count | (f64 re, f64 im)...
///   | u32 crc32 over every preceding byte
struct Checkpoint {
  std::uint64_t config_hash = 0;
  std::string config_text;
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;
  std::uint64_t step = 0;
  SpectralField state;
};

/// CRC-64/XZ of the text; used as the config identity in checkpoints and records.
std::uint64_t config_hash(std::string_view text);

std::string encode_checkpoint(const Checkpoint& ck);
/// Throws CheckpointError on bad magic, version mismatch, truncation or CRC mismatch.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace fracns
