#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fracns/checkpoint.hpp"
#include "fracns/dynamics.hpp"
#include "fracns/errors.hpp"
#include "test_support.hpp"

using namespace fracns;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("fracns_test_" + name)).string();
}

Checkpoint sample_checkpoint() {
  auto g = WaveGrid::for_cutoff(3, 1.5, 2.0);
  Checkpoint ck;
  ck.config_text = "[dynamics]\ntheta = 1\n";
  ck.config_hash = config_hash(ck.config_text);
  ck.seed = 0xfeedfacecafebeefULL;
  ck.stream = 7;
  ck.step = 123456789;
  ck.state = fracns::testing::random_divfree(g, 3);
  return ck;
}

}  // namespace

TEST(Checkpoint, ConfigHashIsCrc64Xz) {
  // Standard check value of CRC-64/XZ.
  EXPECT_EQ(config_hash("123456789"), 0x995dc9bbdf1939faULL);
}

TEST(Checkpoint, EncodeDecodeRoundTrip) {
  const Checkpoint ck = sample_checkpoint();
  const Checkpoint back = decode_checkpoint(encode_checkpoint(ck));
  EXPECT_EQ(back.config_hash, ck.config_hash);
  EXPECT_EQ(back.config_text, ck.config_text);
  EXPECT_EQ(back.seed, ck.seed);
  EXPECT_EQ(back.stream, ck.stream);
  EXPECT_EQ(back.step, ck.step);
  EXPECT_TRUE(back.state.grid().same_shape(ck.state.grid()));
  EXPECT_EQ(back.state.data(), ck.state.data());
}

TEST(Checkpoint, ResumeIsBitExact) {
  auto g = WaveGrid::for_cutoff(3, 1.0, 4.0);
  DynamicsConfig cfg;
  cfg.cutoff_radius = 4;
  cfg.horizon = 1.0;
  NoiseParams noise;
  noise.seed = 2;
  Trajectory straight(g, cfg, noise);
  straight.advance(200);

  Trajectory first(g, cfg, noise);
  first.advance(100);
  Checkpoint ck;
  ck.config_text = "x";
  ck.config_hash = config_hash(ck.config_text);
  ck.seed = noise.seed;
  ck.stream = noise.stream_id;
  ck.step = first.step_index();
  ck.state = first.state();
  const std::string path = temp_path("resume.ckpt");
  save_checkpoint(path, ck);
  const Checkpoint loaded = load_checkpoint(path);
  std::filesystem::remove(path);

  Trajectory resumed(loaded.state.grid_ptr(), cfg, noise, loaded.state, loaded.step);
  resumed.advance(100);
  EXPECT_EQ(resumed.step_index(), 200u);
  EXPECT_EQ(resumed.state().data(), straight.state().data());
}

TEST(Checkpoint, CorruptionIsDetected) {
  const std::string bytes = encode_checkpoint(sample_checkpoint());
  for (std::size_t pos : {std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    std::string bad = bytes;
    bad[pos] ^= 0x10;
    EXPECT_THROW(decode_checkpoint(bad), CheckpointError) << pos;
  }
  try {
    std::string bad = bytes;
    bad[bytes.size() / 2] ^= 1;
    decode_checkpoint(bad);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("CRC"), std::string::npos);
  }
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 9)), CheckpointError);
  EXPECT_THROW(decode_checkpoint("not a checkpoint at all"), CheckpointError);
}

TEST(Checkpoint, VersionBumpIsRefused) {
  std::string bytes = encode_checkpoint(sample_checkpoint());
  bytes[8] = static_cast<char>(kCheckpointVersion + 1);
  try {
    decode_checkpoint(bytes);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(Checkpoint, FailedLoadLeavesNoFile) {
  EXPECT_THROW(load_checkpoint(temp_path("missing.ckpt")), CheckpointError);
  const std::string path = temp_path("partial.ckpt");
  {
    std::ofstream out(path, std::ios::binary);
    out << "FRNSCKPT";
  }
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
  std::filesystem::remove(path);
}
