#include "fracns/checkpoint.hpp"

#include <bit>
#include <boost/crc.hpp>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fracns/errors.hpp"

namespace fracns {

namespace {

constexpr char kMagic[8] = {'F', 'R', 'N', 'S', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <class T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const char* p, std::size_t n) { out_.append(p, n); }
  std::string& str() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  template <class T>
  T uint() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw CheckpointError("checkpoint is truncated");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32(std::string_view s) {
  boost::crc_32_type crc;
  crc.process_bytes(s.data(), s.size());
  return crc.checksum();
}

}  // namespace

std::uint64_t config_hash(std::string_view text) {
  boost::crc_optimal<64, 0x42F0E1EBA9EA3693ull, ~0ull, ~0ull, true, true> crc;
  crc.process_bytes(text.data(), text.size());
  return crc.checksum();
}

std::string encode_checkpoint(const Checkpoint& ck) {
  const auto& g = ck.state.grid();
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.uint<std::uint32_t>(kCheckpointVersion);
  w.uint<std::uint64_t>(ck.config_hash);
  w.uint<std::uint64_t>(ck.seed);
  w.uint<std::uint32_t>(ck.stream);
  w.uint<std::uint64_t>(ck.step);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(g.dim()));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(g.modes_per_axis()));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(g.points_per_axis()));
  w.f64(g.side());
  w.uint<std::uint64_t>(ck.config_text.size());
  w.bytes(ck.config_text.data(), ck.config_text.size());
  const auto& data = ck.state.data();
  w.uint<std::uint64_t>(data.size());
  for (const auto& c : data) {
    w.f64(c.real());
    w.f64(c.imag());
  }
  const std::uint32_t crc = crc32(w.str());
  w.uint<std::uint32_t>(crc);
  return std::move(w.str());
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof kMagic + 4 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw CheckpointError("not a checkpoint file (bad magic)");
  Reader head(bytes.substr(sizeof kMagic));
  const auto version = head.uint<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  if (bytes.size() < sizeof kMagic + 8) throw CheckpointError("checkpoint is truncated");
  const auto body = bytes.substr(0, bytes.size() - 4);
  Reader tail(bytes.substr(bytes.size() - 4));
  if (crc32(body) != tail.uint<std::uint32_t>()) throw CheckpointError("checkpoint CRC mismatch");

  Reader r(body.substr(sizeof kMagic + 4));
  Checkpoint ck;
  ck.config_hash = r.uint<std::uint64_t>();
  ck.seed = r.uint<std::uint64_t>();
  ck.stream = r.uint<std::uint32_t>();
  ck.step = r.uint<std::uint64_t>();
  const int dim = static_cast<int>(r.uint<std::uint32_t>());
  const int modes = static_cast<int>(r.uint<std::uint32_t>());
  const int points = static_cast<int>(r.uint<std::uint32_t>());
  const double side = r.f64();
  const auto text_len = r.uint<std::uint64_t>();
  ck.config_text = std::string(r.bytes(text_len));
  GridPtr grid;
  try {
    grid = std::make_shared<const WaveGrid>(dim, side, modes, points);
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint grid is invalid: ") + e.what());
  }
  SpectralField state(grid);
  const auto count = r.uint<std::uint64_t>();
  if (count != state.data().size()) throw CheckpointError("checkpoint coefficient count does not match its grid");
  for (auto& c : state.data()) {
    const double re = r.f64();
    const double im = r.f64();
    c = {re, im};
  }
  ck.state = std::move(state);
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  const std::string bytes = encode_checkpoint(ck);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open '" + tmp + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("failed writing checkpoint '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace fracns
