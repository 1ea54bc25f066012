#include "vrl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "vrl/error.hpp"

namespace vrl {

namespace {

constexpr char kMagic[8] = {'V', 'R', 'L', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  put_u64(out, std::bit_cast<std::uint64_t>(d));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw Error(ErrorCode::data, "truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
};

void put_mat(std::string& out, const Mat& m) {
  for (double v : m.a) put_f64(out, v);
}

void read_mat(Reader& r, Mat& m) {
  for (double& v : m.a) v = r.f64();
}

}  // namespace

void save_checkpoint(const std::string& path, const PolicyParams& params,
                     std::uint64_t config_hash) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(params.shape.feature_dim));
  put_u32(out, static_cast<std::uint32_t>(params.shape.num_templates));
  put_u32(out, static_cast<std::uint32_t>(params.shape.num_bins));
  put_u64(out, config_hash);
  put_mat(out, params.w_template);
  put_mat(out, params.w_verdict);
  for (const Mat& m : params.w_bins) put_mat(out, m);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::io, "cannot write checkpoint: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::io, "checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::io, "cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::data, "not a checkpoint file: " + path);
  }
  Reader r{buf, sizeof(kMagic)};
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw Error(ErrorCode::incompatible,
                "unsupported checkpoint version " + std::to_string(version));
  }

  PolicyShape shape;
  shape.feature_dim = static_cast<int>(r.u32());
  shape.num_templates = static_cast<int>(r.u32());
  shape.num_bins = static_cast<int>(r.u32());
  if (shape.feature_dim < 1 || shape.num_templates < 1 || shape.num_bins < 2) {
    throw Error(ErrorCode::data, "corrupt checkpoint header: " + path);
  }

  Checkpoint ckpt;
  ckpt.config_hash = r.u64();
  ckpt.params = PolicyParams::zeros(shape);
  read_mat(r, ckpt.params.w_template);
  read_mat(r, ckpt.params.w_verdict);
  for (Mat& m : ckpt.params.w_bins) read_mat(r, m);
  if (r.pos != buf.size()) throw Error(ErrorCode::data, "trailing bytes in checkpoint: " + path);
  return ckpt;
}

}  // namespace vrl
