#include "rgcf/snapshot.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace rgcf {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_f64(std::string& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b)
    out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

struct Reader {
  const std::string& data;
  const std::string& path;
  std::size_t pos = 0;

  void need(std::size_t bytes) {
    if (pos + bytes > data.size())
      throw snapshot_truncated_error("snapshot truncated: " + path);
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data[pos++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data[pos++]))
           << (8 * b);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data[pos++]))
              << (8 * b);
    return std::bit_cast<double>(bits);
  }
  void f64_block(double* dst, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) dst[i] = f64();
  }
};

}  // namespace

void save_snapshot(const Snapshot& snap, const std::string& path) {
  const std::size_t total = static_cast<std::size_t>(snap.m) + snap.n;
  if (snap.e0.rows() != total || snap.e0.cols() != snap.k ||
      snap.biases.size() != total)
    throw std::invalid_argument("snapshot arrays do not match header sizes");
  if (snap.e_star && (snap.e_star->rows() != total ||
                      snap.e_star->cols() != snap.final_width()))
    throw std::invalid_argument("cached final embeddings do not match header");

  std::string out;
  out.reserve(64 + 8 * (snap.e0.size() + snap.biases.size() +
                        (snap.e_star ? snap.e_star->size() : 0)));
  out += "RGCF";
  put_u32(out, kSnapshotVersion);
  put_u32(out, snap.m);
  put_u32(out, snap.n);
  put_u32(out, snap.k);
  put_u32(out, snap.L);
  out.push_back(static_cast<char>(snap.mode));
  put_f64(out, snap.lambda);
  for (double v : snap.e0.values()) put_f64(out, v);
  for (double v : snap.biases) put_f64(out, v);
  out.push_back(snap.e_star ? 1 : 0);
  if (snap.e_star)
    for (double v : snap.e_star->values()) put_f64(out, v);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write snapshot: " + tmp);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("short write to snapshot: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Snapshot load_snapshot(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open snapshot: " + path);
  std::string data((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());

  Reader r{data, path};
  r.need(4);
  if (data.compare(0, 4, "RGCF") != 0)
    throw snapshot_format_error("not a snapshot file (bad magic): " + path);
  r.pos = 4;
  const std::uint32_t version = r.u32();
  if (version != kSnapshotVersion)
    throw snapshot_version_error("unsupported snapshot version " +
                                 std::to_string(version) + ": " + path);

  Snapshot snap;
  snap.m = r.u32();
  snap.n = r.u32();
  snap.k = r.u32();
  snap.L = r.u32();
  const std::uint8_t mode = r.u8();
  if (mode > 1)
    throw snapshot_format_error("invalid mode byte in snapshot: " + path);
  snap.mode = static_cast<FinalMode>(mode);
  snap.lambda = r.f64();

  const std::size_t total = static_cast<std::size_t>(snap.m) + snap.n;
  snap.e0 = DenseMatrix<double>(total, snap.k);
  r.f64_block(snap.e0.values().data(), snap.e0.size());
  snap.biases.resize(total);
  r.f64_block(snap.biases.data(), snap.biases.size());
  const std::uint8_t flag = r.u8();
  if (flag > 1)
    throw snapshot_format_error("invalid cache flag in snapshot: " + path);
  if (flag == 1) {
    DenseMatrix<double> estar(total, snap.final_width());
    r.f64_block(estar.values().data(), estar.size());
    snap.e_star = std::move(estar);
  }
  if (r.pos != data.size())
    throw snapshot_format_error("trailing bytes in snapshot: " + path);
  return snap;
}

}  // namespace rgcf
