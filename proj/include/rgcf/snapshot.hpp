#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgcf/dense.hpp"
#include "rgcf/propagation.hpp"

namespace rgcf {

struct snapshot_format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct snapshot_version_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct snapshot_truncated_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary layout, little-endian, no padding:
//   "RGCF"  u32 version=1  u32 m  u32 n  u32 k  u32 L  u8 mode  f64 lambda
//   E0 as f64 row-major (m+n rows, k cols)
//   biases as f64 (m+n)
//   u8 flag, then when flag=1 the cached E* as f64 row-major
//   (width k for last_layer, (L+1)*k for concat)
struct Snapshot {
  std::uint32_t m = 0;
  std::uint32_t n = 0;
  std::uint32_t k = 0;
  std::uint32_t L = 0;
  FinalMode mode = FinalMode::last_layer;
  double lambda = 0.0;
  DenseMatrix<double> e0;
  std::vector<double> biases;
  std::optional<DenseMatrix<double>> e_star;

  std::uint32_t final_width() const {
    return mode == FinalMode::concat ? (L + 1) * k : k;
  }
};

inline constexpr std::uint32_t kSnapshotVersion = 1;

// Writes via a temp file and rename, so a crash never leaves a partial
// snapshot at the target path.
void save_snapshot(const Snapshot& snap, const std::string& path);
Snapshot load_snapshot(const std::string& path);

}  // namespace rgcf
