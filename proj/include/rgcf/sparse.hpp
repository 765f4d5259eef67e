#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rgcf/dense.hpp"
#include "rgcf/interactions.hpp"

namespace rgcf {

// Compressed sparse row. Column indices strictly increasing within a row;
// no explicit zeros are stored.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_offsets;  // rows + 1 entries
  std::vector<std::uint32_t> col_indices;
  std::vector<double> values;

  std::size_t nnz() const { return col_indices.size(); }
};

// Bipartite 0/1 adjacency over m+n nodes: users are rows 0..m-1, items are
// rows m..m+n-1, one symmetric entry pair per train interaction.
SparseMatrix build_adjacency(const InteractionDataset& d);

// (D + lambda*I)^-1/2 (A + lambda*I) (D + lambda*I)^-1/2 with D the diagonal
// of row sums of A. Zero-degree nodes at lambda = 0 keep an all-zero row.
struct PropagationOperator {
  SparseMatrix matrix;
  double lambda = 0.0;
  std::vector<double> degrees;  // row sums of A
};

PropagationOperator build_propagation(const SparseMatrix& a, double lambda);

// A + lambda*I without degree normalization.
SparseMatrix build_unnormalized(const SparseMatrix& a, double lambda);

// Sparse x dense product. Accumulation runs in double regardless of the
// dense scalar type; per-row order is fixed, so results are deterministic.
template <typename T>
DenseMatrix<T> spmm(const SparseMatrix& p, const DenseMatrix<T>& e) {
  if (e.rows() != p.cols)
    throw std::invalid_argument(
        "spmm shape mismatch: operator is " + std::to_string(p.rows) + "x" +
        std::to_string(p.cols) + ", dense input has " +
        std::to_string(e.rows()) + " rows");
  const std::size_t k = e.cols();
  DenseMatrix<T> out(p.rows, k);
  std::vector<double> acc(k);
  for (std::size_t r = 0; r < p.rows; ++r) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t idx = p.row_offsets[r]; idx < p.row_offsets[r + 1]; ++idx) {
      const double v = p.values[idx];
      const T* src = e.row(p.col_indices[idx]);
      for (std::size_t c = 0; c < k; ++c) acc[c] += v * static_cast<double>(src[c]);
    }
    T* dst = out.row(r);
    for (std::size_t c = 0; c < k; ++c) dst[c] = static_cast<T>(acc[c]);
  }
  return out;
}

template <typename T>
DenseMatrix<T> spmm(const PropagationOperator& p, const DenseMatrix<T>& e) {
  return spmm(p.matrix, e);
}

}  // namespace rgcf
