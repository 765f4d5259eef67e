#include "rgcf/sparse.hpp"

#include <cmath>
#include <functional>

namespace rgcf {

SparseMatrix build_adjacency(const InteractionDataset& d) {
  const std::size_t m = d.num_users;
  const std::size_t total = m + d.num_items;
  SparseMatrix a;
  a.rows = a.cols = total;
  a.row_offsets.assign(total + 1, 0);

  for (const auto& p : d.train.pairs) {
    ++a.row_offsets[p.user + 1];
    ++a.row_offsets[m + p.item + 1];
  }
  for (std::size_t r = 1; r <= total; ++r) a.row_offsets[r] += a.row_offsets[r - 1];

  a.col_indices.resize(2 * d.train.size());
  a.values.assign(2 * d.train.size(), 1.0);
  std::vector<std::size_t> cursor(a.row_offsets.begin(), a.row_offsets.end() - 1);
  // train pairs are sorted by (user, item), so user rows fill with ascending
  // item columns and item rows with ascending user columns
  for (const auto& p : d.train.pairs)
    a.col_indices[cursor[p.user]++] = static_cast<std::uint32_t>(m + p.item);
  for (const auto& p : d.train.pairs)
    a.col_indices[cursor[m + p.item]++] = p.user;
  return a;
}

namespace {

// Copies `a` with per-entry rescaling and a diagonal contribution merged into
// each row. Diagonal entries that would be zero are not stored.
SparseMatrix with_diagonal(
    const SparseMatrix& a,
    const std::function<double(std::size_t r, std::size_t c, double v)>& edge_value,
    const std::function<double(std::size_t r, double existing)>& diag_value) {
  SparseMatrix out;
  out.rows = out.cols = a.rows;
  out.row_offsets.assign(a.rows + 1, 0);
  out.col_indices.reserve(a.nnz() + a.rows);
  out.values.reserve(a.nnz() + a.rows);

  for (std::size_t r = 0; r < a.rows; ++r) {
    bool diag_done = false;
    auto push = [&](std::uint32_t c, double v) {
      if (v == 0.0) return;
      out.col_indices.push_back(c);
      out.values.push_back(v);
    };
    for (std::size_t idx = a.row_offsets[r]; idx < a.row_offsets[r + 1]; ++idx) {
      const std::uint32_t c = a.col_indices[idx];
      if (!diag_done && c >= r) {
        diag_done = true;
        if (c == r) {
          push(c, diag_value(r, a.values[idx]));
          continue;
        }
        push(static_cast<std::uint32_t>(r), diag_value(r, 0.0));
      }
      push(c, edge_value(r, c, a.values[idx]));
    }
    if (!diag_done) push(static_cast<std::uint32_t>(r), diag_value(r, 0.0));
    out.row_offsets[r + 1] = out.col_indices.size();
  }
  return out;
}

}  // namespace

PropagationOperator build_propagation(const SparseMatrix& a, double lambda) {
  if (a.rows != a.cols)
    throw std::invalid_argument("propagation operator needs a square adjacency");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");

  PropagationOperator op;
  op.lambda = lambda;
  op.degrees.assign(a.rows, 0.0);
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t idx = a.row_offsets[r]; idx < a.row_offsets[r + 1]; ++idx)
      op.degrees[r] += a.values[idx];

  const auto& deg = op.degrees;
  op.matrix = with_diagonal(
      a,
      [&deg, lambda](std::size_t r, std::size_t c, double v) {
        return v / std::sqrt((deg[r] + lambda) * (deg[c] + lambda));
      },
      [&deg, lambda](std::size_t r, double existing) {
        const double d = deg[r] + lambda;
        if (d == 0.0) return 0.0;  // isolated node at lambda = 0
        return (existing + lambda) / d;
      });
  return op;
}

SparseMatrix build_unnormalized(const SparseMatrix& a, double lambda) {
  if (a.rows != a.cols)
    throw std::invalid_argument("build_unnormalized needs a square adjacency");
  if (lambda == 0.0) return a;
  return with_diagonal(
      a, [](std::size_t, std::size_t, double v) { return v; },
      [lambda](std::size_t, double existing) { return existing + lambda; });
}

}  // namespace rgcf
