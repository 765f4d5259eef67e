#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "rgcf/dense.hpp"
#include "rgcf/rng.hpp"
#include "rgcf/sparse.hpp"

namespace rgcf {

enum class FinalMode : std::uint8_t { last_layer = 0, concat = 1 };

// Trainable parameters: layer-0 embeddings (users in rows 0..m-1, items in
// rows m..m+n-1) and one bias per node.
template <typename T>
struct EmbeddingStateT {
  DenseMatrix<T> e0;
  std::vector<T> biases;
  std::uint32_t num_users = 0;

  std::uint32_t num_items() const {
    return static_cast<std::uint32_t>(e0.rows() - num_users);
  }
};

using EmbeddingState = EmbeddingStateT<double>;

// All propagated layers [E0, E1, ..., EL], cached for reuse by the backward
// pass and the concatenation mode.
template <typename T>
struct LayerStackT {
  std::vector<DenseMatrix<T>> layers;
  std::uint32_t num_users = 0;

  std::size_t depth() const { return layers.size() - 1; }
};

using LayerStack = LayerStackT<double>;

template <typename T>
struct FinalEmbeddingsT {
  DenseMatrix<T> e_star;  // width k (last_layer) or (L+1)*k (concat)
  FinalMode mode = FinalMode::last_layer;
  std::uint32_t num_users = 0;
};

using FinalEmbeddings = FinalEmbeddingsT<double>;

// Entries i.i.d. normal(0, 0.01); biases zero.
template <typename T>
EmbeddingStateT<T> init_embeddings(std::uint32_t m, std::uint32_t n,
                                   std::uint32_t k, Rng& rng) {
  EmbeddingStateT<T> state;
  state.num_users = m;
  state.e0 = DenseMatrix<T>(static_cast<std::size_t>(m) + n, k);
  for (auto& v : state.e0.values())
    v = static_cast<T>(rng.normal(0.0, 0.01));
  state.biases.assign(static_cast<std::size_t>(m) + n, T{});
  return state;
}

inline EmbeddingState init_embeddings(std::uint32_t m, std::uint32_t n,
                                      std::uint32_t k, std::uint64_t seed) {
  Rng rng(seed);
  return init_embeddings<double>(m, n, k, rng);
}

// Layer l equals P^l E0; all layers cached.
template <typename T>
LayerStackT<T> propagate(const PropagationOperator& p,
                         const EmbeddingStateT<T>& state, std::size_t depth) {
  LayerStackT<T> stack;
  stack.num_users = state.num_users;
  stack.layers.reserve(depth + 1);
  stack.layers.push_back(state.e0);
  for (std::size_t l = 0; l < depth; ++l)
    stack.layers.push_back(spmm(p, stack.layers.back()));
  return stack;
}

template <typename T>
FinalEmbeddingsT<T> finalize(const LayerStackT<T>& stack, FinalMode mode) {
  if (stack.layers.empty()) throw std::invalid_argument("empty layer stack");
  FinalEmbeddingsT<T> fe;
  fe.mode = mode;
  fe.num_users = stack.num_users;
  if (mode == FinalMode::last_layer) {
    fe.e_star = stack.layers.back();
    return fe;
  }
  const std::size_t rows = stack.layers.front().rows();
  const std::size_t k = stack.layers.front().cols();
  fe.e_star = DenseMatrix<T>(rows, stack.layers.size() * k);
  for (std::size_t l = 0; l < stack.layers.size(); ++l)
    for (std::size_t r = 0; r < rows; ++r) {
      const T* src = stack.layers[l].row(r);
      T* dst = fe.e_star.row(r) + l * k;
      for (std::size_t c = 0; c < k; ++c) dst[c] = src[c];
    }
  return fe;
}

// r_ui = <e_u*, e_i*> + b_u + b_i, accumulated in double.
template <typename T>
double score(const FinalEmbeddingsT<T>& fe, std::span<const T> biases,
             std::uint32_t u, std::uint32_t i) {
  const std::size_t m = fe.num_users;
  const std::size_t n = fe.e_star.rows() - m;
  if (u >= m)
    throw std::out_of_range("user id " + std::to_string(u) +
                            " out of range (m=" + std::to_string(m) + ")");
  if (i >= n)
    throw std::out_of_range("item id " + std::to_string(i) +
                            " out of range (n=" + std::to_string(n) + ")");
  const T* eu = fe.e_star.row(u);
  const T* ei = fe.e_star.row(m + i);
  double dot = 0.0;
  for (std::size_t c = 0; c < fe.e_star.cols(); ++c)
    dot += static_cast<double>(eu[c]) * static_cast<double>(ei[c]);
  return dot + static_cast<double>(biases[u]) + static_cast<double>(biases[m + i]);
}

inline constexpr double kExcludedScore = -std::numeric_limits<double>::infinity();

// Scores every item for user u; excluded items get -inf so indices stay
// stable for ranking. `exclude` must be sorted ascending.
template <typename T>
std::vector<double> score_all_items(const FinalEmbeddingsT<T>& fe,
                                    std::span<const T> biases, std::uint32_t u,
                                    std::span<const std::uint32_t> exclude) {
  const std::size_t m = fe.num_users;
  const std::size_t n = fe.e_star.rows() - m;
  if (u >= m)
    throw std::out_of_range("user id " + std::to_string(u) +
                            " out of range (m=" + std::to_string(m) + ")");
  std::vector<double> scores(n);
  const T* eu = fe.e_star.row(u);
  const double bu = static_cast<double>(biases[u]);
  const std::size_t width = fe.e_star.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const T* ei = fe.e_star.row(m + i);
    double dot = 0.0;
    for (std::size_t c = 0; c < width; ++c)
      dot += static_cast<double>(eu[c]) * static_cast<double>(ei[c]);
    scores[i] = dot + bu + static_cast<double>(biases[m + i]);
  }
  for (std::uint32_t i : exclude)
    if (i < n) scores[i] = kExcludedScore;
  return scores;
}

}  // namespace rgcf
