#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rgcf/interactions.hpp"
#include "rgcf/propagation.hpp"
#include "rgcf/rng.hpp"
#include "rgcf/sparse.hpp"

namespace rgcf {

enum class RegScope : std::uint8_t { batch = 0, full = 1 };
enum class Precision : std::uint8_t { single = 0, double_precision = 1 };

struct ModelConfig {
  std::uint32_t k = 64;              // embedding width
  std::uint32_t L = 3;               // propagation depth
  double lambda = 1.0;               // self-loop weight
  double alpha = 1e-3;               // L2 on final embeddings
  double beta = 1e-4;                // L2 on biases
  double learning_rate = 0.001;
  std::uint32_t batch_size = 1024;
  std::uint32_t max_epochs = 1000;
  std::uint32_t eval_every = 10;     // epochs between validation evals; 0 = off
  std::uint32_t patience = 5;        // evals without improvement before stopping
  FinalMode mode = FinalMode::last_layer;
  RegScope reg_scope = RegScope::batch;
  std::uint64_t seed = 42;
  Precision precision = Precision::double_precision;
};

void validate_config(const ModelConfig& cfg);

struct Triple {
  std::uint32_t user = 0;
  std::uint32_t pos = 0;
  std::uint32_t neg = 0;
};

// (u, i, j) with i a train positive of u and j not one.
struct TripleBatch {
  std::vector<Triple> triples;
  std::size_t size() const { return triples.size(); }
};

// Positive pairs are drawn uniformly (users weighted by their degree); the
// negative is uniform over items with rejection against u's positives.
TripleBatch sample_batch(const InteractionDataset& d,
                         const UserItemIndex& train_index,
                         std::uint32_t batch_size, Rng& rng);
TripleBatch sample_batch(const InteractionDataset& d, std::uint32_t batch_size,
                         Rng& rng);

template <typename T>
struct GradientsT {
  DenseMatrix<T> e0;
  std::vector<T> biases;
};

using Gradients = GradientsT<double>;

template <typename T>
struct AdamStateT {
  DenseMatrix<T> m_e0, v_e0;
  std::vector<T> m_bias, v_bias;
  std::uint64_t step = 0;
};

using AdamState = AdamStateT<double>;

struct EvalPoint {
  std::uint32_t epoch = 0;
  double recall = 0.0;  // validation recall@20
  double ndcg = 0.0;    // validation ndcg@20
};

struct TrainReport {
  std::vector<double> epoch_loss;
  std::vector<EvalPoint> evals;
  std::uint32_t stopping_epoch = 0;
  std::uint32_t best_epoch = 0;  // 0 when no validation eval ever ran
};

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Mean over the batch of -ln sigmoid(pos - neg) plus the weighted L2 terms.
inline double bpr_loss(std::span<const double> pos_scores,
                       std::span<const double> neg_scores, double reg_embed_sq,
                       double reg_bias_sq, double alpha, double beta) {
  if (pos_scores.size() != neg_scores.size())
    throw std::invalid_argument("score arrays differ in length");
  if (pos_scores.empty()) throw std::invalid_argument("empty score arrays");
  double sum = 0.0;
  for (std::size_t t = 0; t < pos_scores.size(); ++t) {
    if (!std::isfinite(pos_scores[t]) || !std::isfinite(neg_scores[t]))
      throw std::invalid_argument("non-finite score in batch");
    sum += softplus(-(pos_scores[t] - neg_scores[t]));
  }
  return sum / static_cast<double>(pos_scores.size()) +
         alpha * reg_embed_sq + beta * reg_bias_sq;
}

// The squared-norm accumulators that bpr_loss expects. batch scope averages
// the triple rows over the batch; full scope sums every row once.
template <typename T>
std::pair<double, double> regularization_terms(const FinalEmbeddingsT<T>& fe,
                                               std::span<const T> biases,
                                               const TripleBatch& batch,
                                               RegScope scope) {
  const std::size_t m = fe.num_users;
  const std::size_t width = fe.e_star.cols();
  auto row_sq = [&](std::size_t r) {
    const T* e = fe.e_star.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < width; ++c)
      s += static_cast<double>(e[c]) * static_cast<double>(e[c]);
    return s;
  };
  double embed_sq = 0.0, bias_sq = 0.0;
  if (scope == RegScope::full) {
    for (std::size_t r = 0; r < fe.e_star.rows(); ++r) embed_sq += row_sq(r);
    for (const T b : biases)
      bias_sq += static_cast<double>(b) * static_cast<double>(b);
    return {embed_sq, bias_sq};
  }
  if (batch.triples.empty()) return {0.0, 0.0};
  for (const Triple& t : batch.triples) {
    const std::size_t rows[3] = {t.user, m + t.pos, m + t.neg};
    for (std::size_t r : rows) {
      embed_sq += row_sq(r);
      const double b = static_cast<double>(biases[r]);
      bias_sq += b * b;
    }
  }
  const double inv_b = 1.0 / static_cast<double>(batch.triples.size());
  return {embed_sq * inv_b, bias_sq * inv_b};
}

// Analytic gradient of the batch BPR loss with respect to E0 and the biases.
// The loss is differentiated through the final embeddings and then pulled
// back through the propagation chain; the operator is symmetric, so the
// transpose chain is forward application of the same matrix.
template <typename T>
GradientsT<T> backward(const PropagationOperator& p, const LayerStackT<T>& stack,
                       const FinalEmbeddingsT<T>& fe, std::span<const T> biases,
                       const TripleBatch& batch, const ModelConfig& config) {
  const std::size_t m = fe.num_users;
  const std::size_t total = fe.e_star.rows();
  const std::size_t width = fe.e_star.cols();
  if (batch.triples.empty()) throw std::invalid_argument("empty batch");

  DenseMatrix<T> g_star(total, width);
  GradientsT<T> g;
  g.biases.assign(total, T{});

  const double inv_b = 1.0 / static_cast<double>(batch.triples.size());
  const double reg_e = 2.0 * config.alpha * inv_b;
  const double reg_b = 2.0 * config.beta * inv_b;
  const bool batch_reg = config.reg_scope == RegScope::batch;

  for (const Triple& t : batch.triples) {
    const std::size_t ru = t.user;
    const std::size_t ri = m + t.pos;
    const std::size_t rj = m + t.neg;
    const double diff = score(fe, biases, t.user, t.pos) -
                        score(fe, biases, t.user, t.neg);
    const double s = 1.0 / (1.0 + std::exp(diff));  // sigmoid(-diff)
    const double coef = s * inv_b;

    const T* eu = fe.e_star.row(ru);
    const T* ei = fe.e_star.row(ri);
    const T* ej = fe.e_star.row(rj);
    T* gu = g_star.row(ru);
    T* gi = g_star.row(ri);
    T* gj = g_star.row(rj);
    for (std::size_t c = 0; c < width; ++c)
      gu[c] += static_cast<T>(
          -coef * (static_cast<double>(ei[c]) - static_cast<double>(ej[c])));
    for (std::size_t c = 0; c < width; ++c)
      gi[c] += static_cast<T>(-coef * static_cast<double>(eu[c]));
    for (std::size_t c = 0; c < width; ++c)
      gj[c] += static_cast<T>(coef * static_cast<double>(eu[c]));
    // the user bias cancels in the score difference: exactly zero gradient
    g.biases[ri] += static_cast<T>(-coef);
    g.biases[rj] += static_cast<T>(coef);

    if (batch_reg && config.alpha != 0.0) {
      for (std::size_t c = 0; c < width; ++c)
        gu[c] += static_cast<T>(reg_e * static_cast<double>(eu[c]));
      for (std::size_t c = 0; c < width; ++c)
        gi[c] += static_cast<T>(reg_e * static_cast<double>(ei[c]));
      for (std::size_t c = 0; c < width; ++c)
        gj[c] += static_cast<T>(reg_e * static_cast<double>(ej[c]));
    }
    if (batch_reg && config.beta != 0.0) {
      g.biases[ru] += static_cast<T>(reg_b * static_cast<double>(biases[ru]));
      g.biases[ri] += static_cast<T>(reg_b * static_cast<double>(biases[ri]));
      g.biases[rj] += static_cast<T>(reg_b * static_cast<double>(biases[rj]));
    }
  }

  if (!batch_reg) {
    if (config.alpha != 0.0) {
      const double a2 = 2.0 * config.alpha;
      for (std::size_t idx = 0; idx < g_star.size(); ++idx)
        g_star.values()[idx] +=
            static_cast<T>(a2 * static_cast<double>(fe.e_star.values()[idx]));
    }
    if (config.beta != 0.0) {
      const double b2 = 2.0 * config.beta;
      for (std::size_t r = 0; r < total; ++r)
        g.biases[r] += static_cast<T>(b2 * static_cast<double>(biases[r]));
    }
  }

  const std::size_t depth = stack.depth();
  if (fe.mode == FinalMode::last_layer) {
    DenseMatrix<T> acc = std::move(g_star);
    for (std::size_t l = 0; l < depth; ++l) acc = spmm(p, acc);
    g.e0 = std::move(acc);
    return g;
  }

  // concat mode: g_star holds one block per layer; fold from the top so each
  // block passes through the operator exactly as many times as its layer index
  const std::size_t k = stack.layers.front().cols();
  auto block = [&](std::size_t l) {
    DenseMatrix<T> out(total, k);
    for (std::size_t r = 0; r < total; ++r) {
      const T* src = g_star.row(r) + l * k;
      T* dst = out.row(r);
      for (std::size_t c = 0; c < k; ++c) dst[c] = src[c];
    }
    return out;
  };
  DenseMatrix<T> acc = block(depth);
  for (std::size_t l = depth; l-- > 0;) {
    acc = spmm(p, acc);
    const std::size_t off = l * k;
    for (std::size_t r = 0; r < total; ++r) {
      const T* src = g_star.row(r) + off;
      T* dst = acc.row(r);
      for (std::size_t c = 0; c < k; ++c) dst[c] += src[c];
    }
  }
  g.e0 = std::move(acc);
  return g;
}

template <typename T>
AdamStateT<T> make_adam_state(const EmbeddingStateT<T>& params) {
  AdamStateT<T> st;
  st.m_e0 = DenseMatrix<T>(params.e0.rows(), params.e0.cols());
  st.v_e0 = DenseMatrix<T>(params.e0.rows(), params.e0.cols());
  st.m_bias.assign(params.biases.size(), T{});
  st.v_bias.assign(params.biases.size(), T{});
  return st;
}

// One Adam update (decay 0.9 / 0.999, eps 1e-8, bias-corrected moments).
template <typename T>
void adam_update(std::span<T> params, std::span<const T> grads, std::span<T> m1,
                 std::span<T> m2, std::uint64_t step, double lr) {
  if (params.size() != grads.size() || params.size() != m1.size() ||
      params.size() != m2.size())
    throw std::invalid_argument("adam shape mismatch");
  for (const T gv : grads)
    if (!std::isfinite(static_cast<double>(gv)))
      throw std::invalid_argument("non-finite gradient");
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = static_cast<double>(grads[i]);
    const double m = b1 * static_cast<double>(m1[i]) + (1.0 - b1) * g;
    const double v = b2 * static_cast<double>(m2[i]) + (1.0 - b2) * g * g;
    m1[i] = static_cast<T>(m);
    m2[i] = static_cast<T>(v);
    params[i] = static_cast<T>(static_cast<double>(params[i]) -
                               lr * (m / c1) / (std::sqrt(v / c2) + eps));
  }
}

template <typename T>
void adam_step(EmbeddingStateT<T>& params, const GradientsT<T>& grads,
               AdamStateT<T>& state, double lr) {
  if (grads.e0.rows() != params.e0.rows() || grads.e0.cols() != params.e0.cols() ||
      grads.biases.size() != params.biases.size())
    throw std::invalid_argument("gradient shape mismatch");
  ++state.step;
  adam_update<T>(params.e0.values(), grads.e0.values(), state.m_e0.values(),
                 state.v_e0.values(), state.step, lr);
  adam_update<T>(params.biases, grads.biases, state.m_bias, state.v_bias,
                 state.step, lr);
}

// Trains E0 and the biases with mini-batch BPR + Adam; early-stops on
// validation recall@20 when a validation set and eval_every are present.
// Returns the best checkpoint (final state when no eval ever ran).
std::pair<EmbeddingState, TrainReport> train(const ModelConfig& config,
                                             const InteractionDataset& dataset);

// Same, with a prebuilt operator (sweeps rebuild it only when lambda moves).
std::pair<EmbeddingState, TrainReport> train_with_operator(
    const ModelConfig& config, const InteractionDataset& dataset,
    const PropagationOperator& op);

}  // namespace rgcf
