#include "rgcf/training.hpp"

#include <algorithm>
#include <stdexcept>

#include "rgcf/evaluation.hpp"

namespace rgcf {

void validate_config(const ModelConfig& cfg) {
  if (cfg.k < 1) throw std::invalid_argument("config: k must be >= 1");
  if (cfg.lambda < 0.0) throw std::invalid_argument("config: lambda must be >= 0");
  if (cfg.alpha < 0.0) throw std::invalid_argument("config: alpha must be >= 0");
  if (cfg.beta < 0.0) throw std::invalid_argument("config: beta must be >= 0");
  if (!(cfg.learning_rate > 0.0))
    throw std::invalid_argument("config: learning_rate must be > 0");
  if (cfg.batch_size < 1)
    throw std::invalid_argument("config: batch_size must be >= 1");
}

TripleBatch sample_batch(const InteractionDataset& d,
                         const UserItemIndex& train_index,
                         std::uint32_t batch_size, Rng& rng) {
  if (d.train.empty())
    throw std::invalid_argument("cannot sample from an empty training set");
  bool any_negative = false;
  for (std::uint32_t u = 0; u < d.num_users; ++u) {
    const std::size_t deg = train_index.degree(u);
    if (deg > 0 && deg < d.num_items) {
      any_negative = true;
      break;
    }
  }
  if (!any_negative)
    throw std::runtime_error("no user has an unobserved item to sample");

  TripleBatch batch;
  batch.triples.reserve(batch_size);
  while (batch.triples.size() < batch_size) {
    const Interaction& p =
        d.train.pairs[rng.next_below(d.train.pairs.size())];
    if (train_index.degree(p.user) == d.num_items) continue;  // no negative
    std::uint32_t j;
    do {
      j = static_cast<std::uint32_t>(rng.next_below(d.num_items));
    } while (train_index.contains(p.user, j));
    batch.triples.push_back({p.user, p.item, j});
  }
  return batch;
}

TripleBatch sample_batch(const InteractionDataset& d, std::uint32_t batch_size,
                         Rng& rng) {
  const auto index = build_user_index(d.train, d.num_users);
  return sample_batch(d, index, batch_size, rng);
}

namespace {

template <typename T>
EmbeddingState to_double_state(const EmbeddingStateT<T>& s) {
  EmbeddingState out;
  out.num_users = s.num_users;
  out.e0 = convert_matrix<double>(s.e0);
  out.biases.assign(s.biases.begin(), s.biases.end());
  return out;
}

template <typename T>
std::pair<EmbeddingState, TrainReport> train_impl(
    const ModelConfig& cfg, const InteractionDataset& d,
    const PropagationOperator& op) {
  validate_config(cfg);
  if (d.train.empty()) throw std::invalid_argument("training set is empty");

  TrainReport report;
  Rng rng(cfg.seed);
  EmbeddingStateT<T> state =
      init_embeddings<T>(d.num_users, d.num_items, cfg.k, rng);
  const UserItemIndex train_index = build_user_index(d.train, d.num_users);
  const bool do_eval = cfg.eval_every > 0 && !d.validation.empty();
  UserItemIndex val_index;
  if (do_eval) val_index = build_user_index(d.validation, d.num_users);

  AdamStateT<T> adam = make_adam_state(state);
  EmbeddingStateT<T> best;
  bool have_best = false;
  double best_recall = -1.0;
  std::uint32_t evals_since_improve = 0;

  const std::size_t num_batches =
      (d.train.size() + cfg.batch_size - 1) / cfg.batch_size;
  std::uint32_t epoch = 1;
  for (; epoch <= cfg.max_epochs; ++epoch) {
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < num_batches; ++b) {
      const TripleBatch batch = sample_batch(d, train_index, cfg.batch_size, rng);
      const LayerStackT<T> stack = propagate(op, state, cfg.L);
      const FinalEmbeddingsT<T> fe = finalize(stack, cfg.mode);
      const std::span<const T> biases(state.biases);

      std::vector<double> pos(batch.size()), neg(batch.size());
      for (std::size_t t = 0; t < batch.size(); ++t) {
        pos[t] = score(fe, biases, batch.triples[t].user, batch.triples[t].pos);
        neg[t] = score(fe, biases, batch.triples[t].user, batch.triples[t].neg);
      }
      const auto [reg_e, reg_b] =
          regularization_terms(fe, biases, batch, cfg.reg_scope);
      loss_sum += bpr_loss(pos, neg, reg_e, reg_b, cfg.alpha, cfg.beta);

      const GradientsT<T> grads = backward(op, stack, fe, biases, batch, cfg);
      adam_step(state, grads, adam, cfg.learning_rate);
    }
    report.epoch_loss.push_back(loss_sum / static_cast<double>(num_batches));

    if (do_eval && epoch % cfg.eval_every == 0) {
      const FinalEmbeddingsT<T> fe = finalize(propagate(op, state, cfg.L), cfg.mode);
      FinalEmbeddings fed;
      fed.mode = fe.mode;
      fed.num_users = fe.num_users;
      fed.e_star = convert_matrix<double>(fe.e_star);
      const std::vector<double> bd(state.biases.begin(), state.biases.end());
      const RankingReport rr = evaluate_sets(fed, bd, train_index, val_index, {20});
      report.evals.push_back({epoch, rr.mean_recall[0], rr.mean_ndcg[0]});
      if (rr.mean_recall[0] > best_recall) {
        best_recall = rr.mean_recall[0];
        best = state;
        have_best = true;
        report.best_epoch = epoch;
        evals_since_improve = 0;
      } else if (++evals_since_improve >= cfg.patience) {
        break;
      }
    }
  }
  report.stopping_epoch = std::min(epoch, cfg.max_epochs);
  return {to_double_state(have_best ? best : state), report};
}

}  // namespace

std::pair<EmbeddingState, TrainReport> train_with_operator(
    const ModelConfig& config, const InteractionDataset& dataset,
    const PropagationOperator& op) {
  if (config.precision == Precision::single)
    return train_impl<float>(config, dataset, op);
  return train_impl<double>(config, dataset, op);
}

std::pair<EmbeddingState, TrainReport> train(const ModelConfig& config,
                                             const InteractionDataset& dataset) {
  const SparseMatrix adjacency = build_adjacency(dataset);
  const PropagationOperator op = build_propagation(adjacency, config.lambda);
  return train_with_operator(config, dataset, op);
}

}  // namespace rgcf
