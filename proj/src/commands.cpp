#include "rgcf/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "rgcf/config.hpp"
#include "rgcf/evaluation.hpp"
#include "rgcf/snapshot.hpp"
#include "rgcf/training.hpp"

namespace rgcf {

namespace {

namespace fs = std::filesystem;

std::string metric_str(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

InteractionSet union_sets(const InteractionSet& a, const InteractionSet& b) {
  InteractionSet u;
  u.pairs.reserve(a.size() + b.size());
  u.pairs.insert(u.pairs.end(), a.pairs.begin(), a.pairs.end());
  u.pairs.insert(u.pairs.end(), b.pairs.begin(), b.pairs.end());
  normalize(u);
  return u;
}

std::string training_log_text(const TrainReport& report) {
  std::string log;
  std::size_t next_eval = 0;
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
    log += std::to_string(e + 1) + "\t" + metric_str(report.epoch_loss[e]);
    if (next_eval < report.evals.size() &&
        report.evals[next_eval].epoch == e + 1) {
      log += "\t" + metric_str(report.evals[next_eval].recall) + "\t" +
             metric_str(report.evals[next_eval].ndcg);
      ++next_eval;
    }
    log += "\n";
  }
  return log;
}

FinalEmbeddings rebuild_final(const Snapshot& snap,
                              const InteractionDataset& dataset) {
  EmbeddingState state;
  state.num_users = snap.m;
  state.e0 = snap.e0;
  state.biases = snap.biases;
  const SparseMatrix adjacency = build_adjacency(dataset);
  const PropagationOperator op = build_propagation(adjacency, snap.lambda);
  return finalize(propagate(op, state, snap.L), snap.mode);
}

FinalEmbeddings final_from_snapshot(const Snapshot& snap,
                                    const InteractionDataset* dataset) {
  if (snap.e_star) {
    FinalEmbeddings fe;
    fe.e_star = *snap.e_star;
    fe.mode = snap.mode;
    fe.num_users = snap.m;
    return fe;
  }
  if (dataset == nullptr)
    throw std::runtime_error(
        "snapshot has no cached final embeddings; --data-dir is required to "
        "rebuild them");
  return rebuild_final(snap, *dataset);
}

void check_dimensions(const Snapshot& snap, const InteractionDataset& d) {
  if (snap.m != d.num_users || snap.n != d.num_items)
    throw std::runtime_error(
        "snapshot/dataset dimension mismatch: snapshot is " +
        std::to_string(snap.m) + "x" + std::to_string(snap.n) +
        " (users x items), dataset is " + std::to_string(d.num_users) + "x" +
        std::to_string(d.num_items));
}

}  // namespace

LoadedData load_data_dir(const std::string& dir, const LoadOptions& opts) {
  const std::string train_path = dir + "/train.txt";
  const std::string test_path = dir + "/test.txt";
  const std::string valid_path = dir + "/valid.txt";
  if (!fs::exists(train_path))
    throw std::runtime_error("missing data file: " + train_path);

  LoadedData data;
  ParseResult train = parse_interaction_file(train_path);
  data.duplicates_dropped += train.duplicates_dropped;

  InteractionSet validation;
  if (fs::exists(valid_path)) {
    ParseResult v = parse_interaction_file(valid_path);
    data.duplicates_dropped += v.duplicates_dropped;
    validation = std::move(v.set);
  } else if (opts.resample_validation && opts.validation_fraction > 0.0) {
    SplitResult split =
        split_validation(train.set, opts.validation_fraction, opts.seed);
    train.set = std::move(split.train);
    validation = std::move(split.validation);
  }

  InteractionSet test;
  if (fs::exists(test_path)) {
    ParseResult t = parse_interaction_file(test_path);
    data.duplicates_dropped += t.duplicates_dropped;
    test = std::move(t.set);
  }

  if (opts.merge_validation_into_train) {
    train.set = union_sets(train.set, validation);
    validation = InteractionSet{};
  }

  const InteractionSet raw[3] = {std::move(train.set), std::move(validation),
                                 std::move(test)};
  RemapResult remapped = remap_contiguous(raw);
  data.map = std::move(remapped.map);
  data.dataset =
      build_dataset(std::move(remapped.sets[0]), std::move(remapped.sets[1]),
                    std::move(remapped.sets[2]), &data.report);
  return data;
}

void cmd_train(const TrainOptions& opts, std::ostream& out) {
  ModelConfig cfg = load_config(opts.config_path);
  if (opts.seed_override) cfg.seed = *opts.seed_override;
  if (opts.out_path.empty()) throw std::runtime_error("no output path given");

  LoadOptions load;
  load.seed = cfg.seed;
  LoadedData data = load_data_dir(opts.data_dir, load);
  const InteractionDataset& d = data.dataset;
  if (d.train.empty()) throw std::runtime_error("training set is empty");

  auto [state, report] = train(cfg, d);

  Snapshot snap;
  snap.m = d.num_users;
  snap.n = d.num_items;
  snap.k = cfg.k;
  snap.L = cfg.L;
  snap.mode = cfg.mode;
  snap.lambda = cfg.lambda;
  snap.e0 = std::move(state.e0);
  snap.biases = std::move(state.biases);
  {
    EmbeddingState best;
    best.num_users = snap.m;
    best.e0 = snap.e0;
    best.biases = snap.biases;
    const SparseMatrix adjacency = build_adjacency(d);
    const PropagationOperator op = build_propagation(adjacency, cfg.lambda);
    snap.e_star = finalize(propagate(op, best, cfg.L), cfg.mode).e_star;
  }
  save_snapshot(snap, opts.out_path);
  write_id_map(data.map.users, opts.out_path + ".umap");
  write_id_map(data.map.items, opts.out_path + ".imap");

  const std::string log_path =
      opts.log_path.empty() ? opts.out_path + ".log" : opts.log_path;
  write_text_file(log_path, training_log_text(report));

  out << "trained " << report.stopping_epoch << " epochs";
  if (report.best_epoch > 0) out << " (best at " << report.best_epoch << ")";
  out << "\nsnapshot: " << opts.out_path << "\nlog: " << log_path << "\n";
}

void cmd_evaluate(const EvaluateOptions& opts, std::ostream& out) {
  const Snapshot snap = load_snapshot(opts.snapshot_path);

  LoadOptions load;
  load.resample_validation = false;
  load.merge_validation_into_train = true;
  LoadedData data = load_data_dir(opts.data_dir, load);
  check_dimensions(snap, data.dataset);

  const FinalEmbeddings fe = final_from_snapshot(snap, &data.dataset);
  std::vector<std::uint32_t> ks = opts.ks.empty()
                                      ? std::vector<std::uint32_t>{20}
                                      : opts.ks;
  const bool want_detail = !opts.detail_path.empty();
  const RankingReport report =
      evaluate(fe, snap.biases, data.dataset, std::move(ks), want_detail);

  const std::string text = serialize_report(report);
  out << text;
  if (!opts.out_path.empty()) write_text_file(opts.out_path, text);
  if (want_detail) write_text_file(opts.detail_path, serialize_per_user(report));
}

void cmd_recommend(const RecommendOptions& opts, std::ostream& out) {
  const Snapshot snap = load_snapshot(opts.snapshot_path);

  IdMap map;
  const std::string umap_path = opts.snapshot_path + ".umap";
  const std::string imap_path = opts.snapshot_path + ".imap";
  if (fs::exists(umap_path) && fs::exists(imap_path)) {
    map.users = read_id_map(umap_path);
    map.items = read_id_map(imap_path);
    if (map.users.size() != snap.m || map.items.size() != snap.n)
      throw std::runtime_error("id-map sidecars do not match snapshot sizes");
  } else {
    // identity mapping when the sidecars are absent
    map.users.resize(snap.m);
    map.items.resize(snap.n);
    for (std::uint32_t u = 0; u < snap.m; ++u) map.users[u] = u;
    for (std::uint32_t i = 0; i < snap.n; ++i) map.items[i] = i;
  }

  // external ids ascend in the sidecar, so lookup by binary search holds
  std::uint32_t user = 0;
  {
    auto it = std::lower_bound(map.users.begin(), map.users.end(),
                               opts.user_external);
    if (it == map.users.end() || *it != opts.user_external)
      throw std::runtime_error(
          "unknown user " + std::to_string(opts.user_external) + " (" +
          std::to_string(map.users.size()) + " known users, external ids " +
          (map.users.empty()
               ? std::string("none")
               : std::to_string(map.users.front()) + ".." +
                     std::to_string(map.users.back())) +
          ")");
    user = static_cast<std::uint32_t>(it - map.users.begin());
  }

  std::optional<LoadedData> data;
  std::vector<std::uint32_t> exclude;
  if (!opts.data_dir.empty()) {
    LoadOptions load;
    load.resample_validation = false;
    load.merge_validation_into_train = true;
    data = load_data_dir(opts.data_dir, load);
    check_dimensions(snap, data->dataset);
    const auto index = build_user_index(data->dataset.train, snap.m);
    const auto span = index.items_of(user);
    exclude.assign(span.begin(), span.end());
  }

  const FinalEmbeddings fe =
      final_from_snapshot(snap, data ? &data->dataset : nullptr);
  const auto ranked = rank_top_k(fe, snap.biases, user, opts.k, exclude);
  for (std::uint32_t item : ranked)
    out << map.items[item] << " "
        << metric_str(score(fe, std::span<const double>(snap.biases), user, item))
        << "\n";
}

void cmd_sweep(const SweepOptions& opts, std::ostream& out) {
  ModelConfig base = load_config(opts.config_path);
  if (opts.seed_override) base.seed = *opts.seed_override;
  if (opts.values.empty()) throw std::runtime_error("no sweep values given");
  if (opts.param != "lambda" && opts.param != "L" && opts.param != "alpha" &&
      opts.param != "learning_rate")
    throw std::runtime_error("unknown sweep parameter '" + opts.param +
                             "' (expected lambda, L, alpha, or learning_rate)");

  LoadOptions load;
  load.seed = base.seed;
  LoadedData data = load_data_dir(opts.data_dir, load);
  const InteractionDataset& d = data.dataset;

  const SparseMatrix adjacency = build_adjacency(d);
  const UserItemIndex mask_index =
      build_user_index(union_sets(d.train, d.validation), d.num_users);
  const UserItemIndex test_index = build_user_index(d.test, d.num_users);

  PropagationOperator op;
  bool op_ready = false;
  double op_lambda = 0.0;

  std::string table = "# value\trecall@20\tndcg@20\tepochs\n";
  for (double value : opts.values) {
    ModelConfig cfg = base;
    std::string row = metric_str(value);
    try {
      if (opts.param == "lambda") {
        cfg.lambda = value;
      } else if (opts.param == "L") {
        if (value < 0.0 || value != std::floor(value))
          throw std::invalid_argument("L must be a non-negative integer");
        cfg.L = static_cast<std::uint32_t>(value);
      } else if (opts.param == "alpha") {
        cfg.alpha = value;
      } else {
        cfg.learning_rate = value;
      }
      validate_config(cfg);

      if (!op_ready || cfg.lambda != op_lambda) {
        op = build_propagation(adjacency, cfg.lambda);
        op_ready = true;
        op_lambda = cfg.lambda;
      }
      auto [state, report] = train_with_operator(cfg, d, op);
      const FinalEmbeddings fe = finalize(propagate(op, state, cfg.L), cfg.mode);
      const RankingReport rr =
          evaluate_sets(fe, state.biases, mask_index, test_index, {20});
      row += "\t" + metric_str(rr.mean_recall[0]) + "\t" +
             metric_str(rr.mean_ndcg[0]) + "\t" +
             std::to_string(report.stopping_epoch);
    } catch (const std::exception& e) {
      row += "\tfailed\t# ";
      row += e.what();
    }
    table += row + "\n";
  }

  out << table;
  if (!opts.out_path.empty()) write_text_file(opts.out_path, table);
}

}  // namespace rgcf
