#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rgcf/interactions.hpp"

namespace rgcf {

// Data directory layout: train.txt (required), test.txt and valid.txt
// (optional), all in the one-line-per-user adjacency format. IDs are
// remapped to contiguous internal ids; the mapping travels with snapshots
// as <snapshot>.umap / <snapshot>.imap sidecars.
struct LoadOptions {
  double validation_fraction = 0.1;
  std::uint64_t seed = 42;
  bool resample_validation = true;  // ignored when valid.txt is present
  bool merge_validation_into_train = false;
};

struct LoadedData {
  InteractionDataset dataset;
  IdMap map;
  DatasetReport report;
  std::size_t duplicates_dropped = 0;
};

LoadedData load_data_dir(const std::string& dir, const LoadOptions& opts);

struct TrainOptions {
  std::string config_path;
  std::string data_dir;
  std::string out_path;  // snapshot target
  std::string log_path;  // empty: out_path + ".log"
  std::optional<std::uint64_t> seed_override;
};

struct EvaluateOptions {
  std::string snapshot_path;
  std::string data_dir;
  std::vector<std::uint32_t> ks;  // empty: {20}
  std::string out_path;           // empty: stdout only
  std::string detail_path;        // empty: no per-user detail file
};

struct RecommendOptions {
  std::string snapshot_path;
  std::string data_dir;  // empty: no exclusions, cached E* required
  std::uint32_t user_external = 0;
  std::uint32_t k = 10;
};

struct SweepOptions {
  std::string config_path;
  std::string data_dir;
  std::string param;  // lambda | L | alpha | learning_rate
  std::vector<double> values;
  std::string out_path;  // empty: stdout only
  std::optional<std::uint64_t> seed_override;
};

// All commands throw on failure; the CLI wrapper turns that into a nonzero
// exit with a single "error: ..." line.
void cmd_train(const TrainOptions& opts, std::ostream& out);
void cmd_evaluate(const EvaluateOptions& opts, std::ostream& out);
void cmd_recommend(const RecommendOptions& opts, std::ostream& out);
void cmd_sweep(const SweepOptions& opts, std::ostream& out);

}  // namespace rgcf
