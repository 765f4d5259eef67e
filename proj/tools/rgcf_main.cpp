#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "rgcf/commands.hpp"

namespace {

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t end = csv.find(',', pos);
    if (end == std::string::npos) end = csv.size();
    const std::string tok = csv.substr(pos, end - pos);
    if (!tok.empty()) {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size())
        throw std::runtime_error("bad value in --values: '" + tok + "'");
      values.push_back(v);
    }
    pos = end + 1;
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rgcf: linear graph-convolution collaborative filtering"};
  app.require_subcommand(1);

  rgcf::TrainOptions train_opts;
  std::uint64_t seed = 0;

  auto* train = app.add_subcommand("train", "train a model and save a snapshot");
  train->add_option("--config", train_opts.config_path, "model config file")
      ->required();
  train->add_option("--data-dir", train_opts.data_dir,
                    "directory with train.txt [test.txt valid.txt]")
      ->required();
  train->add_option("--out", train_opts.out_path, "snapshot output path")
      ->required();
  train->add_option("--log", train_opts.log_path,
                    "training log path (default: <out>.log)");
  auto* train_seed = train->add_option("--seed", seed, "override config seed");

  rgcf::EvaluateOptions eval_opts;
  auto* evaluate = app.add_subcommand("evaluate", "rank-and-score a snapshot");
  evaluate->add_option("--snapshot", eval_opts.snapshot_path, "snapshot path")
      ->required();
  evaluate->add_option("--data-dir", eval_opts.data_dir, "data directory")
      ->required();
  evaluate->add_option("--k", eval_opts.ks, "cutoff K (repeatable)");
  evaluate->add_option("--out", eval_opts.out_path, "report output path");
  evaluate->add_option("--detail", eval_opts.detail_path,
                       "per-user detail output path");

  rgcf::RecommendOptions rec_opts;
  std::vector<std::uint32_t> rec_k;
  auto* recommend =
      app.add_subcommand("recommend", "top-K items for one user");
  recommend->add_option("--snapshot", rec_opts.snapshot_path, "snapshot path")
      ->required();
  recommend->add_option("--user", rec_opts.user_external, "external user id")
      ->required();
  recommend->add_option("--k", rec_k, "number of items");
  recommend->add_option("--data-dir", rec_opts.data_dir,
                        "data directory (excludes the user's history)");

  rgcf::SweepOptions sweep_opts;
  std::string sweep_values;
  auto* sweep = app.add_subcommand("sweep", "train once per parameter value");
  sweep->add_option("--config", sweep_opts.config_path, "base config file")
      ->required();
  sweep->add_option("--data-dir", sweep_opts.data_dir, "data directory")
      ->required();
  sweep->add_option("--param", sweep_opts.param,
                    "lambda | L | alpha | learning_rate")
      ->required();
  sweep->add_option("--values", sweep_values, "comma-separated value list")
      ->required();
  sweep->add_option("--out", sweep_opts.out_path, "results table path");
  auto* sweep_seed = sweep->add_option("--seed", seed, "override config seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      if (*train_seed) train_opts.seed_override = seed;
      rgcf::cmd_train(train_opts, std::cout);
    } else if (*evaluate) {
      rgcf::cmd_evaluate(eval_opts, std::cout);
    } else if (*recommend) {
      if (rec_k.size() > 1)
        throw std::runtime_error("recommend takes a single --k");
      if (!rec_k.empty()) rec_opts.k = rec_k.front();
      rgcf::cmd_recommend(rec_opts, std::cout);
    } else if (*sweep) {
      if (*sweep_seed) sweep_opts.seed_override = seed;
      sweep_opts.values = parse_values(sweep_values);
      rgcf::cmd_sweep(sweep_opts, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
