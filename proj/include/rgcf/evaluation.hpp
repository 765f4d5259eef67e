#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rgcf/interactions.hpp"
#include "rgcf/propagation.hpp"

namespace rgcf {

struct UserMetrics {
  std::uint32_t user = 0;
  std::vector<double> recall;  // aligned with RankingReport::ks
  std::vector<double> ndcg;
  std::vector<std::uint32_t> top_items;  // top max(ks) ranked items
};

struct RankingReport {
  std::vector<std::uint32_t> ks;
  std::vector<double> mean_recall;
  std::vector<double> mean_ndcg;
  std::uint64_t evaluated_users = 0;
  std::uint64_t skipped_users = 0;
  std::vector<UserMetrics> per_user;  // filled only on request
};

// |top-K intersect test| / |test|. `test_items` must be sorted ascending.
double recall_at_k(std::span<const std::uint32_t> ranked,
                   std::span<const std::uint32_t> test_items, std::uint32_t k);

// Binary relevance: DCG sums 1/log2(rank+1) over hits in the top K, IDCG
// truncates at min(K, |test|).
double ndcg_at_k(std::span<const std::uint32_t> ranked,
                 std::span<const std::uint32_t> test_items, std::uint32_t k);

// K highest-scoring non-excluded items, score-descending with ascending-id
// tie-break. Returns fewer than K when fewer items remain.
std::vector<std::uint32_t> rank_top_k(const FinalEmbeddings& fe,
                                      std::span<const double> biases,
                                      std::uint32_t u, std::uint32_t k,
                                      std::span<const std::uint32_t> exclude);

// Full-ranking evaluation of every user with relevance items. Items in
// `exclude_index` are masked from the candidate ranking; users with relevance
// items but no history in `exclude_index` are skipped as cold.
RankingReport evaluate_sets(const FinalEmbeddings& fe,
                            std::span<const double> biases,
                            const UserItemIndex& exclude_index,
                            const UserItemIndex& relevance_index,
                            std::vector<std::uint32_t> ks,
                            bool keep_per_user = false);

// Test-set evaluation with train positives masked.
RankingReport evaluate(const FinalEmbeddings& fe, std::span<const double> biases,
                       const InteractionDataset& dataset,
                       std::vector<std::uint32_t> ks,
                       bool keep_per_user = false);

// Key-value report text with nested per-K entries.
std::string serialize_report(const RankingReport& report);

// Tab-separated per-user detail lines: user, then recall/ndcg per K.
std::string serialize_per_user(const RankingReport& report);

}  // namespace rgcf
