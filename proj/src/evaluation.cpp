#include "rgcf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace rgcf {

namespace {

// Neumaier-compensated accumulator; the per-user reduction order is fixed,
// but compensation keeps the means stable against it.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

bool is_hit(std::span<const std::uint32_t> test_items, std::uint32_t item) {
  return std::binary_search(test_items.begin(), test_items.end(), item);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

double recall_at_k(std::span<const std::uint32_t> ranked,
                   std::span<const std::uint32_t> test_items, std::uint32_t k) {
  if (test_items.empty())
    throw std::invalid_argument("recall_at_k: empty test items");
  const std::size_t depth = std::min<std::size_t>(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < depth; ++r)
    if (is_hit(test_items, ranked[r])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(test_items.size());
}

double ndcg_at_k(std::span<const std::uint32_t> ranked,
                 std::span<const std::uint32_t> test_items, std::uint32_t k) {
  if (test_items.empty())
    throw std::invalid_argument("ndcg_at_k: empty test items");
  const std::size_t depth = std::min<std::size_t>(k, ranked.size());
  double dcg = 0.0;
  for (std::size_t r = 0; r < depth; ++r)
    if (is_hit(test_items, ranked[r]))
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  const std::size_t ideal = std::min<std::size_t>(k, test_items.size());
  double idcg = 0.0;
  for (std::size_t r = 0; r < ideal; ++r)
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

namespace {

// Top-k of the score vector: score descending, item id ascending on ties.
// partial_sort yields exactly the prefix of the full sort under this order.
std::vector<std::uint32_t> select_top_k(const std::vector<double>& scores,
                                        std::uint32_t k) {
  std::vector<std::uint32_t> candidates;
  candidates.reserve(scores.size());
  for (std::uint32_t i = 0; i < scores.size(); ++i)
    if (scores[i] != kExcludedScore) candidates.push_back(i);
  const std::size_t take = std::min<std::size_t>(k, candidates.size());
  auto better = [&scores](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + take,
                    candidates.end(), better);
  candidates.resize(take);
  return candidates;
}

}  // namespace

std::vector<std::uint32_t> rank_top_k(const FinalEmbeddings& fe,
                                      std::span<const double> biases,
                                      std::uint32_t u, std::uint32_t k,
                                      std::span<const std::uint32_t> exclude) {
  return select_top_k(score_all_items(fe, biases, u, exclude), k);
}

RankingReport evaluate_sets(const FinalEmbeddings& fe,
                            std::span<const double> biases,
                            const UserItemIndex& exclude_index,
                            const UserItemIndex& relevance_index,
                            std::vector<std::uint32_t> ks, bool keep_per_user) {
  if (ks.empty()) throw std::invalid_argument("no K values given");
  RankingReport report;
  report.ks = std::move(ks);
  const std::uint32_t max_k = *std::max_element(report.ks.begin(), report.ks.end());

  const std::uint32_t num_users =
      std::min(relevance_index.num_users(), exclude_index.num_users());
  std::vector<KahanSum> recall_sum(report.ks.size()), ndcg_sum(report.ks.size());
  for (std::uint32_t u = 0; u < num_users; ++u) {
    auto relevant = relevance_index.items_of(u);
    if (relevant.empty()) continue;
    if (exclude_index.degree(u) == 0) {
      ++report.skipped_users;  // cold user: nothing was trained for them
      continue;
    }
    auto ranked = rank_top_k(fe, biases, u, max_k, exclude_index.items_of(u));
    ++report.evaluated_users;
    UserMetrics um;
    um.user = u;
    for (std::size_t ki = 0; ki < report.ks.size(); ++ki) {
      const double r = recall_at_k(ranked, relevant, report.ks[ki]);
      const double n = ndcg_at_k(ranked, relevant, report.ks[ki]);
      recall_sum[ki].add(r);
      ndcg_sum[ki].add(n);
      if (keep_per_user) {
        um.recall.push_back(r);
        um.ndcg.push_back(n);
      }
    }
    if (keep_per_user) {
      um.top_items.assign(ranked.begin(), ranked.end());
      report.per_user.push_back(std::move(um));
    }
  }

  report.mean_recall.resize(report.ks.size(), 0.0);
  report.mean_ndcg.resize(report.ks.size(), 0.0);
  if (report.evaluated_users > 0) {
    for (std::size_t ki = 0; ki < report.ks.size(); ++ki) {
      report.mean_recall[ki] =
          recall_sum[ki].value() / static_cast<double>(report.evaluated_users);
      report.mean_ndcg[ki] =
          ndcg_sum[ki].value() / static_cast<double>(report.evaluated_users);
    }
  }
  return report;
}

RankingReport evaluate(const FinalEmbeddings& fe, std::span<const double> biases,
                       const InteractionDataset& dataset,
                       std::vector<std::uint32_t> ks, bool keep_per_user) {
  const auto train_index = build_user_index(dataset.train, dataset.num_users);
  const auto test_index = build_user_index(dataset.test, dataset.num_users);
  return evaluate_sets(fe, biases, train_index, test_index, std::move(ks),
                       keep_per_user);
}

std::string serialize_report(const RankingReport& report) {
  std::string out;
  out += "evaluated_users = " + std::to_string(report.evaluated_users) + "\n";
  out += "skipped_users = " + std::to_string(report.skipped_users) + "\n";
  for (std::size_t ki = 0; ki < report.ks.size(); ++ki) {
    out += "K = " + std::to_string(report.ks[ki]) + "\n";
    out += "  recall = " + format_double(report.mean_recall[ki]) + "\n";
    out += "  ndcg = " + format_double(report.mean_ndcg[ki]) + "\n";
  }
  return out;
}

std::string serialize_per_user(const RankingReport& report) {
  std::string out = "user";
  for (std::uint32_t k : report.ks)
    out += "\trecall@" + std::to_string(k) + "\tndcg@" + std::to_string(k);
  out += "\ttop_items\n";
  for (const auto& um : report.per_user) {
    out += std::to_string(um.user);
    for (std::size_t ki = 0; ki < report.ks.size(); ++ki)
      out += "\t" + format_double(um.recall[ki]) + "\t" +
             format_double(um.ndcg[ki]);
    out += "\t";
    for (std::size_t i = 0; i < um.top_items.size(); ++i) {
      if (i > 0) out += ",";
      out += std::to_string(um.top_items[i]);
    }
    out += "\n";
  }
  return out;
}

}  // namespace rgcf
