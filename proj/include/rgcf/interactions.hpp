#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rgcf {

struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

// Deduplicated (user, item) pairs, sorted by (user, item).
struct InteractionSet {
  std::vector<Interaction> pairs;

  bool empty() const { return pairs.empty(); }
  std::size_t size() const { return pairs.size(); }
  bool operator==(const InteractionSet&) const = default;
};

// Sorts and deduplicates in place; returns the number of duplicates dropped.
std::size_t normalize(InteractionSet& s);

struct ParseResult {
  InteractionSet set;
  std::size_t duplicates_dropped = 0;
};

// One line per user: "uid iid1 iid2 ...", whitespace-separated decimal
// integers. A line may carry zero items. LF and CRLF both accepted.
ParseResult parse_interaction_text(std::string_view text);
ParseResult parse_interaction_file(const std::string& path);

// Pair-per-line converter input: "uid iid", comma or whitespace separated.
ParseResult parse_pair_text(std::string_view text);

// Inverse of parse_interaction_text: one line per user, items ascending.
std::string serialize_interactions(const InteractionSet& s);
void write_interaction_file(const InteractionSet& s, const std::string& path);

// Iteratively removes users and items with fewer than k interactions until
// every survivor has at least k. May return the empty set.
InteractionSet k_core_filter(const InteractionSet& s, std::size_t k);

struct SplitResult {
  InteractionSet train;
  InteractionSet validation;
};

// Moves a uniformly random floor(fraction * |N_u|)-subset of every user's
// items into the second set. Deterministic for a given seed.
SplitResult split_validation(const InteractionSet& train, double fraction,
                             std::uint64_t seed);

// Contiguous 0-based renumbering, internal id -> external id, users and items
// as separate spaces. Internal ids follow ascending external order.
struct IdMap {
  std::vector<std::uint32_t> users;
  std::vector<std::uint32_t> items;

  std::optional<std::uint32_t> user_internal(std::uint32_t external) const;
  std::optional<std::uint32_t> item_internal(std::uint32_t external) const;
};

struct RemapResult {
  std::vector<InteractionSet> sets;
  IdMap map;
};

RemapResult remap_contiguous(std::span<const InteractionSet> sets);

// Sidecar format: one "external_id internal_id" line per entry.
void write_id_map(const std::vector<std::uint32_t>& internal_to_external,
                  const std::string& path);
std::vector<std::uint32_t> read_id_map(const std::string& path);

struct DatasetReport {
  std::size_t cold_test_users = 0;  // test users with no train interaction
  std::size_t cold_test_pairs = 0;
};

struct InteractionDataset {
  std::uint32_t num_users = 0;
  std::uint32_t num_items = 0;
  InteractionSet train;
  InteractionSet validation;
  InteractionSet test;
};

// Computes num_users / num_items as 1 + max observed id and validates the
// dataset: ids contiguous from 0, splits pair-disjoint. Test users absent
// from train stay in the set but are counted for exclusion at evaluation.
InteractionDataset build_dataset(InteractionSet train, InteractionSet validation,
                                 InteractionSet test,
                                 DatasetReport* report = nullptr);

// Per-user item lists in offset/array layout; items ascending within a user.
struct UserItemIndex {
  std::vector<std::size_t> offsets;  // num_users + 1 entries
  std::vector<std::uint32_t> items;

  std::span<const std::uint32_t> items_of(std::uint32_t u) const {
    return {items.data() + offsets[u], items.data() + offsets[u + 1]};
  }
  std::size_t degree(std::uint32_t u) const {
    return offsets[u + 1] - offsets[u];
  }
  bool contains(std::uint32_t u, std::uint32_t i) const;
  std::uint32_t num_users() const {
    return static_cast<std::uint32_t>(offsets.size() - 1);
  }
};

UserItemIndex build_user_index(const InteractionSet& s, std::uint32_t num_users);

}  // namespace rgcf
