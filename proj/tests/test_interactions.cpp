#include <doctest.h>

#include <algorithm>
#include <set>

#include "rgcf/interactions.hpp"
#include "rgcf/rng.hpp"
#include "testutil.hpp"

using namespace rgcf;

namespace {

InteractionSet make_set(std::initializer_list<Interaction> pairs) {
  InteractionSet s;
  s.pairs = pairs;
  normalize(s);
  return s;
}

}  // namespace

TEST_CASE("parse: adjacency lines") {
  const auto r = parse_interaction_text("0 12 7\n1 3\n");
  CHECK(r.set == make_set({{0, 12}, {0, 7}, {1, 3}}));
  CHECK(r.duplicates_dropped == 0);
}

TEST_CASE("parse: empty input and zero-item lines") {
  CHECK(parse_interaction_text("").set.empty());
  CHECK(parse_interaction_text("5\n").set.empty());
  CHECK(parse_interaction_text("\n\n").set.empty());
}

TEST_CASE("parse: crlf and extra whitespace") {
  const auto r = parse_interaction_text("0 1 2\r\n1\t4\r\n");
  CHECK(r.set == make_set({{0, 1}, {0, 2}, {1, 4}}));
}

TEST_CASE("parse: duplicates are counted") {
  const auto r = parse_interaction_text("0 3 3 4\n0 4\n");
  CHECK(r.set == make_set({{0, 3}, {0, 4}}));
  CHECK(r.duplicates_dropped == 2);
}

TEST_CASE("parse: bad tokens carry line numbers") {
  CHECK_THROWS_WITH_AS(parse_interaction_text("0 1\nx 2\n"),
                       doctest::Contains("line 2"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_interaction_text("0 -3\n"),
                       doctest::Contains("negative"), std::runtime_error);
  CHECK_THROWS_AS(parse_interaction_text("0 1.5\n"), std::runtime_error);
}

TEST_CASE("parse: pair lines with comma or space") {
  const auto r = parse_pair_text("0,3\n1 4\n\n0,3\n");
  CHECK(r.set == make_set({{0, 3}, {1, 4}}));
  CHECK(r.duplicates_dropped == 1);
}

TEST_CASE("serialize round-trips the pair set") {
  const auto original = parse_interaction_text("3 9 1 5\n0 2\n7\n").set;
  const auto again = parse_interaction_text(serialize_interactions(original)).set;
  CHECK(again == original);

  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = testutil::random_interactions(6, 9, 0.2, rng);
    CHECK(parse_interaction_text(serialize_interactions(s)).set == s);
  }
}

TEST_CASE("k_core_filter: 1-core is a no-op") {
  const auto s = make_set({{0, 0}, {0, 5}, {3, 5}});
  CHECK(k_core_filter(s, 1) == s);
}

TEST_CASE("k_core_filter: prunes low-degree user, keeps stable core") {
  const auto s = make_set({{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 0}});
  CHECK(k_core_filter(s, 2) == make_set({{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
}

TEST_CASE("k_core_filter: pruning cascades to the empty set") {
  const auto chain = make_set({{0, 0}, {1, 0}, {1, 1}, {2, 1}});
  CHECK(k_core_filter(chain, 2).empty());
}

TEST_CASE("k_core_filter: idempotent with all degrees >= k") {
  Rng rng(123);
  for (int trial = 0; trial < 25; ++trial) {
    const auto s = testutil::random_interactions(12, 15, 0.15, rng);
    const std::size_t k = 1 + rng.next_below(4);
    const auto once = k_core_filter(s, k);
    CHECK(k_core_filter(once, k) == once);

    std::vector<std::size_t> udeg(13, 0), ideg(16, 0);
    for (const auto& p : once.pairs) {
      ++udeg[p.user];
      ++ideg[p.item];
    }
    for (std::size_t deg : udeg) CHECK((deg == 0 || deg >= k));
    for (std::size_t deg : ideg) CHECK((deg == 0 || deg >= k));
  }
}

TEST_CASE("split_validation: zero fraction keeps everything") {
  const auto s = make_set({{0, 0}, {0, 1}, {1, 0}});
  const auto r = split_validation(s, 0.0, 9);
  CHECK(r.train == s);
  CHECK(r.validation.empty());
}

TEST_CASE("split_validation: floor(fraction * degree) per user") {
  InteractionSet s;
  for (std::uint32_t i = 0; i < 20; ++i) s.pairs.push_back({0, i});
  for (std::uint32_t i = 0; i < 7; ++i) s.pairs.push_back({1, i});
  normalize(s);
  const auto r = split_validation(s, 0.1, 42);

  std::size_t user0_val = 0, user1_val = 0;
  for (const auto& p : r.validation.pairs) (p.user == 0 ? user0_val : user1_val)++;
  CHECK(user0_val == 2);  // floor(0.1 * 20)
  CHECK(user1_val == 0);  // floor(0.1 * 7)
}

TEST_CASE("split_validation: deterministic and partitioning") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = testutil::random_interactions(8, 30, 0.3, rng);
    const auto a = split_validation(s, 0.25, 1000 + trial);
    const auto b = split_validation(s, 0.25, 1000 + trial);
    CHECK(a.train == b.train);
    CHECK(a.validation == b.validation);

    InteractionSet merged;
    merged.pairs = a.train.pairs;
    merged.pairs.insert(merged.pairs.end(), a.validation.pairs.begin(),
                        a.validation.pairs.end());
    CHECK(normalize(merged) == 0);  // disjoint
    CHECK(merged == s);             // complete
  }
}

TEST_CASE("split_validation: rejects bad fractions") {
  const auto s = make_set({{0, 0}});
  CHECK_THROWS_AS(split_validation(s, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_validation(s, -0.1, 1), std::invalid_argument);
}

TEST_CASE("build_dataset: sizes from max ids") {
  const auto d = build_dataset(make_set({{0, 0}}), {}, make_set({{0, 1}}));
  CHECK(d.num_users == 1);
  CHECK(d.num_items == 2);
}

TEST_CASE("build_dataset: split overlap is an error") {
  CHECK_THROWS_WITH_AS(
      build_dataset(make_set({{0, 0}, {0, 1}}), {}, make_set({{0, 0}})),
      doctest::Contains("overlap"), std::invalid_argument);
  CHECK_THROWS_AS(
      build_dataset(make_set({{0, 0}, {0, 1}}), make_set({{0, 1}}), {}),
      std::invalid_argument);
}

TEST_CASE("build_dataset: id gaps are rejected") {
  CHECK_THROWS_WITH_AS(build_dataset(make_set({{0, 0}, {2, 0}}), {}, {}),
                       doctest::Contains("contiguous"), std::invalid_argument);
  CHECK_THROWS_AS(build_dataset(make_set({{0, 0}, {0, 2}}), {}, {}),
                  std::invalid_argument);
}

TEST_CASE("build_dataset: cold test users are counted, not dropped") {
  DatasetReport report;
  const auto d = build_dataset(make_set({{0, 0}, {1, 0}}), {},
                               make_set({{0, 1}, {2, 0}, {2, 1}}), &report);
  CHECK(report.cold_test_users == 1);
  CHECK(report.cold_test_pairs == 2);
  CHECK(d.test.size() == 3);
  CHECK(d.num_users == 3);
}

TEST_CASE("remap_contiguous: ascending external order, sidecar round-trip") {
  InteractionSet train = make_set({{100, 7}, {100, 900}, {5, 7}});
  InteractionSet test = make_set({{5, 900}});
  const InteractionSet raw[2] = {train, test};
  const auto r = remap_contiguous(raw);

  CHECK(r.map.users == std::vector<std::uint32_t>{5, 100});
  CHECK(r.map.items == std::vector<std::uint32_t>{7, 900});
  CHECK(r.sets[0] == make_set({{1, 0}, {1, 1}, {0, 0}}));
  CHECK(r.sets[1] == make_set({{0, 1}}));
  CHECK(r.map.user_internal(100) == 1);
  CHECK_FALSE(r.map.user_internal(6).has_value());

  const std::string path = "/tmp/rgcf_test_idmap.txt";
  write_id_map(r.map.items, path);
  CHECK(read_id_map(path) == r.map.items);
}

TEST_CASE("build_user_index: spans and membership") {
  const auto s = make_set({{0, 2}, {0, 5}, {2, 1}});
  const auto index = build_user_index(s, 3);
  CHECK(index.degree(0) == 2);
  CHECK(index.degree(1) == 0);
  CHECK(index.degree(2) == 1);
  CHECK(index.contains(0, 5));
  CHECK_FALSE(index.contains(0, 1));
  const auto span = index.items_of(0);
  CHECK(std::vector<std::uint32_t>(span.begin(), span.end()) ==
        std::vector<std::uint32_t>{2, 5});
}
