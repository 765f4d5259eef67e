#include "rgcf/interactions.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "rgcf/rng.hpp"

namespace rgcf {

namespace {

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                           ": " + what);
}

// Parses one non-negative decimal integer token.
std::uint32_t parse_id(std::string_view token, std::size_t line_no) {
  if (token.empty()) parse_fail(line_no, "empty token");
  if (token.front() == '-') parse_fail(line_no, "negative id '" + std::string(token) + "'");
  std::uint64_t value = 0;
  for (char c : token) {
    if (c < '0' || c > '9')
      parse_fail(line_no, "non-integer token '" + std::string(token) + "'");
    value = value * 10 + static_cast<std::uint64_t>(c - '0');
    if (value > 0xFFFFFFFFull) parse_fail(line_no, "id out of range");
  }
  return static_cast<std::uint32_t>(value);
}

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename LineFn>
void for_each_line(std::string_view text, LineFn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    if (pos == text.size()) break;
    std::size_t end = text.find('\n', pos);
    std::string_view line = (end == std::string_view::npos)
                                ? text.substr(pos)
                                : text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    fn(line, line_no);
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::size_t normalize(InteractionSet& s) {
  std::sort(s.pairs.begin(), s.pairs.end());
  auto last = std::unique(s.pairs.begin(), s.pairs.end());
  const std::size_t dropped = static_cast<std::size_t>(s.pairs.end() - last);
  s.pairs.erase(last, s.pairs.end());
  return dropped;
}

ParseResult parse_interaction_text(std::string_view text) {
  ParseResult result;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    auto tokens = split_tokens(line);
    if (tokens.empty()) return;  // blank line
    const std::uint32_t user = parse_id(tokens[0], line_no);
    for (std::size_t t = 1; t < tokens.size(); ++t)
      result.set.pairs.push_back({user, parse_id(tokens[t], line_no)});
  });
  result.duplicates_dropped = normalize(result.set);
  return result;
}

ParseResult parse_interaction_file(const std::string& path) {
  return parse_interaction_text(read_file(path));
}

ParseResult parse_pair_text(std::string_view text) {
  ParseResult result;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    std::string buf(line);
    std::replace(buf.begin(), buf.end(), ',', ' ');
    auto tokens = split_tokens(buf);
    if (tokens.empty()) return;
    if (tokens.size() != 2) parse_fail(line_no, "expected 'user item' pair");
    result.set.pairs.push_back(
        {parse_id(tokens[0], line_no), parse_id(tokens[1], line_no)});
  });
  result.duplicates_dropped = normalize(result.set);
  return result;
}

std::string serialize_interactions(const InteractionSet& s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.pairs.size()) {
    const std::uint32_t user = s.pairs[i].user;
    out += std::to_string(user);
    while (i < s.pairs.size() && s.pairs[i].user == user) {
      out += ' ';
      out += std::to_string(s.pairs[i].item);
      ++i;
    }
    out += '\n';
  }
  return out;
}

void write_interaction_file(const InteractionSet& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << serialize_interactions(s);
}

InteractionSet k_core_filter(const InteractionSet& s, std::size_t k) {
  InteractionSet current = s;
  for (;;) {
    std::unordered_map<std::uint32_t, std::size_t> user_deg, item_deg;
    for (const auto& p : current.pairs) {
      ++user_deg[p.user];
      ++item_deg[p.item];
    }
    InteractionSet next;
    next.pairs.reserve(current.pairs.size());
    for (const auto& p : current.pairs)
      if (user_deg[p.user] >= k && item_deg[p.item] >= k)
        next.pairs.push_back(p);
    if (next.pairs.size() == current.pairs.size()) return current;
    current = std::move(next);
  }
}

SplitResult split_validation(const InteractionSet& train, double fraction,
                             std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0)
    throw std::invalid_argument("split fraction must be in [0, 1)");
  SplitResult result;
  Rng rng(seed);
  std::size_t i = 0;
  std::vector<std::uint32_t> items;
  while (i < train.pairs.size()) {
    const std::uint32_t user = train.pairs[i].user;
    items.clear();
    while (i < train.pairs.size() && train.pairs[i].user == user)
      items.push_back(train.pairs[i++].item);
    const std::size_t take =
        static_cast<std::size_t>(fraction * static_cast<double>(items.size()));
    // partial Fisher-Yates: the first `take` slots become the held-out items
    for (std::size_t t = 0; t < take; ++t) {
      const std::size_t j =
          t + static_cast<std::size_t>(rng.next_below(items.size() - t));
      std::swap(items[t], items[j]);
    }
    for (std::size_t t = 0; t < items.size(); ++t) {
      auto& dst = (t < take) ? result.validation : result.train;
      dst.pairs.push_back({user, items[t]});
    }
  }
  normalize(result.train);
  normalize(result.validation);
  return result;
}

std::optional<std::uint32_t> IdMap::user_internal(std::uint32_t external) const {
  auto it = std::lower_bound(users.begin(), users.end(), external);
  if (it == users.end() || *it != external) return std::nullopt;
  return static_cast<std::uint32_t>(it - users.begin());
}

std::optional<std::uint32_t> IdMap::item_internal(std::uint32_t external) const {
  auto it = std::lower_bound(items.begin(), items.end(), external);
  if (it == items.end() || *it != external) return std::nullopt;
  return static_cast<std::uint32_t>(it - items.begin());
}

RemapResult remap_contiguous(std::span<const InteractionSet> sets) {
  RemapResult result;
  for (const auto& s : sets) {
    for (const auto& p : s.pairs) {
      result.map.users.push_back(p.user);
      result.map.items.push_back(p.item);
    }
  }
  auto dedup = [](std::vector<std::uint32_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedup(result.map.users);
  dedup(result.map.items);

  result.sets.reserve(sets.size());
  for (const auto& s : sets) {
    InteractionSet mapped;
    mapped.pairs.reserve(s.pairs.size());
    for (const auto& p : s.pairs)
      mapped.pairs.push_back(
          {*result.map.user_internal(p.user), *result.map.item_internal(p.item)});
    normalize(mapped);
    result.sets.push_back(std::move(mapped));
  }
  return result;
}

void write_id_map(const std::vector<std::uint32_t>& internal_to_external,
                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  for (std::size_t internal = 0; internal < internal_to_external.size(); ++internal)
    out << internal_to_external[internal] << ' ' << internal << '\n';
}

std::vector<std::uint32_t> read_id_map(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<std::uint32_t> internal_to_external;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    auto tokens = split_tokens(line);
    if (tokens.empty()) return;
    if (tokens.size() != 2) parse_fail(line_no, "expected 'external internal'");
    const std::uint32_t external = parse_id(tokens[0], line_no);
    const std::uint32_t internal = parse_id(tokens[1], line_no);
    if (internal >= internal_to_external.size())
      internal_to_external.resize(internal + 1);
    internal_to_external[internal] = external;
  });
  return internal_to_external;
}

namespace {

void check_no_duplicates(const InteractionSet& s, const char* name) {
  for (std::size_t i = 1; i < s.pairs.size(); ++i)
    if (s.pairs[i] == s.pairs[i - 1])
      throw std::invalid_argument(std::string("duplicate pair in ") + name);
}

void check_disjoint(const InteractionSet& a, const InteractionSet& b,
                    const char* what) {
  std::vector<Interaction> overlap;
  std::set_intersection(a.pairs.begin(), a.pairs.end(), b.pairs.begin(),
                        b.pairs.end(), std::back_inserter(overlap));
  if (!overlap.empty())
    throw std::invalid_argument(
        std::string("splits overlap (") + what + "): " +
        std::to_string(overlap.size()) + " shared pairs, first (" +
        std::to_string(overlap[0].user) + ", " +
        std::to_string(overlap[0].item) + ")");
}

}  // namespace

InteractionDataset build_dataset(InteractionSet train, InteractionSet validation,
                                 InteractionSet test, DatasetReport* report) {
  InteractionDataset d;
  normalize(train);
  normalize(validation);
  normalize(test);
  check_no_duplicates(train, "train");
  check_no_duplicates(validation, "validation");
  check_no_duplicates(test, "test");
  check_disjoint(train, test, "train/test");
  check_disjoint(train, validation, "train/validation");

  std::uint32_t max_user = 0, max_item = 0;
  bool any = false;
  for (const auto* s : {&train, &validation, &test}) {
    for (const auto& p : s->pairs) {
      max_user = std::max(max_user, p.user);
      max_item = std::max(max_item, p.item);
      any = true;
    }
  }
  d.num_users = any ? max_user + 1 : 0;
  d.num_items = any ? max_item + 1 : 0;

  // contiguity: every id below the maximum must occur somewhere
  std::vector<bool> user_seen(d.num_users, false), item_seen(d.num_items, false);
  for (const auto* s : {&train, &validation, &test}) {
    for (const auto& p : s->pairs) {
      user_seen[p.user] = true;
      item_seen[p.item] = true;
    }
  }
  for (std::uint32_t u = 0; u < d.num_users; ++u)
    if (!user_seen[u])
      throw std::invalid_argument("user ids not contiguous: " +
                                  std::to_string(u) + " never occurs");
  for (std::uint32_t i = 0; i < d.num_items; ++i)
    if (!item_seen[i])
      throw std::invalid_argument("item ids not contiguous: " +
                                  std::to_string(i) + " never occurs");

  if (report != nullptr) {
    *report = DatasetReport{};
    std::vector<bool> in_train(d.num_users, false);
    for (const auto& p : train.pairs) in_train[p.user] = true;
    std::uint32_t prev_user = 0;
    bool have_prev = false;
    for (const auto& p : test.pairs) {
      if (in_train[p.user]) continue;
      ++report->cold_test_pairs;
      if (!have_prev || p.user != prev_user) ++report->cold_test_users;
      prev_user = p.user;
      have_prev = true;
    }
  }

  d.train = std::move(train);
  d.validation = std::move(validation);
  d.test = std::move(test);
  return d;
}

bool UserItemIndex::contains(std::uint32_t u, std::uint32_t i) const {
  auto span = items_of(u);
  return std::binary_search(span.begin(), span.end(), i);
}

UserItemIndex build_user_index(const InteractionSet& s, std::uint32_t num_users) {
  UserItemIndex index;
  index.offsets.assign(num_users + 1, 0);
  for (std::size_t i = 0; i < s.pairs.size(); ++i) {
    const auto& p = s.pairs[i];
    if (p.user >= num_users)
      throw std::out_of_range("user id " + std::to_string(p.user) +
                              " out of range (num_users=" +
                              std::to_string(num_users) + ")");
    // the flat layout below relies on the set's sorted order
    if (i > 0 && !(s.pairs[i - 1] < p))
      throw std::invalid_argument("interaction set is not normalized");
    ++index.offsets[p.user + 1];
  }
  for (std::size_t u = 1; u <= num_users; ++u)
    index.offsets[u] += index.offsets[u - 1];
  index.items.reserve(s.pairs.size());
  for (const auto& p : s.pairs) index.items.push_back(p.item);
  return index;
}

}  // namespace rgcf
