// Copyright 2026 The MAGUS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Items, words and user logs: JSON-lines ingestion, the temporal
// train/valid/test split, and construction of evaluation sessions.

#ifndef MAGUS_CATALOG_HPP_
#define MAGUS_CATALOG_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "magus/common.hpp"

namespace magus {

struct Item {
  std::string label;
  WordSet words;  // nonempty
};

struct Interaction {
  ItemId item = kInvalidId;
  std::int64_t ts = 0;
  bool positive = false;
};

struct QueryRecord {
  WordSet words;
  std::int64_t ts = 0;
};

struct UserHistory {
  std::vector<Interaction> events;  // sorted by ts
  std::vector<QueryRecord> queries;  // sorted by ts

  std::vector<ItemId> positives() const { return items_with_label(true); }
  std::vector<ItemId> negatives() const { return items_with_label(false); }

  // Distinct positive item ids in ascending order.
  std::vector<ItemId> distinct_positives() const {
    auto out = positives();
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  std::vector<ItemId> items_with_label(bool label) const {
    std::vector<ItemId> out;
    for (const auto& e : events) {
      if (e.positive == label) out.push_back(e.item);
    }
    return out;
  }
};

// Indexed by UserId.
struct InteractionLog {
  std::vector<UserHistory> users;

  std::size_t event_count() const {
    std::size_t n = 0;
    for (const auto& u : users) n += u.events.size();
    return n;
  }
};

struct LoadSummary {
  std::size_t items = 0;
  std::size_t rejected_items = 0;
  std::size_t interactions = 0;
  std::size_t rejected_interactions = 0;
  std::size_t queries = 0;
  std::size_t rejected_queries = 0;
};

// Immutable after loading.
struct Catalog {
  std::vector<std::string> words;
  std::vector<Item> items;
  std::vector<std::string> users;
  InteractionLog log;
  LoadSummary summary;

  std::unordered_map<std::string, WordId> word_index;
  std::unordered_map<std::string, ItemId> item_index;
  std::unordered_map<std::string, UserId> user_index;

  std::optional<WordId> find_word(const std::string& w) const { return find(word_index, w); }
  std::optional<ItemId> find_item(const std::string& id) const { return find(item_index, id); }
  std::optional<UserId> find_user(const std::string& id) const { return find(user_index, id); }

  WordId intern_word(const std::string& w) {
    auto [it, inserted] = word_index.try_emplace(w, static_cast<WordId>(words.size()));
    if (inserted) words.push_back(w);
    return it->second;
  }

  UserId intern_user(const std::string& id) {
    auto [it, inserted] = user_index.try_emplace(id, static_cast<UserId>(users.size()));
    if (inserted) {
      users.push_back(id);
      log.users.emplace_back();
    }
    return it->second;
  }

  // Returns kInvalidId if the label is already taken.
  ItemId add_item(const std::string& label, WordSet words_of_item) {
    normalize_word_set(words_of_item);
    auto [it, inserted] = item_index.try_emplace(label, static_cast<ItemId>(items.size()));
    if (!inserted) return kInvalidId;
    items.push_back(Item{label, std::move(words_of_item)});
    return it->second;
  }

 private:
  template <typename Map>
  static std::optional<std::uint32_t> find(const Map& m, const std::string& key) {
    auto it = m.find(key);
    if (it == m.end()) return std::nullopt;
    return it->second;
  }
};

class CatalogError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::string normalize_word(std::string_view raw) {
  auto begin = raw.begin();
  auto end = raw.end();
  while (begin != end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
  while (end != begin && std::isspace(static_cast<unsigned char>(*(end - 1)))) --end;
  std::string out(begin, end);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Calls fn(json, line_number) for every nonblank line.
template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw CatalogError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw CatalogError(path.filename().string() + ":" + std::to_string(line_no) +
                         ": malformed JSON: " + e.what());
    }
    try {
      fn(j, line_no);
    } catch (const nlohmann::json::exception& e) {
      throw CatalogError(path.filename().string() + ":" + std::to_string(line_no) +
                         ": malformed record: " + e.what());
    }
  }
}

[[noreturn]] inline void malformed(const std::filesystem::path& path, std::size_t line_no,
                                   const std::string& what) {
  throw CatalogError(path.filename().string() + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace detail

/// Loads the items, interactions and (optionally) queries JSON-lines files.
///
/// Ids are assigned densely in first-seen order. Items with no words and
/// interactions naming unknown items are skipped and counted in
/// `Catalog::summary`; query words absent from the item vocabulary are
/// dropped, and a query left with no words is counted as rejected. Any line
/// that is not valid JSON of the expected shape raises CatalogError with the
/// file name and line number.
inline Catalog load_catalog(const std::filesystem::path& items_path,
                            const std::filesystem::path& interactions_path,
                            const std::optional<std::filesystem::path>& queries_path = {}) {
  Catalog cat;

  detail::for_each_json_line(items_path, [&](const nlohmann::json& j, std::size_t line_no) {
    if (!j.is_object() || !j.contains("item_id") || !j.contains("words") ||
        !j.at("words").is_array()) {
      detail::malformed(items_path, line_no, "expected {\"item_id\", \"words\": [...]}");
    }
    const auto label = j.at("item_id").get<std::string>();
    std::vector<std::string> raw;
    for (const auto& w : j.at("words")) {
      auto norm = detail::normalize_word(w.get<std::string>());
      if (!norm.empty()) raw.push_back(std::move(norm));
    }
    if (raw.empty() || cat.find_item(label)) {
      ++cat.summary.rejected_items;
      return;
    }
    WordSet ws;
    for (const auto& w : raw) ws.push_back(cat.intern_word(w));
    cat.add_item(label, std::move(ws));
  });
  cat.summary.items = cat.items.size();

  detail::for_each_json_line(interactions_path, [&](const nlohmann::json& j,
                                                    std::size_t line_no) {
    if (!j.is_object() || !j.contains("user_id") || !j.contains("item_id") ||
        !j.contains("label") || !j.contains("ts") || !j.at("ts").is_number_integer() ||
        !j.at("label").is_number_integer()) {
      detail::malformed(interactions_path, line_no,
                        "expected {\"user_id\", \"item_id\", \"label\", \"ts\"}");
    }
    const int label = j.at("label").get<int>();
    if (label != 0 && label != 1) detail::malformed(interactions_path, line_no, "label must be 0 or 1");
    auto item = cat.find_item(j.at("item_id").get<std::string>());
    if (!item) {
      ++cat.summary.rejected_interactions;
      return;
    }
    const UserId user = cat.intern_user(j.at("user_id").get<std::string>());
    cat.log.users[user].events.push_back(
        Interaction{*item, j.at("ts").get<std::int64_t>(), label == 1});
  });

  if (queries_path) {
    detail::for_each_json_line(*queries_path, [&](const nlohmann::json& j, std::size_t line_no) {
      if (!j.is_object() || !j.contains("user_id") || !j.contains("words") ||
          !j.at("words").is_array() || !j.contains("ts") || !j.at("ts").is_number_integer()) {
        detail::malformed(*queries_path, line_no, "expected {\"user_id\", \"words\": [...], \"ts\"}");
      }
      WordSet ws;
      for (const auto& w : j.at("words")) {
        if (auto id = cat.find_word(detail::normalize_word(w.get<std::string>()))) ws.push_back(*id);
      }
      normalize_word_set(ws);
      if (ws.empty()) {
        ++cat.summary.rejected_queries;
        return;
      }
      const UserId user = cat.intern_user(j.at("user_id").get<std::string>());
      cat.log.users[user].queries.push_back(QueryRecord{std::move(ws), j.at("ts").get<std::int64_t>()});
      ++cat.summary.queries;
    });
  }

  for (auto& user : cat.log.users) {
    std::stable_sort(user.events.begin(), user.events.end(),
                     [](const Interaction& a, const Interaction& b) { return a.ts < b.ts; });
    // A user cannot both like and dislike an item at the same instant; keep the first.
    std::vector<Interaction> kept;
    kept.reserve(user.events.size());
    for (const auto& e : user.events) {
      const bool conflict = std::any_of(kept.rbegin(), kept.rend(), [&](const Interaction& k) {
        return k.ts == e.ts && k.item == e.item && k.positive != e.positive;
      });
      if (conflict) {
        ++cat.summary.rejected_interactions;
      } else {
        kept.push_back(e);
      }
    }
    user.events = std::move(kept);
    std::stable_sort(user.queries.begin(), user.queries.end(),
                     [](const QueryRecord& a, const QueryRecord& b) { return a.ts < b.ts; });
  }
  cat.summary.interactions = cat.log.event_count();
  return cat;
}

// Directory layout used by the CLI: items.jsonl, interactions.jsonl and an
// optional queries.jsonl.
inline Catalog load_catalog_dir(const std::filesystem::path& dir) {
  std::optional<std::filesystem::path> queries;
  if (std::filesystem::exists(dir / "queries.jsonl")) queries = dir / "queries.jsonl";
  return load_catalog(dir / "items.jsonl", dir / "interactions.jsonl", queries);
}

struct SplitRatios {
  double train = 0.6;
  double valid = 0.2;
  double test = 0.2;
};

struct TemporalSplit {
  InteractionLog train;
  InteractionLog valid;
  InteractionLog test;
  std::vector<UserId> kept_users;
  std::size_t dropped_users = 0;
};

/// Per-user chronological 6:2:2 split.
///
/// Users whose interaction sequence is shorter than `min_length`, or who have
/// no positive interaction at all, are dropped from every part. Queries follow
/// the part whose time range they fall into.
inline TemporalSplit temporal_split(const InteractionLog& log, SplitRatios ratios = {},
                                    std::size_t min_length = 30) {
  if (ratios.train <= 0 || ratios.valid <= 0 || ratios.test <= 0 ||
      std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
    throw Error("split ratios must be positive and sum to 1");
  }
  TemporalSplit out;
  const std::size_t n_users = log.users.size();
  out.train.users.resize(n_users);
  out.valid.users.resize(n_users);
  out.test.users.resize(n_users);

  for (UserId u = 0; u < n_users; ++u) {
    auto events = log.users[u].events;
    std::stable_sort(events.begin(), events.end(),
                     [](const Interaction& a, const Interaction& b) { return a.ts < b.ts; });
    const bool has_positive =
        std::any_of(events.begin(), events.end(), [](const Interaction& e) { return e.positive; });
    if (events.size() < min_length || !has_positive) {
      ++out.dropped_users;
      continue;
    }
    const auto n = static_cast<double>(events.size());
    const auto cut1 = static_cast<std::size_t>(std::floor(n * ratios.train + 1e-9));
    const auto cut2 = static_cast<std::size_t>(std::floor(n * (ratios.train + ratios.valid) + 1e-9));
    auto begin = events.begin();
    out.train.users[u].events.assign(begin, begin + cut1);
    out.valid.users[u].events.assign(begin + cut1, begin + cut2);
    out.test.users[u].events.assign(begin + cut2, events.end());

    for (const auto& q : log.users[u].queries) {
      auto& part = (cut1 < events.size() && q.ts >= events[cut1].ts)
                       ? ((cut2 < events.size() && q.ts >= events[cut2].ts) ? out.test : out.valid)
                       : out.train;
      part.users[u].queries.push_back(q);
    }
    out.kept_users.push_back(u);
  }
  return out;
}

/// One evaluation episode: a candidate pool and the items that satisfy the user.
struct SessionSpec {
  UserId user = kInvalidId;
  std::vector<ItemId> candidates;  // distinct
  std::vector<ItemId> targets;     // sorted, subset of candidates
  std::vector<WordSet> queries;    // searched-query history, may be empty

  bool valid() const {
    if (targets.empty()) return false;
    auto sorted = candidates;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
    return std::all_of(targets.begin(), targets.end(), [&](ItemId t) {
      return std::binary_search(sorted.begin(), sorted.end(), t);
    });
  }
};

// Candidates are a uniform sample of the catalog that always contains one
// positive; targets are every positive that landed in the pool.
inline SessionSpec sample_session(UserId user, const std::vector<ItemId>& positives,
                                  std::size_t item_count, std::size_t size, Rng& rng) {
  SessionSpec s;
  s.user = user;
  const ItemId forced = positives[rng.index(positives.size())];
  std::vector<ItemId> pool;
  pool.reserve(item_count - 1);
  for (ItemId i = 0; i < item_count; ++i) {
    if (i != forced) pool.push_back(i);
  }
  const std::size_t extra = std::min(size == 0 ? 0 : size - 1, pool.size());
  for (std::size_t i = 0; i < extra; ++i) {
    std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
  }
  s.candidates.push_back(forced);
  s.candidates.insert(s.candidates.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(extra));
  rng.shuffle(s.candidates);
  for (ItemId c : s.candidates) {
    if (std::binary_search(positives.begin(), positives.end(), c)) s.targets.push_back(c);
  }
  std::sort(s.targets.begin(), s.targets.end());
  return s;
}

struct SessionOptions {
  std::size_t size = 30;
  std::uint64_t seed = 0;
};

/// One session per test user with at least one test-period positive, in
/// ascending user order. When `history` is given, each session carries the
/// user's searched queries from that log.
inline std::vector<SessionSpec> build_sessions(const InteractionLog& test, std::size_t item_count,
                                               SessionOptions opts = {},
                                               const InteractionLog* history = nullptr) {
  if (item_count == 0) throw Error("cannot build sessions over an empty catalog");
  Rng rng(opts.seed);
  std::vector<SessionSpec> out;
  for (UserId u = 0; u < test.users.size(); ++u) {
    const auto positives = test.users[u].distinct_positives();
    if (positives.empty()) continue;
    auto s = sample_session(u, positives, item_count, opts.size, rng);
    if (history && u < history->users.size()) {
      for (const auto& q : history->users[u].queries) s.queries.push_back(q.words);
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline nlohmann::json session_to_json(const SessionSpec& s) {
  nlohmann::json queries = nlohmann::json::array();
  for (const auto& q : s.queries) queries.push_back(q);
  return {{"user", s.user}, {"candidates", s.candidates}, {"targets", s.targets}, {"queries", queries}};
}

inline SessionSpec session_from_json(const nlohmann::json& j) {
  SessionSpec s;
  s.user = j.at("user").get<UserId>();
  s.candidates = j.at("candidates").get<std::vector<ItemId>>();
  s.targets = j.at("targets").get<std::vector<ItemId>>();
  std::sort(s.targets.begin(), s.targets.end());
  if (j.contains("queries")) {
    for (const auto& q : j.at("queries")) {
      auto ws = q.get<WordSet>();
      normalize_word_set(ws);
      s.queries.push_back(std::move(ws));
    }
  }
  if (!s.valid()) throw Error("invalid session spec for user " + std::to_string(s.user));
  return s;
}

inline void write_sessions(const std::filesystem::path& path, const std::vector<SessionSpec>& sessions) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& s : sessions) out << session_to_json(s).dump() << '\n';
}

inline std::vector<SessionSpec> read_sessions(const std::filesystem::path& path) {
  std::vector<SessionSpec> out;
  detail::for_each_json_line(path, [&](const nlohmann::json& j, std::size_t) {
    out.push_back(session_from_json(j));
  });
  return out;
}

}  // namespace magus

#endif  // MAGUS_CATALOG_HPP_
