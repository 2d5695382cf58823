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

#include <set>

#include <gtest/gtest.h>

#include "magus/catalog.hpp"
#include "magus/synthetic.hpp"
#include "test_support.hpp"

namespace magus {
namespace {

using testing::TempDir;
using testing::read_file;
using testing::write_lines;

std::string event(const std::string& user, const std::string& item, int label, long ts) {
  return nlohmann::json{{"user_id", user}, {"item_id", item}, {"label", label}, {"ts", ts}}.dump();
}

TEST(LoadCatalog, CountsItemsAndWords) {
  TempDir dir("cat");
  write_lines(dir / "items.jsonl", {R"({"item_id":"I1","words":["milk","whole","brandA"]})",
                                    R"({"item_id":"I2","words":["milk","skim"]})"});
  write_lines(dir / "interactions.jsonl", {});
  const auto cat = load_catalog(dir / "items.jsonl", dir / "interactions.jsonl");
  EXPECT_EQ(cat.items.size(), 2u);
  EXPECT_EQ(cat.words.size(), 4u);
  EXPECT_EQ(cat.log.event_count(), 0u);
  EXPECT_TRUE(cat.users.empty());
}

TEST(LoadCatalog, NormalizesWords) {
  TempDir dir("cat");
  write_lines(dir / "items.jsonl", {R"({"item_id":"I1","words":["  Milk ","MILK","whole"]})"});
  write_lines(dir / "interactions.jsonl", {});
  const auto cat = load_catalog(dir / "items.jsonl", dir / "interactions.jsonl");
  ASSERT_EQ(cat.items.size(), 1u);
  EXPECT_EQ(cat.items[0].words.size(), 2u);
  EXPECT_TRUE(cat.find_word("milk"));
  EXPECT_FALSE(cat.find_word("Milk"));
}

TEST(LoadCatalog, UnknownItemInteractionIsRejected) {
  TempDir dir("cat");
  write_lines(dir / "items.jsonl", {R"({"item_id":"I1","words":["milk"]})"});
  write_lines(dir / "interactions.jsonl", {event("u1", "I1", 1, 5), event("u1", "I9", 1, 6)});
  const auto cat = load_catalog(dir / "items.jsonl", dir / "interactions.jsonl");
  EXPECT_EQ(cat.summary.rejected_interactions, 1u);
  EXPECT_EQ(cat.log.event_count(), 1u);
}

TEST(LoadCatalog, ZeroWordItemIsRejected) {
  TempDir dir("cat");
  write_lines(dir / "items.jsonl", {R"({"item_id":"I1","words":[]})", R"({"item_id":"I2","words":["a"]})"});
  write_lines(dir / "interactions.jsonl", {});
  const auto cat = load_catalog(dir / "items.jsonl", dir / "interactions.jsonl");
  EXPECT_EQ(cat.summary.rejected_items, 1u);
  EXPECT_EQ(cat.items.size(), 1u);
  EXPECT_EQ(cat.items[0].label, "I2");
}

TEST(LoadCatalog, MalformedLineReportsLineNumber) {
  TempDir dir("cat");
  write_lines(dir / "items.jsonl", {R"({"item_id":"I1","words":["a"]})", "{not json"});
  write_lines(dir / "interactions.jsonl", {});
  try {
    load_catalog(dir / "items.jsonl", dir / "interactions.jsonl");
    FAIL() << "expected CatalogError";
  } catch (const CatalogError& e) {
    EXPECT_NE(std::string(e.what()).find("items.jsonl:2"), std::string::npos) << e.what();
  }
}

TEST(LoadCatalog, EventsSortedAndConflictsDropped) {
  TempDir dir("cat");
  write_lines(dir / "items.jsonl", {R"({"item_id":"I1","words":["a"]})", R"({"item_id":"I2","words":["b"]})"});
  write_lines(dir / "interactions.jsonl",
              {event("u", "I2", 1, 9), event("u", "I1", 1, 3), event("u", "I1", 0, 3), event("u", "I2", 0, 4)});
  const auto cat = load_catalog(dir / "items.jsonl", dir / "interactions.jsonl");
  const auto& ev = cat.log.users[0].events;
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_EQ(ev[0].ts, 3);
  EXPECT_TRUE(ev[0].positive);
  EXPECT_EQ(ev[1].ts, 4);
  EXPECT_EQ(ev[2].ts, 9);
  EXPECT_EQ(cat.summary.rejected_interactions, 1u);
}

TEST(LoadCatalog, QueriesKeepKnownWordsOnly) {
  TempDir dir("cat");
  write_lines(dir / "items.jsonl", {R"({"item_id":"I1","words":["milk","skim"]})"});
  write_lines(dir / "interactions.jsonl", {event("u", "I1", 1, 1)});
  write_lines(dir / "queries.jsonl", {R"({"user_id":"u","words":["skim","soy"],"ts":2})",
                                      R"({"user_id":"u","words":["soy"],"ts":3})"});
  const auto cat = load_catalog_dir(dir.path());
  ASSERT_EQ(cat.log.users[0].queries.size(), 1u);
  EXPECT_EQ(cat.log.users[0].queries[0].words, WordSet{*cat.find_word("skim")});
  EXPECT_EQ(cat.summary.rejected_queries, 1u);
}

InteractionLog one_user_log(std::size_t n, bool with_positive) {
  InteractionLog log;
  log.users.resize(1);
  for (std::size_t k = 0; k < n; ++k) {
    log.users[0].events.push_back({static_cast<ItemId>(k % 7), static_cast<std::int64_t>(k), with_positive && k == 0});
  }
  return log;
}

TEST(TemporalSplit, ThirtyEventsSplitEighteenSixSix) {
  const auto split = temporal_split(one_user_log(30, true));
  EXPECT_EQ(split.train.users[0].events.size(), 18u);
  EXPECT_EQ(split.valid.users[0].events.size(), 6u);
  EXPECT_EQ(split.test.users[0].events.size(), 6u);
  EXPECT_EQ(split.kept_users.size(), 1u);
}

TEST(TemporalSplit, ShortSequenceDropped) {
  const auto split = temporal_split(one_user_log(29, true));
  EXPECT_EQ(split.dropped_users, 1u);
  EXPECT_TRUE(split.train.users[0].events.empty());
  EXPECT_TRUE(split.test.users[0].events.empty());
}

TEST(TemporalSplit, NoPositivesDropped) {
  const auto split = temporal_split(one_user_log(40, false));
  EXPECT_EQ(split.dropped_users, 1u);
  EXPECT_TRUE(split.kept_users.empty());
}

TEST(TemporalSplit, PartitionPreservesOrder) {
  Rng rng(3);
  InteractionLog log;
  log.users.resize(20);
  for (auto& u : log.users) {
    const std::size_t n = 25 + rng.index(40);
    for (std::size_t k = 0; k < n; ++k) {
      u.events.push_back({static_cast<ItemId>(rng.index(50)), static_cast<std::int64_t>(k * 3), rng.bernoulli(0.3)});
    }
  }
  const auto split = temporal_split(log);
  for (UserId u : split.kept_users) {
    std::vector<Interaction> joined = split.train.users[u].events;
    joined.insert(joined.end(), split.valid.users[u].events.begin(), split.valid.users[u].events.end());
    joined.insert(joined.end(), split.test.users[u].events.begin(), split.test.users[u].events.end());
    ASSERT_EQ(joined.size(), log.users[u].events.size());
    for (std::size_t k = 0; k < joined.size(); ++k) {
      EXPECT_EQ(joined[k].ts, log.users[u].events[k].ts);
      EXPECT_EQ(joined[k].item, log.users[u].events[k].item);
    }
  }
}

TEST(TemporalSplit, RejectsBadRatios) {
  EXPECT_THROW(temporal_split(one_user_log(30, true), {0.5, 0.2, 0.2}), Error);
}

InteractionLog test_log_with_positives(const std::vector<std::vector<ItemId>>& positives) {
  InteractionLog log;
  log.users.resize(positives.size());
  for (std::size_t u = 0; u < positives.size(); ++u) {
    std::int64_t ts = 0;
    for (ItemId i : positives[u]) log.users[u].events.push_back({i, ts++, true});
  }
  return log;
}

TEST(BuildSessions, ThreePositivesHundredItems) {
  const auto log = test_log_with_positives({{4, 17, 60}});
  const auto sessions = build_sessions(log, 100, {30, 5});
  ASSERT_EQ(sessions.size(), 1u);
  const auto& s = sessions[0];
  EXPECT_EQ(s.candidates.size(), 30u);
  EXPECT_EQ(std::set<ItemId>(s.candidates.begin(), s.candidates.end()).size(), 30u);
  EXPECT_GE(s.targets.size(), 1u);
  EXPECT_LE(s.targets.size(), 3u);
  EXPECT_TRUE(s.valid());
}

TEST(BuildSessions, CatalogOfThirtyUsesEveryItem) {
  const auto sessions = build_sessions(test_log_with_positives({{2}}), 30, {30, 1});
  auto c = sessions[0].candidates;
  std::sort(c.begin(), c.end());
  for (ItemId i = 0; i < 30; ++i) EXPECT_EQ(c[i], i);
}

TEST(BuildSessions, SameSeedSameBytes) {
  const auto log = test_log_with_positives({{1, 2}, {}, {40, 41, 42}, {7}});
  TempDir dir("sess");
  write_sessions(dir / "a.jsonl", build_sessions(log, 80, {30, 11}));
  write_sessions(dir / "b.jsonl", build_sessions(log, 80, {30, 11}));
  EXPECT_EQ(read_file(dir / "a.jsonl"), read_file(dir / "b.jsonl"));
  const auto back = read_sessions(dir / "a.jsonl");
  EXPECT_EQ(back.size(), 3u);  // the user without positives is skipped
}

TEST(BuildSessions, ValidAcrossManySeeds) {
  Rng rng(99);
  std::vector<std::vector<ItemId>> positives(5);
  for (auto& p : positives) {
    for (int k = 0; k < 4; ++k) p.push_back(static_cast<ItemId>(rng.index(60)));
  }
  const auto log = test_log_with_positives(positives);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    for (const auto& s : build_sessions(log, 60, {30, seed})) ASSERT_TRUE(s.valid()) << "seed " << seed;
  }
}

TEST(Synthetic, DefaultFixtureShape) {
  TempDir dir("syn");
  SyntheticConfig cfg;  // 50 users, 200 items, 40 words, 4 per item, 60 events
  gen_synthetic(cfg, dir.path());
  const auto cat = load_catalog_dir(dir.path());
  EXPECT_EQ(cat.items.size(), 200u);
  EXPECT_LE(cat.log.event_count(), 3000u);
  for (const auto& item : cat.items) EXPECT_EQ(item.words.size(), 4u);
}

TEST(Synthetic, SameSeedSameFiles) {
  TempDir a("syn"), b("syn");
  SyntheticConfig cfg;
  gen_synthetic(cfg, a.path());
  gen_synthetic(cfg, b.path());
  EXPECT_EQ(read_file(a / "items.jsonl"), read_file(b / "items.jsonl"));
  EXPECT_EQ(read_file(a / "interactions.jsonl"), read_file(b / "interactions.jsonl"));
}

TEST(Synthetic, AllWordsPerItemTerminates) {
  TempDir dir("syn");
  SyntheticConfig cfg;
  cfg.users = 3;
  cfg.items = 5;
  cfg.words = 6;
  cfg.words_per_item = 6;
  cfg.events_per_user = 10;
  gen_synthetic(cfg, dir.path());
  const auto cat = load_catalog_dir(dir.path());
  EXPECT_EQ(cat.items.size(), 5u);
  for (const auto& item : cat.items) EXPECT_EQ(item.words.size(), 6u);
}

TEST(Catalog, DenseIds) {
  TempDir dir("syn");
  SyntheticConfig cfg;
  cfg.users = 10;
  cfg.items = 30;
  cfg.events_per_user = 20;
  gen_synthetic(cfg, dir.path());
  const auto cat = load_catalog_dir(dir.path());
  std::set<WordId> used;
  for (const auto& item : cat.items) used.insert(item.words.begin(), item.words.end());
  EXPECT_EQ(used.size(), cat.words.size());
  EXPECT_EQ(*used.rbegin() + 1, cat.words.size());
  EXPECT_EQ(cat.user_index.size(), cat.users.size());
}

}  // namespace
}  // namespace magus
