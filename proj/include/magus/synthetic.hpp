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

#ifndef MAGUS_SYNTHETIC_HPP_
#define MAGUS_SYNTHETIC_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magus/common.hpp"

namespace magus {

struct SyntheticConfig {
  std::uint32_t users = 50;
  std::uint32_t items = 200;
  std::uint32_t words = 40;
  std::uint32_t words_per_item = 4;
  std::uint32_t events_per_user = 60;
  std::uint32_t queries_per_user = 0;
  std::uint64_t seed = 7;
};

struct SyntheticTruth {
  std::uint32_t topics = 0;
  std::vector<std::uint32_t> word_topic;
  std::vector<std::uint32_t> user_topic;
  std::vector<std::vector<std::uint32_t>> user_favorites;  // sorted word indices
};

/// Writes items.jsonl, interactions.jsonl, truth.json and, when
/// `queries_per_user` > 0, queries.jsonl into `out_dir`.
///
/// Words are grouped into topics and items draw most of their words from one
/// topic. Each user likes a subset of one topic's words; exposures lean toward
/// that topic and the click probability grows with the overlap between the
/// item's words and the user's favorites.
inline SyntheticTruth gen_synthetic(const SyntheticConfig& cfg, const std::filesystem::path& out_dir) {
  if (cfg.users == 0 || cfg.items == 0 || cfg.words == 0 || cfg.words_per_item == 0 ||
      cfg.events_per_user == 0) {
    throw Error("synthetic counts must be >= 1");
  }
  if (cfg.words_per_item > cfg.words) throw Error("words_per_item exceeds word count");

  Rng rng(cfg.seed);
  SyntheticTruth truth;
  truth.topics = std::max<std::uint32_t>(1, cfg.words / (2 * cfg.words_per_item));
  truth.word_topic.resize(cfg.words);
  std::vector<std::vector<std::uint32_t>> topic_words(truth.topics);
  for (std::uint32_t w = 0; w < cfg.words; ++w) {
    truth.word_topic[w] = w % truth.topics;
    topic_words[w % truth.topics].push_back(w);
  }

  std::vector<std::vector<std::uint32_t>> item_words(cfg.items);
  std::vector<std::vector<std::uint32_t>> topic_items(truth.topics);
  std::set<std::vector<std::uint32_t>> seen;
  for (std::uint32_t i = 0; i < cfg.items; ++i) {
    const auto topic = static_cast<std::uint32_t>(rng.index(truth.topics));
    std::vector<std::uint32_t> ws;
    for (int attempt = 0; attempt < 20; ++attempt) {
      std::set<std::uint32_t> picked;
      while (picked.size() < cfg.words_per_item) {
        const auto& home = topic_words[topic];
        const bool in_topic = rng.bernoulli(0.85) &&
                              !std::all_of(home.begin(), home.end(),
                                           [&](std::uint32_t w) { return picked.count(w) > 0; });
        picked.insert(in_topic ? home[rng.index(home.size())]
                               : static_cast<std::uint32_t>(rng.index(cfg.words)));
      }
      ws.assign(picked.begin(), picked.end());
      if (seen.insert(ws).second) break;
    }
    item_words[i] = ws;
    topic_items[topic].push_back(i);
  }

  truth.user_topic.resize(cfg.users);
  truth.user_favorites.resize(cfg.users);
  for (std::uint32_t u = 0; u < cfg.users; ++u) {
    const auto topic = static_cast<std::uint32_t>(rng.index(truth.topics));
    const auto& home = topic_words[topic];
    const auto k = std::max<std::uint32_t>(2, (3 * static_cast<std::uint32_t>(home.size()) + 3) / 4);
    std::vector<std::uint32_t> fav;
    for (auto idx : rng.sample(static_cast<std::uint32_t>(home.size()), k)) fav.push_back(home[idx]);
    std::sort(fav.begin(), fav.end());
    truth.user_topic[u] = topic;
    truth.user_favorites[u] = std::move(fav);
  }

  std::filesystem::create_directories(out_dir);
  auto open = [&](const char* name) {
    std::ofstream f(out_dir / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (out_dir / name).string());
    return f;
  };

  {
    auto f = open("items.jsonl");
    for (std::uint32_t i = 0; i < cfg.items; ++i) {
      nlohmann::json words = nlohmann::json::array();
      for (auto w : item_words[i]) words.push_back("w" + std::to_string(w));
      f << nlohmann::json{{"item_id", "i" + std::to_string(i)}, {"words", words}}.dump() << '\n';
    }
  }
  {
    auto f = open("interactions.jsonl");
    for (std::uint32_t u = 0; u < cfg.users; ++u) {
      const auto& fav = truth.user_favorites[u];
      const auto& home_items = topic_items[truth.user_topic[u]];
      std::int64_t ts = 1'000'000;
      for (std::uint32_t e = 0; e < cfg.events_per_user; ++e) {
        ts += 1 + static_cast<std::int64_t>(rng.index(100));
        const std::uint32_t item = (!home_items.empty() && rng.bernoulli(0.6))
                                       ? home_items[rng.index(home_items.size())]
                                       : static_cast<std::uint32_t>(rng.index(cfg.items));
        std::size_t overlap = 0;
        for (auto w : item_words[item]) overlap += std::binary_search(fav.begin(), fav.end(), w);
        const double affinity = static_cast<double>(overlap) / static_cast<double>(item_words[item].size());
        const int label = rng.bernoulli(0.02 + 0.96 * affinity * affinity) ? 1 : 0;
        f << nlohmann::json{{"user_id", "u" + std::to_string(u)},
                            {"item_id", "i" + std::to_string(item)},
                            {"label", label},
                            {"ts", ts}}
                 .dump()
          << '\n';
      }
    }
  }
  if (cfg.queries_per_user > 0) {
    auto f = open("queries.jsonl");
    for (std::uint32_t u = 0; u < cfg.users; ++u) {
      const auto& fav = truth.user_favorites[u];
      for (std::uint32_t q = 0; q < cfg.queries_per_user; ++q) {
        const auto size = static_cast<std::uint32_t>(std::min<std::size_t>(fav.size(), 1 + rng.index(2)));
        nlohmann::json words = nlohmann::json::array();
        std::vector<std::uint32_t> picked;
        for (auto idx : rng.sample(static_cast<std::uint32_t>(fav.size()), size)) picked.push_back(fav[idx]);
        std::sort(picked.begin(), picked.end());
        for (auto w : picked) words.push_back("w" + std::to_string(w));
        f << nlohmann::json{{"user_id", "u" + std::to_string(u)},
                            {"words", words},
                            {"ts", 1'000'000 + static_cast<std::int64_t>(rng.index(1000))}}
                 .dump()
          << '\n';
      }
    }
  }
  {
    auto f = open("truth.json");
    f << nlohmann::json{{"topics", truth.topics},
                        {"word_topic", truth.word_topic},
                        {"user_topic", truth.user_topic},
                        {"user_favorites", truth.user_favorites}}
             .dump()
      << '\n';
  }
  return truth;
}

}  // namespace magus

#endif  // MAGUS_SYNTHETIC_HPP_
