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

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "magus/scorer.hpp"
#include "test_support.hpp"

namespace magus {
namespace {

// Log with `clicks[i]` positives on item i, spread over one user.
InteractionLog click_log(const std::vector<int>& clicks) {
  InteractionLog log;
  log.users.resize(1);
  std::int64_t ts = 0;
  for (ItemId i = 0; i < clicks.size(); ++i) {
    for (int c = 0; c < clicks[i]; ++c) log.users[0].events.push_back({i, ++ts, true});
    log.users[0].events.push_back({i, ++ts, false});
  }
  return log;
}

TEST(Popularity, RatioOfMaxClicks) {
  const auto m = train_popularity(click_log({4, 2, 0}), 3);
  EXPECT_DOUBLE_EQ(m.score(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.score(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(m.score(0, 2), 0.0);
  EXPECT_FALSE(m.has_embeddings());
}

TEST(Popularity, SingleItem) { EXPECT_DOUBLE_EQ(train_popularity(click_log({1}), 1).score(3, 0), 1.0); }

TEST(Popularity, NoPositivesAllZero) {
  const auto m = train_popularity(click_log({0, 0}), 2);
  EXPECT_EQ(m.popularity_scores(), (std::vector<double>{0.0, 0.0}));
}

TEST(ScoreItems, OrderAlignedAndEmpty) {
  const auto m = train_popularity(click_log({4, 2, 0}), 3);
  const std::vector<ItemId> cands{0, 2};
  EXPECT_EQ(m.score_items(0, cands), (std::vector<double>{1.0, 0.0}));
  EXPECT_TRUE(m.score_items(0, std::vector<ItemId>{}).empty());
}

TEST(MatFact, UnseenItemGetsColdScore) {
  InteractionLog log;
  log.users.resize(1);
  log.users[0].events = {{0, 1, true}, {1, 2, false}};
  MatFactOptions o;
  o.epochs = 2;
  const auto m = train_matfact(log, 1, 3, o).model;
  EXPECT_EQ(m.score(0, 2), kColdStartScore);
  EXPECT_EQ(m.score(5, 0), kColdStartScore);
  EXPECT_EQ(m.dim(), 64u);
}

TEST(MatFact, SeparableCase) {
  InteractionLog log;
  log.users.resize(1);
  log.users[0].events = {{0, 1, true}, {1, 2, false}};
  MatFactOptions o;
  o.epochs = 200;
  const auto res = train_matfact(log, 1, 2, o);
  EXPECT_GT(res.model.score(0, 0), res.model.score(0, 1));
  EXPECT_LE(res.epoch_loss.back(), res.epoch_loss.front());
}

TEST(MatFact, RequiresBothLabels) {
  InteractionLog log;
  log.users.resize(1);
  log.users[0].events = {{0, 1, true}};
  EXPECT_THROW(train_matfact(log, 1, 1, {}), Error);
}

TEST(MatFact, DivergenceIsReported) {
  InteractionLog log;
  log.users.resize(2);
  log.users[0].events = {{0, 1, true}, {1, 2, false}};
  log.users[1].events = {{1, 1, true}, {0, 2, false}};
  MatFactOptions o;
  o.lr_start = o.lr_end = 1e6;
  o.l2 = 1.0;
  o.epochs = 50;
  EXPECT_THROW(train_matfact(log, 2, 2, o), Error);
}

class PlantedFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("scorer");
    gen_synthetic(testing::planted_config(), dir_->path());
    cat_ = new Catalog(load_catalog_dir(dir_->path()));
    split_ = new TemporalSplit(temporal_split(cat_->log));
  }
  static void TearDownTestSuite() {
    delete split_;
    delete cat_;
    delete dir_;
  }

  static inline testing::TempDir* dir_ = nullptr;
  static inline Catalog* cat_ = nullptr;
  static inline TemporalSplit* split_ = nullptr;
};

TEST_F(PlantedFixture, HeldOutAuc) {
  const auto res = train_matfact(split_->train, cat_->users.size(), cat_->items.size(), {.seed = 7});
  std::vector<double> scores;
  std::vector<int> labels;
  for (UserId u = 0; u < split_->test.users.size(); ++u) {
    for (const auto& e : split_->test.users[u].events) {
      scores.push_back(res.model.score(u, e.item));
      labels.push_back(e.positive ? 1 : 0);
    }
  }
  ASSERT_GT(scores.size(), 1000u);
  const double auc = testing::pairwise_auc(scores, labels);
  RecordProperty("auc", std::to_string(auc));
  EXPECT_GT(auc, 0.75);
  EXPECT_LE(res.epoch_loss.back(), res.epoch_loss.front());
}

TEST_F(PlantedFixture, SameSeedSameLoss) {
  MatFactOptions o;
  o.epochs = 3;
  o.seed = 11;
  const auto a = train_matfact(split_->train, cat_->users.size(), cat_->items.size(), o);
  const auto b = train_matfact(split_->train, cat_->users.size(), cat_->items.size(), o);
  EXPECT_NEAR(a.epoch_loss.back(), b.epoch_loss.back(), 1e-12);
  EXPECT_EQ(a.model.params().users, b.model.params().users);
}

TEST(MatFactGradient, MatchesCentralDifferences) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  MatFactParams p;
  p.dim = 6;
  p.users.resize(4 * p.dim);
  p.items.resize(5 * p.dim);
  for (auto& x : p.users) x = unif(gen);
  for (auto& x : p.items) x = unif(gen);
  std::vector<MatFactSample> samples;
  for (int s = 0; s < 30; ++s) {
    samples.push_back({static_cast<UserId>(gen() % 4), static_cast<ItemId>(gen() % 5),
                       static_cast<double>(gen() % 2)});
  }
  const double l2 = 0.05;
  const auto grad = matfact_gradient(p, samples, l2);
  const auto f = [&] { return matfact_objective(p, samples, l2); };
  for (int k = 0; k < 5; ++k) {
    const bool user_side = k % 2 == 0;
    auto& table = user_side ? p.users : p.items;
    const std::size_t idx = gen() % table.size();
    const double analytic = (user_side ? grad.users : grad.items)[idx];
    const double numeric = testing::central_difference(f, table[idx]);
    EXPECT_LT(testing::relative_error(analytic, numeric), 1e-4) << "param " << idx;
  }
}

TEST(ScorerRange, RandomModelsStayInUnitInterval) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> big(0.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    MatFactParams p;
    p.dim = 3;
    p.users.resize(3 * 3);
    p.items.resize(4 * 3);
    for (auto& x : p.users) x = big(gen);
    for (auto& x : p.items) x = big(gen);
    const auto m = ScorerModel::matfact(p, {1, 1, 0}, {1, 0, 1, 1});
    for (UserId u = 0; u < 4; ++u) {
      for (ItemId i = 0; i < 5; ++i) {
        const double s = m.score(u, i);
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 1.0);
      }
    }
  }
}

TEST(ScorerSnapshot, RoundTrip) {
  InteractionLog log;
  log.users.resize(2);
  log.users[0].events = {{0, 1, true}, {1, 2, false}};
  log.users[1].events = {{2, 1, true}, {0, 2, false}};
  MatFactOptions o;
  o.dim = 4;
  o.epochs = 5;
  const auto m = train_matfact(log, 3, 4, o).model;
  std::stringstream buf;
  write_scorer(buf, m);
  const auto back = read_scorer(buf);
  EXPECT_EQ(back.params().users, m.params().users);
  EXPECT_EQ(back.params().items, m.params().items);
  EXPECT_EQ(back.user_seen(), m.user_seen());
  EXPECT_EQ(back.item_seen(), m.item_seen());

  std::stringstream pbuf;
  write_scorer(pbuf, train_popularity(click_log({3, 1}), 2));
  EXPECT_EQ(read_scorer(pbuf).popularity_scores(), (std::vector<double>{1.0, 1.0 / 3.0}));
}

}  // namespace
}  // namespace magus
