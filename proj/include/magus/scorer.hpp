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

// Base recommenders used to seed node scores: a user-independent popularity
// ranker and a logistic matrix factorization over (user, item) ids.

#ifndef MAGUS_SCORER_HPP_
#define MAGUS_SCORER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "magus/catalog.hpp"
#include "magus/common.hpp"

namespace magus {

enum class ScorerKind : std::uint32_t { popularity = 0, matfact = 1 };

// Score given to items or users the factorization never saw.
inline constexpr double kColdStartScore = 0.5;

// Row-major embedding tables.
struct MatFactParams {
  std::size_t dim = 0;
  std::vector<double> users;  // user_count * dim
  std::vector<double> items;  // item_count * dim

  std::size_t user_count() const { return dim ? users.size() / dim : 0; }
  std::size_t item_count() const { return dim ? items.size() / dim : 0; }
  std::span<double> user(UserId u) { return {users.data() + u * dim, dim}; }
  std::span<double> item(ItemId i) { return {items.data() + i * dim, dim}; }
  std::span<const double> user(UserId u) const { return {users.data() + u * dim, dim}; }
  std::span<const double> item(ItemId i) const { return {items.data() + i * dim, dim}; }

  double logit(UserId u, ItemId i) const {
    const auto eu = user(u);
    const auto ev = item(i);
    return std::inner_product(eu.begin(), eu.end(), ev.begin(), 0.0);
  }
};

class ScorerModel {
 public:
  static ScorerModel popularity(std::vector<double> item_scores) {
    ScorerModel m;
    m.kind_ = ScorerKind::popularity;
    m.popularity_ = std::move(item_scores);
    return m;
  }

  static ScorerModel matfact(MatFactParams params, std::vector<std::uint8_t> user_seen,
                             std::vector<std::uint8_t> item_seen) {
    if (user_seen.size() != params.user_count() || item_seen.size() != params.item_count()) {
      throw Error("matfact seen-flags do not match embedding tables");
    }
    ScorerModel m;
    m.kind_ = ScorerKind::matfact;
    m.params_ = std::move(params);
    m.user_seen_ = std::move(user_seen);
    m.item_seen_ = std::move(item_seen);
    return m;
  }

  ScorerKind kind() const { return kind_; }
  bool has_embeddings() const { return kind_ == ScorerKind::matfact; }
  std::size_t dim() const { return params_.dim; }
  std::size_t item_count() const {
    return kind_ == ScorerKind::popularity ? popularity_.size() : params_.item_count();
  }
  std::size_t user_count() const { return params_.user_count(); }
  const MatFactParams& params() const { return params_; }
  const std::vector<double>& popularity_scores() const { return popularity_; }
  bool user_known(UserId u) const { return u < user_seen_.size() && user_seen_[u]; }
  bool item_known(ItemId i) const {
    if (kind_ == ScorerKind::popularity) return i < popularity_.size();
    return i < item_seen_.size() && item_seen_[i];
  }
  const std::vector<std::uint8_t>& user_seen() const { return user_seen_; }
  const std::vector<std::uint8_t>& item_seen() const { return item_seen_; }

  double score(UserId user, ItemId item) const {
    if (kind_ == ScorerKind::popularity) {
      return item < popularity_.size() ? popularity_[item] : 0.0;
    }
    if (!user_known(user) || !item_known(item)) return kColdStartScore;
    return logistic(params_.logit(user, item));
  }

  std::vector<double> score_items(UserId user, std::span<const ItemId> candidates) const {
    std::vector<double> out;
    out.reserve(candidates.size());
    for (ItemId i : candidates) out.push_back(score(user, i));
    return out;
  }

 private:
  ScorerKind kind_ = ScorerKind::popularity;
  std::vector<double> popularity_;
  MatFactParams params_;
  std::vector<std::uint8_t> user_seen_;
  std::vector<std::uint8_t> item_seen_;
};

/// clicks(v) / max clicks over the training positives. All zero when nobody clicked.
inline ScorerModel train_popularity(const InteractionLog& train, std::size_t item_count) {
  std::vector<double> clicks(item_count, 0.0);
  for (const auto& u : train.users) {
    for (const auto& e : u.events) {
      if (e.positive && e.item < item_count) clicks[e.item] += 1.0;
    }
  }
  const double max_clicks = clicks.empty() ? 0.0 : *std::max_element(clicks.begin(), clicks.end());
  if (max_clicks > 0) {
    for (auto& c : clicks) c /= max_clicks;
  }
  return ScorerModel::popularity(std::move(clicks));
}

struct MatFactSample {
  UserId user;
  ItemId item;
  double label;
};

inline std::vector<MatFactSample> matfact_samples(const InteractionLog& log) {
  std::vector<MatFactSample> out;
  for (UserId u = 0; u < log.users.size(); ++u) {
    for (const auto& e : log.users[u].events) out.push_back({u, e.item, e.positive ? 1.0 : 0.0});
  }
  return out;
}

/// Mean over samples of log-loss + (l2 / 2) * (|e_u|^2 + |e_v|^2), so rows are
/// regularized in proportion to how often they are seen.
inline double matfact_objective(const MatFactParams& p, std::span<const MatFactSample> samples,
                                double l2) {
  double loss = 0.0;
  for (const auto& s : samples) {
    const auto eu = p.user(s.user);
    const auto ev = p.item(s.item);
    const double sq = std::inner_product(eu.begin(), eu.end(), eu.begin(), 0.0) +
                      std::inner_product(ev.begin(), ev.end(), ev.begin(), 0.0);
    loss += log_loss_from_logit(p.logit(s.user, s.item), s.label) + 0.5 * l2 * sq;
  }
  return samples.empty() ? 0.0 : loss / static_cast<double>(samples.size());
}

// Full-batch gradient of matfact_objective, same layout as the parameters.
inline MatFactParams matfact_gradient(const MatFactParams& p, std::span<const MatFactSample> samples,
                                      double l2) {
  MatFactParams g;
  g.dim = p.dim;
  g.users.assign(p.users.size(), 0.0);
  g.items.assign(p.items.size(), 0.0);
  const double inv_n = samples.empty() ? 0.0 : 1.0 / static_cast<double>(samples.size());
  for (const auto& s : samples) {
    const double err = logistic(p.logit(s.user, s.item)) - s.label;
    auto gu = g.user(s.user);
    auto gv = g.item(s.item);
    const auto eu = p.user(s.user);
    const auto ev = p.item(s.item);
    for (std::size_t k = 0; k < p.dim; ++k) {
      gu[k] += inv_n * (err * ev[k] + l2 * eu[k]);
      gv[k] += inv_n * (err * eu[k] + l2 * ev[k]);
    }
  }
  return g;
}

struct MatFactOptions {
  std::size_t dim = 64;
  std::size_t epochs = 30;
  // Geometric decay from lr_start to lr_end over the epochs.
  double lr_start = 5e-2;
  double lr_end = 5e-3;
  double l2 = 2e-2;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
};

struct MatFactResult {
  ScorerModel model;
  std::vector<double> epoch_loss;  // objective after each epoch
};

inline double scheduled_lr(double start, double end, std::size_t epoch, std::size_t epochs) {
  if (epochs <= 1) return start;
  const double t = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
  return start * std::pow(end / start, t);
}

/// Stochastic gradient descent on the log-loss (label 1 for positives, 0 for
/// negatives). Throws if the objective stops being finite.
inline MatFactResult train_matfact(const InteractionLog& train, std::size_t user_count,
                                   std::size_t item_count, const MatFactOptions& opts) {
  auto samples = matfact_samples(train);
  const bool any_pos = std::any_of(samples.begin(), samples.end(), [](auto& s) { return s.label > 0.5; });
  const bool any_neg = std::any_of(samples.begin(), samples.end(), [](auto& s) { return s.label < 0.5; });
  if (!any_pos || !any_neg) throw Error("matfact needs at least one positive and one negative");

  Rng rng(opts.seed);
  MatFactParams p;
  p.dim = opts.dim;
  p.users.resize(user_count * opts.dim);
  p.items.resize(item_count * opts.dim);
  for (auto& x : p.users) x = rng.uniform(-opts.init_scale, opts.init_scale);
  for (auto& x : p.items) x = rng.uniform(-opts.init_scale, opts.init_scale);

  std::vector<std::uint8_t> user_seen(user_count, 0);
  std::vector<std::uint8_t> item_seen(item_count, 0);
  for (const auto& s : samples) {
    user_seen[s.user] = 1;
    item_seen[s.item] = 1;
  }

  MatFactResult result;
  std::vector<double> eu_old(opts.dim);
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    const double lr = scheduled_lr(opts.lr_start, opts.lr_end, epoch, opts.epochs);
    rng.shuffle(samples);
    for (const auto& s : samples) {
      auto eu = p.user(s.user);
      auto ev = p.item(s.item);
      const double err = logistic(p.logit(s.user, s.item)) - s.label;
      std::copy(eu.begin(), eu.end(), eu_old.begin());
      for (std::size_t k = 0; k < opts.dim; ++k) {
        eu[k] -= lr * (err * ev[k] + opts.l2 * eu[k]);
        ev[k] -= lr * (err * eu_old[k] + opts.l2 * ev[k]);
      }
    }
    const double loss = matfact_objective(p, samples, opts.l2);
    if (!std::isfinite(loss)) {
      throw Error("matfact diverged at epoch " + std::to_string(epoch + 1) + " (lr " +
                  std::to_string(lr) + "); lower lr_start");
    }
    result.epoch_loss.push_back(loss);
  }
  result.model = ScorerModel::matfact(std::move(p), std::move(user_seen), std::move(item_seen));
  return result;
}

// Scorer snapshot, little-endian:
//   "MGSC" u32 version, u32 kind, u32 dim, u32 user_count, u32 item_count
//   popularity: f64 score[item_count]
//   matfact:    u8 user_seen[user_count], u8 item_seen[item_count],
//               f64 users[user_count * dim], f64 items[item_count * dim]
inline constexpr std::uint32_t kScorerSnapshotVersion = 1;

inline void write_scorer(std::ostream& out, const ScorerModel& m) {
  using binio::write_pod;
  binio::write_magic(out, "MGSC", kScorerSnapshotVersion);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.kind()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.user_count()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.item_count()));
  if (m.kind() == ScorerKind::popularity) {
    for (double s : m.popularity_scores()) write_pod<double>(out, s);
    return;
  }
  for (auto f : m.user_seen()) write_pod<std::uint8_t>(out, f);
  for (auto f : m.item_seen()) write_pod<std::uint8_t>(out, f);
  for (double x : m.params().users) write_pod<double>(out, x);
  for (double x : m.params().items) write_pod<double>(out, x);
}

inline ScorerModel read_scorer(std::istream& in) {
  using binio::read_pod;
  binio::expect_magic(in, "MGSC", kScorerSnapshotVersion);
  const auto kind = read_pod<std::uint32_t>(in);
  const auto dim = read_pod<std::uint32_t>(in);
  const auto users = read_pod<std::uint32_t>(in);
  const auto items = read_pod<std::uint32_t>(in);
  if (kind == static_cast<std::uint32_t>(ScorerKind::popularity)) {
    std::vector<double> scores(items);
    for (auto& s : scores) s = read_pod<double>(in);
    return ScorerModel::popularity(std::move(scores));
  }
  if (kind != static_cast<std::uint32_t>(ScorerKind::matfact)) throw Error("unknown scorer kind");
  std::vector<std::uint8_t> user_seen(users);
  std::vector<std::uint8_t> item_seen(items);
  for (auto& f : user_seen) f = read_pod<std::uint8_t>(in);
  for (auto& f : item_seen) f = read_pod<std::uint8_t>(in);
  MatFactParams p;
  p.dim = dim;
  p.users.resize(std::size_t{users} * dim);
  p.items.resize(std::size_t{items} * dim);
  for (auto& x : p.users) x = read_pod<double>(in);
  for (auto& x : p.items) x = read_pod<double>(in);
  return ScorerModel::matfact(std::move(p), std::move(user_seen), std::move(item_seen));
}

inline void save_scorer(const std::filesystem::path& path, const ScorerModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_scorer(out, m);
}

inline ScorerModel load_scorer(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_scorer(in);
}

}  // namespace magus

#endif  // MAGUS_SCORER_HPP_
