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

// Learned edge weights from one layer of feature propagation.
//
// For a node v with R+ neighbours N+(v) and R- neighbours N-(v) (both taken
// as undirected), the propagated vector is
//
//   e'_v = relu( W1 e_v + mean_{a in N+} m(v, a) - mean_{b in N-} m(v, b) )
//   m(v, a) = W1 e_a + (e_v . e_a) W2 e_v
//
// Training fits W1, W2 and the query-node vectors so that
// logistic(e_user . e'_item) matches browsing labels; item vectors stay equal
// to the base recommender's. Edge weights are logistic(e'_a . e'_b).

#ifndef MAGUS_WEIGHT_TRAINER_HPP_
#define MAGUS_WEIGHT_TRAINER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "magus/catalog.hpp"
#include "magus/common.hpp"
#include "magus/graph.hpp"
#include "magus/scorer.hpp"

namespace magus {

struct NodeEmbeddingTable {
  std::size_t dim = 0;
  std::vector<double> w1;              // dim x dim, row-major
  std::vector<double> w2;              // dim x dim, row-major
  std::vector<double> nodes;           // node_count x dim
  std::vector<std::uint8_t> trainable; // per node

  std::size_t node_count() const { return dim ? nodes.size() / dim : 0; }
  std::span<double> node(NodeId v) { return {nodes.data() + std::size_t{v} * dim, dim}; }
  std::span<const double> node(NodeId v) const { return {nodes.data() + std::size_t{v} * dim, dim}; }
};

/// Item nodes copy the scorer's vector of their first item; every other
/// vector and both transforms are drawn from U(-a, a) with a = sqrt(6 / 2d).
inline NodeEmbeddingTable init_embedding_table(const RelationalGraph& g, const ScorerModel& scorer,
                                               std::uint64_t seed) {
  if (!scorer.has_embeddings()) throw Error("weight training needs a scorer with embeddings");
  const std::size_t d = scorer.dim();
  NodeEmbeddingTable t;
  t.dim = d;
  t.w1.resize(d * d);
  t.w2.resize(d * d);
  t.nodes.resize(g.size() * d);
  t.trainable.assign(g.size(), 1);
  Rng rng(seed);
  const double a = std::sqrt(6.0 / (2.0 * static_cast<double>(d)));
  for (auto& x : t.w1) x = rng.uniform(-a, a);
  for (auto& x : t.w2) x = rng.uniform(-a, a);
  for (NodeId v = 0; v < g.size(); ++v) {
    auto row = t.node(v);
    const auto& node = g.node(v);
    if (node.is_item() && node.items.front() < scorer.item_count()) {
      const auto src = scorer.params().item(node.items.front());
      std::copy(src.begin(), src.end(), row.begin());
      t.trainable[v] = 0;
    } else {
      for (auto& x : row) x = rng.uniform(-a, a);
    }
  }
  return t;
}

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// out = M x
inline void matvec(std::span<const double> m, std::span<const double> x, std::span<double> out) {
  const std::size_t d = x.size();
  for (std::size_t r = 0; r < d; ++r) {
    double s = 0.0;
    const double* row = m.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) s += row[c] * x[c];
    out[r] = s;
  }
}

// out += M^T x
inline void matvec_t_add(std::span<const double> m, std::span<const double> x, double scale, std::span<double> out) {
  const std::size_t d = x.size();
  for (std::size_t r = 0; r < d; ++r) {
    const double xr = scale * x[r];
    if (xr == 0.0) continue;
    const double* row = m.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) out[c] += row[c] * xr;
  }
}

// Signed mean coefficients: +1/|N+| per R+ neighbour, -1/|N-| per R- neighbour.
inline std::vector<std::pair<NodeId, double>> neighbour_coefficients(const RelationalGraph& g, NodeId v) {
  std::vector<std::pair<NodeId, double>> out;
  const std::size_t n_plus = g.parts(v).size() + g.wholes(v).size();
  const std::size_t n_minus = g.inhibitors(v).size();
  for (const auto& nb : g.parts(v)) out.emplace_back(nb.node, 1.0 / static_cast<double>(n_plus));
  for (const auto& nb : g.wholes(v)) out.emplace_back(nb.node, 1.0 / static_cast<double>(n_plus));
  for (const auto& nb : g.inhibitors(v)) out.emplace_back(nb.node, -1.0 / static_cast<double>(n_minus));
  return out;
}

struct NodeForward {
  std::vector<double> x;    // e_v + sum c_a e_a
  double mix = 0.0;         // sum c_a (e_v . e_a)
  std::vector<double> z;    // W2 e_v
  std::vector<double> pre;  // W1 x + mix z
  std::vector<double> out;  // relu(pre)
};

inline NodeForward forward_node(const RelationalGraph& g, const NodeEmbeddingTable& t, NodeId v) {
  const std::size_t d = t.dim;
  NodeForward f;
  f.x.assign(t.node(v).begin(), t.node(v).end());
  const auto ev = t.node(v);
  for (auto [a, c] : neighbour_coefficients(g, v)) {
    const auto ea = t.node(a);
    for (std::size_t k = 0; k < d; ++k) f.x[k] += c * ea[k];
    f.mix += c * dot(ev, ea);
  }
  f.z.resize(d);
  matvec(t.w2, ev, f.z);
  f.pre.resize(d);
  matvec(t.w1, f.x, f.pre);
  for (std::size_t k = 0; k < d; ++k) f.pre[k] += f.mix * f.z[k];
  f.out.resize(d);
  for (std::size_t k = 0; k < d; ++k) f.out[k] = std::max(0.0, f.pre[k]);
  return f;
}

}  // namespace detail

/// One propagation layer over every node. Returns node_count x dim.
inline std::vector<double> propagate_features(const RelationalGraph& g, const NodeEmbeddingTable& t) {
  std::vector<double> out(t.nodes.size());
  for (NodeId v = 0; v < g.size(); ++v) {
    auto f = detail::forward_node(g, t, v);
    std::copy(f.out.begin(), f.out.end(), out.begin() + static_cast<std::ptrdiff_t>(std::size_t{v} * t.dim));
  }
  return out;
}

struct FeatureSample {
  UserId user;
  NodeId node;
  double label;
};

inline std::vector<FeatureSample> feature_samples(const RelationalGraph& g, const InteractionLog& log) {
  std::vector<FeatureSample> out;
  for (UserId u = 0; u < log.users.size(); ++u) {
    for (const auto& e : log.users[u].events) {
      const NodeId v = g.item_node(e.item);
      if (v != kInvalidId) out.push_back({u, v, e.positive ? 1.0 : 0.0});
    }
  }
  return out;
}

inline double table_penalty(const NodeEmbeddingTable& t) {
  double sq = 0.0;
  for (double x : t.w1) sq += x * x;
  for (double x : t.w2) sq += x * x;
  for (NodeId v = 0; v < t.node_count(); ++v) {
    if (!t.trainable[v]) continue;
    for (double x : t.node(v)) sq += x * x;
  }
  return sq;
}

/// Mean log-loss of logistic(e_user . e'_node) plus (l2 / 2) * squared norm of
/// the trainable parameters.
inline double feature_objective(const RelationalGraph& g, const NodeEmbeddingTable& t, const MatFactParams& users,
                                std::span<const FeatureSample> samples, double l2) {
  std::vector<std::vector<double>> cache(g.size());
  double loss = 0.0;
  for (const auto& s : samples) {
    auto& out = cache[s.node];
    if (out.empty()) out = detail::forward_node(g, t, s.node).out;
    loss += log_loss_from_logit(detail::dot(users.user(s.user), out), s.label);
  }
  if (!samples.empty()) loss /= static_cast<double>(samples.size());
  return loss + 0.5 * l2 * table_penalty(t);
}

// Gradient of feature_objective with the same layout as the table; rows of
// frozen nodes stay zero.
inline NodeEmbeddingTable feature_gradient(const RelationalGraph& g, const NodeEmbeddingTable& t,
                                           const MatFactParams& users, std::span<const FeatureSample> samples,
                                           double l2) {
  const std::size_t d = t.dim;
  NodeEmbeddingTable grad;
  grad.dim = d;
  grad.trainable = t.trainable;
  grad.w1.resize(d * d);
  grad.w2.resize(d * d);
  grad.nodes.assign(t.nodes.size(), 0.0);
  for (std::size_t k = 0; k < d * d; ++k) {
    grad.w1[k] = l2 * t.w1[k];
    grad.w2[k] = l2 * t.w2[k];
  }
  for (NodeId v = 0; v < t.node_count(); ++v) {
    if (!t.trainable[v]) continue;
    auto gv = grad.node(v);
    const auto ev = t.node(v);
    for (std::size_t k = 0; k < d; ++k) gv[k] = l2 * ev[k];
  }

  // d loss / d e'_v, accumulated per node before back-propagating.
  std::vector<std::vector<double>> upstream(g.size());
  std::vector<detail::NodeForward> fwd(g.size());
  const double inv_n = samples.empty() ? 0.0 : 1.0 / static_cast<double>(samples.size());
  for (const auto& s : samples) {
    if (fwd[s.node].out.empty()) fwd[s.node] = detail::forward_node(g, t, s.node);
    auto& up = upstream[s.node];
    if (up.empty()) up.assign(d, 0.0);
    const auto eu = users.user(s.user);
    const double err = (logistic(detail::dot(eu, fwd[s.node].out)) - s.label) * inv_n;
    for (std::size_t k = 0; k < d; ++k) up[k] += err * eu[k];
  }

  std::vector<double> delta(d);
  std::vector<double> w1t_delta(d);
  for (NodeId v = 0; v < g.size(); ++v) {
    if (upstream[v].empty()) continue;
    const auto& f = fwd[v];
    for (std::size_t k = 0; k < d; ++k) delta[k] = f.pre[k] > 0.0 ? upstream[v][k] : 0.0;
    const auto ev = t.node(v);
    for (std::size_t r = 0; r < d; ++r) {
      if (delta[r] == 0.0) continue;
      double* g1 = grad.w1.data() + r * d;
      double* g2 = grad.w2.data() + r * d;
      for (std::size_t c = 0; c < d; ++c) {
        g1[c] += delta[r] * f.x[c];
        g2[c] += f.mix * delta[r] * ev[c];
      }
    }
    std::fill(w1t_delta.begin(), w1t_delta.end(), 0.0);
    detail::matvec_t_add(t.w1, delta, 1.0, w1t_delta);
    const double delta_z = detail::dot(delta, f.z);
    const auto coeffs = detail::neighbour_coefficients(g, v);
    for (auto [a, c] : coeffs) {
      if (!t.trainable[a]) continue;
      auto ga = grad.node(a);
      for (std::size_t k = 0; k < d; ++k) ga[k] += c * (w1t_delta[k] + delta_z * ev[k]);
    }
    if (t.trainable[v]) {
      auto gv = grad.node(v);
      for (std::size_t k = 0; k < d; ++k) gv[k] += w1t_delta[k];
      detail::matvec_t_add(t.w2, delta, f.mix, gv);
      for (auto [a, c] : coeffs) {
        const auto ea = t.node(a);
        for (std::size_t k = 0; k < d; ++k) gv[k] += c * delta_z * ea[k];
      }
    }
  }
  return grad;
}

/// logistic(e'_a . e'_b) for every stored edge, in edge order. Absent pairs
/// have no entry and keep their implicit weight of 0.
inline std::vector<double> edge_weights_from(const RelationalGraph& g, const NodeEmbeddingTable& t) {
  const auto out = propagate_features(g, t);
  std::vector<double> w;
  w.reserve(g.edges().size());
  for (const auto& e : g.edges()) {
    std::span<const double> ea(out.data() + std::size_t{e.a} * t.dim, t.dim);
    std::span<const double> eb(out.data() + std::size_t{e.b} * t.dim, t.dim);
    w.push_back(clamp01(logistic(detail::dot(ea, eb))));
  }
  return w;
}

struct WeightTrainerOptions {
  std::size_t epochs = 100;
  double lr_start = 1.0;
  double lr_end = 0.1;
  double l2 = 4e-4;
  std::uint64_t seed = 0;
};

struct WeightTrainingResult {
  std::vector<double> weights;     // per edge
  std::vector<double> epoch_loss;  // [0] is the loss before training
  NodeEmbeddingTable table;
};

/// Full-batch gradient descent on the feature-propagation log-loss, then
/// edge weights from the trained vectors. Throws on a non-finite loss.
inline WeightTrainingResult train_weights(const RelationalGraph& g, const ScorerModel& scorer,
                                          const InteractionLog& train, const WeightTrainerOptions& opts) {
  WeightTrainingResult res;
  res.table = init_embedding_table(g, scorer, opts.seed);
  const auto samples = feature_samples(g, train);
  const auto& users = scorer.params();
  res.epoch_loss.push_back(feature_objective(g, res.table, users, samples, opts.l2));
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    const double lr = scheduled_lr(opts.lr_start, opts.lr_end, epoch, opts.epochs);
    const auto grad = feature_gradient(g, res.table, users, samples, opts.l2);
    for (std::size_t k = 0; k < res.table.w1.size(); ++k) {
      res.table.w1[k] -= lr * grad.w1[k];
      res.table.w2[k] -= lr * grad.w2[k];
    }
    for (NodeId v = 0; v < res.table.node_count(); ++v) {
      if (!res.table.trainable[v]) continue;
      auto row = res.table.node(v);
      const auto grow = grad.node(v);
      for (std::size_t k = 0; k < res.table.dim; ++k) row[k] -= lr * grow[k];
    }
    const double loss = feature_objective(g, res.table, users, samples, opts.l2);
    if (!std::isfinite(loss)) {
      throw Error("weight training diverged at epoch " + std::to_string(epoch + 1) + "; lower lr_start");
    }
    res.epoch_loss.push_back(loss);
  }
  res.weights = edge_weights_from(g, res.table);
  return res;
}

}  // namespace magus

#endif  // MAGUS_WEIGHT_TRAINER_HPP_
