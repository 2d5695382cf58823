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

// Fixtures and independent reference implementations shared by the tests.

#ifndef MAGUS_TESTS_TEST_SUPPORT_HPP_
#define MAGUS_TESTS_TEST_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "magus/catalog.hpp"
#include "magus/graph.hpp"
#include "magus/propagation.hpp"
#include "magus/scorer.hpp"
#include "magus/synthetic.hpp"

namespace magus::testing {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("magus-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << '\n';
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Catalog held in memory, built through the public mutators.
inline Catalog make_catalog(const std::vector<std::pair<std::string, std::vector<std::string>>>& items) {
  Catalog cat;
  for (const auto& [label, words] : items) {
    WordSet ws;
    for (const auto& w : words) ws.push_back(cat.intern_word(w));
    cat.add_item(label, ws);
  }
  return cat;
}

inline WordSet words_of(const Catalog& cat, const std::vector<std::string>& words) {
  WordSet ws;
  for (const auto& w : words) ws.push_back(*cat.find_word(w));
  normalize_word_set(ws);
  return ws;
}

// Two-item catalog: I1 = {milk, whole, brandA}, I2 = {milk, skim}.
inline Catalog dairy_catalog() {
  return make_catalog({{"I1", {"milk", "whole", "brandA"}}, {"I2", {"milk", "skim"}}});
}

// Small random catalog whose graph stays within `max_nodes`.
struct RandomInstance {
  Catalog catalog;
  RelationalGraph graph;
  ScorerModel scorer;
  SessionSpec session;
};

inline RandomInstance random_instance(std::mt19937_64& gen, std::size_t max_nodes = 50) {
  std::uniform_int_distribution<int> n_words_d(3, 7), n_items_d(2, 7), wpi_d(1, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    Catalog cat;
    const int n_words = n_words_d(gen);
    for (int w = 0; w < n_words; ++w) cat.intern_word("w" + std::to_string(w));
    const int n_items = n_items_d(gen);
    for (int i = 0; i < n_items; ++i) {
      const int k = std::min(wpi_d(gen), n_words);
      std::vector<WordId> all(static_cast<std::size_t>(n_words));
      for (int w = 0; w < n_words; ++w) all[static_cast<std::size_t>(w)] = static_cast<WordId>(w);
      std::shuffle(all.begin(), all.end(), gen);
      WordSet ws(all.begin(), all.begin() + k);
      cat.add_item("i" + std::to_string(i), ws);
    }
    cat.intern_user("u0");
    GraphOptions opts;
    opts.max_combo_size = 1 + gen() % 3;
    opts.rminus_degree_cap = 2 + gen() % 6;
    auto g = build_graph(cat, opts);
    if (g.size() > max_nodes) continue;
    std::vector<double> w(g.edges().size());
    for (auto& x : w) x = unit(gen);
    g = g.with_weights(w);

    std::vector<double> pop(cat.items.size());
    for (auto& x : pop) x = unit(gen);
    SessionSpec s;
    s.user = 0;
    for (ItemId i = 0; i < cat.items.size(); ++i) {
      if (unit(gen) < 0.7 || s.candidates.empty()) s.candidates.push_back(i);
    }
    s.targets = {s.candidates[gen() % s.candidates.size()]};
    if (unit(gen) < 0.5) {
      for (NodeId v = 0; v < g.size(); ++v) {
        if (g.node(v).is_query() && unit(gen) < 0.2) s.queries.push_back(g.node(v).words);
      }
    }
    return {std::move(cat), std::move(g), ScorerModel::popularity(pop), std::move(s)};
  }
}

// Dense n x n matrices as nested vectors.
using Matrix = std::vector<std::vector<double>>;
using Vector = std::vector<double>;

inline Vector matvec(const Matrix& m, const Vector& x) {
  Vector out(x.size(), 0.0);
  for (std::size_t r = 0; r < m.size(); ++r) {
    for (std::size_t c = 0; c < x.size(); ++c) out[r] += m[r][c] * x[c];
  }
  return out;
}

inline Vector masked(const Vector& x, const std::vector<bool>& mask) {
  Vector out(x.size(), 0.0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (mask[k]) out[k] = x[k];
  }
  return out;
}

// Signed adjacency in matrix form.
//   down[v][u] = w  when u is an R+ whole of v (init flows whole -> part)
//   up[v][u]   = w  when u is an R+ part of v  (feedback flows part -> whole)
//   minus[v][u] = w for R- pairs, symmetric
// The *_link matrices hold 1 wherever an edge exists, whatever its weight.
struct DenseGraph {
  std::size_t n = 0;
  Matrix down, up, minus;
  Matrix up_link, minus_link;
  std::vector<bool> item;
  std::vector<std::size_t> size;
};

inline DenseGraph dense_from(const RelationalGraph& g) {
  DenseGraph d;
  d.n = g.size();
  d.down.assign(d.n, Vector(d.n, 0.0));
  d.up.assign(d.n, Vector(d.n, 0.0));
  d.minus.assign(d.n, Vector(d.n, 0.0));
  d.up_link.assign(d.n, Vector(d.n, 0.0));
  d.minus_link.assign(d.n, Vector(d.n, 0.0));
  for (const auto& e : g.edges()) {
    if (e.rel == Relation::plus) {
      d.down[e.a][e.b] = e.weight;
      d.up[e.b][e.a] = e.weight;
      d.up_link[e.b][e.a] = 1.0;
    } else {
      d.minus[e.a][e.b] = e.weight;
      d.minus[e.b][e.a] = e.weight;
      d.minus_link[e.a][e.b] = 1.0;
      d.minus_link[e.b][e.a] = 1.0;
    }
  }
  for (NodeId v = 0; v < d.n; ++v) {
    d.item.push_back(g.node(v).is_item());
    d.size.push_back(g.node(v).words.size());
  }
  return d;
}

// Initial scores: item seeds, then one level (word-set size) at a time
// y <- y + D_s (Down y) from the largest size down, then y <- y - D_q (Minus y)
// with D_q selecting query nodes, then the searched-query floor.
inline Vector oracle_init(const DenseGraph& d, const Vector& item_seed, const std::vector<bool>& searched,
                          QueryBoost boost) {
  Vector y = item_seed;
  std::size_t max_size = 0;
  for (auto s : d.size) max_size = std::max(max_size, s);
  for (std::size_t s = max_size; s >= 1; --s) {
    std::vector<bool> level(d.n);
    for (std::size_t v = 0; v < d.n; ++v) level[v] = !d.item[v] && d.size[v] == s;
    const Vector flow = masked(matvec(d.down, y), level);
    for (std::size_t v = 0; v < d.n; ++v) y[v] += flow[v];
  }
  std::vector<bool> query(d.n);
  for (std::size_t v = 0; v < d.n; ++v) query[v] = !d.item[v];
  const Vector inh = masked(matvec(d.minus, y), query);
  for (std::size_t v = 0; v < d.n; ++v) y[v] -= inh[v];

  bool any = false;
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t v = 0; v < d.n; ++v) {
    any = any || searched[v];
    if (searched[v] || d.item[v]) continue;
    lo = std::min(lo, y[v]);
    hi = std::max(hi, y[v]);
  }
  if (any && std::isfinite(lo)) {
    const double floor = boost == QueryBoost::max_floor ? std::min(hi, 1.0) : std::min(lo, 1.0);
    for (std::size_t v = 0; v < d.n; ++v) {
      if (searched[v]) y[v] = std::max(y[v], floor);
    }
  }
  return y;
}

// One feedback round. q holds the propagated quantity on the source nodes
// (zero elsewhere); y already carries the yes/no assignments.
//   gain level by level: q_{d+1} = R_{d+1} (Up q_d), where R_{d+1} masks
//   active nodes first reached at that level
//   inhibition: h = A_ns (Minus q_0), A_ns = active non-source nodes
//   y_v <- clamp(y_v + sum_d q_d[v] - h[v]) for every reached or inhibited v
inline Vector oracle_feedback(const DenseGraph& d, Vector y, const Vector& q0, const std::vector<bool>& source,
                              const std::vector<bool>& active) {
  std::vector<bool> reached = source;
  std::vector<bool> frontier = source;
  Vector gain(d.n, 0.0);
  Vector q = q0;
  for (;;) {
    Vector front(d.n, 0.0);
    for (std::size_t v = 0; v < d.n; ++v) front[v] = frontier[v] ? 1.0 : 0.0;
    const Vector hits = matvec(d.up_link, front);
    std::vector<bool> next(d.n, false);
    bool any = false;
    for (std::size_t v = 0; v < d.n; ++v) {
      next[v] = hits[v] > 0.0 && !reached[v] && active[v];
      any = any || next[v];
    }
    if (!any) break;
    const Vector flow = masked(matvec(d.up, masked(q, frontier)), next);
    for (std::size_t v = 0; v < d.n; ++v) {
      if (next[v]) reached[v] = true;
      gain[v] += flow[v];
    }
    q = flow;
    frontier = next;
  }
  std::vector<bool> non_source(d.n);
  for (std::size_t v = 0; v < d.n; ++v) non_source[v] = active[v] && !source[v];
  const Vector h = masked(matvec(d.minus, q0), non_source);
  Vector src(d.n, 0.0);
  for (std::size_t v = 0; v < d.n; ++v) src[v] = source[v] ? 1.0 : 0.0;
  const Vector inhibited = matvec(d.minus_link, src);
  for (std::size_t v = 0; v < d.n; ++v) {
    if (!non_source[v]) continue;
    if (reached[v] || inhibited[v] > 0.0) y[v] = std::clamp(y[v] + gain[v] - h[v], 0.0, 1.0);
  }
  return y;
}

// Largest absolute gap between the library and the dense oracle over one
// init plus up to `rounds` random feedback rounds on `inst`.
inline double oracle_discrepancy(const RandomInstance& inst, std::mt19937_64& gen, std::size_t rounds = 3) {
  const auto& g = inst.graph;
  const auto d = dense_from(g);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const QueryBoost boost = unit(gen) < 0.5 ? QueryBoost::max_floor : QueryBoost::literal_min;

  Vector seed(d.n, 0.0);
  std::vector<bool> active(d.n);
  for (std::size_t v = 0; v < d.n; ++v) active[v] = !d.item[v];
  for (ItemId i : inst.session.candidates) {
    const NodeId v = g.item_node(i);
    seed[v] = std::max(seed[v], inst.scorer.score(inst.session.user, i));
    active[v] = true;
  }
  std::vector<bool> searched(d.n, false);
  for (const auto& q : inst.session.queries) {
    for (NodeId v = 0; v < d.n; ++v) {
      if (!d.item[v] && g.node(v).words == q) searched[v] = true;
    }
  }
  const Vector expect = oracle_init(d, seed, searched, boost);
  auto st = init_scores(g, inst.scorer, inst.session, boost);
  double worst = 0.0;
  for (std::size_t v = 0; v < d.n; ++v) worst = std::max(worst, std::abs(expect[v] - st.scores[v]));

  PropagationConfig cfg;
  cfg.k_max = rounds + 1;
  cfg.mode = unit(gen) < 0.5 ? FeedbackMode::literal : FeedbackMode::delta;
  for (std::size_t r = 0; r < rounds && st.outcome == Outcome::pending; ++r) {
    normalize(st);
    const auto list = select_topn(st, g, 1 + gen() % 4);
    if (list.empty()) break;
    std::vector<Feedback> fb;
    bool yes_used = false;
    for (const auto& rec : list) {
      const double roll = unit(gen);
      Response resp = roll < 0.3 ? Response::yes : (roll < 0.8 ? Response::no : Response::not_care);
      if (resp == Response::yes && yes_used) resp = Response::no;
      yes_used = yes_used || resp == Response::yes;
      fb.push_back({rec.node, resp});
    }
    Vector y = st.scores;
    Vector q0(d.n, 0.0);
    std::vector<bool> source(d.n, false);
    for (const auto& f : fb) {
      if (f.response == Response::not_care) continue;
      const double after = f.response == Response::yes ? 1.0 : 0.0;
      q0[f.node] = cfg.mode == FeedbackMode::literal ? after : after - y[f.node];
      y[f.node] = after;
      source[f.node] = true;
    }
    std::vector<bool> act(d.n);
    for (std::size_t v = 0; v < d.n; ++v) act[v] = st.active[v] != 0;
    const Vector want = oracle_feedback(d, y, q0, source, act);
    apply_feedback(st, g, fb, cfg);
    for (std::size_t v = 0; v < d.n; ++v) worst = std::max(worst, std::abs(want[v] - st.scores[v]));
  }
  return worst;
}

// Planted dataset dense enough for the factorization to generalize.
inline SyntheticConfig planted_config(std::uint32_t users = 300) {
  SyntheticConfig cfg;
  cfg.users = users;
  cfg.items = 100;
  cfg.events_per_user = 150;
  cfg.seed = 7;
  return cfg;
}

// Mann-Whitney AUC by brute force over all positive/negative pairs.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return pairs ? wins / static_cast<double>(pairs) : 0.5;
}

// Central difference of f around x[k].
inline double central_difference(const std::function<double()>& f, double& x, double h = 1e-5) {
  const double saved = x;
  x = saved + h;
  const double plus = f();
  x = saved - h;
  const double minus = f();
  x = saved;
  return (plus - minus) / (2.0 * h);
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

}  // namespace magus::testing

#endif  // MAGUS_TESTS_TEST_SUPPORT_HPP_
