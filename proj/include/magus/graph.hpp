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

// Relational graph over words, word combinations and items.
//
// Query nodes (single words and combinations) are keyed by their word set.
// Every item gets an item node keyed by its full word set; items with the
// same word list share one item node. A query node and an item node may
// carry the same word set, in which case the query node sits directly below
// the item node.
//
// Relations:
//   R+  covering pairs of the part-of order (a Hasse diagram, no transitive
//       edges). Stored as (a = part, b = whole).
//   R-  pairs that share a word, are incomparable, and are never found
//       together in a single item. Stored with a < b.
//   R⊥  everything else; implicit with weight 0.

#ifndef MAGUS_GRAPH_HPP_
#define MAGUS_GRAPH_HPP_

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "magus/catalog.hpp"
#include "magus/common.hpp"

namespace magus {

enum class NodeKind : std::uint8_t { word = 0, combination = 1, item = 2 };
enum class Relation : std::uint8_t { plus = 0, minus = 1 };

struct Node {
  WordSet words;
  NodeKind kind = NodeKind::word;
  std::vector<ItemId> items;  // item nodes only, ascending

  bool is_item() const { return kind == NodeKind::item; }
  bool is_query() const { return kind != NodeKind::item; }

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  NodeId a = kInvalidId;
  NodeId b = kInvalidId;
  Relation rel = Relation::plus;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  NodeId node;
  std::uint32_t edge;
};

// Strict part-of order on nodes. Equal word sets are ordered query < item.
inline bool node_precedes(const Node& a, const Node& b) {
  if (a.words.size() < b.words.size()) return is_subset(a.words, b.words);
  return a.words == b.words && a.is_query() && b.is_item();
}

/// Covering pairs of a partial order over word-set–bearing members.
///
/// `words(i)` returns the sorted word set of member i and `precedes(i, j)`
/// must be a strict order implied by word-set inclusion. Returns (lower,
/// upper) index pairs with nothing strictly between them, sorted.
template <typename WordsFn, typename PrecedesFn>
std::vector<std::pair<std::size_t, std::size_t>> covering_pairs(std::size_t n, WordsFn&& words,
                                                                PrecedesFn&& precedes) {
  std::map<WordId, std::vector<std::size_t>> by_word;
  for (std::size_t i = 0; i < n; ++i) {
    for (WordId w : words(i)) by_word[w].push_back(i);
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::vector<std::size_t> stamp(n, static_cast<std::size_t>(-1));
  std::vector<std::size_t> below;
  for (std::size_t b = 0; b < n; ++b) {
    below.clear();
    for (WordId w : words(b)) {
      for (std::size_t a : by_word[w]) {
        if (stamp[a] == b) continue;
        stamp[a] = b;
        if (a != b && precedes(a, b)) below.push_back(a);
      }
    }
    for (std::size_t a : below) {
      const bool covered = std::none_of(below.begin(), below.end(), [&](std::size_t c) {
        return c != a && precedes(a, c);
      });
      if (covered) out.emplace_back(a, b);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Hasse diagram of a deduplicated family of word sets under strict inclusion.
inline std::vector<std::pair<WordSet, WordSet>> covering_edges(const std::vector<WordSet>& family) {
  std::vector<WordSet> sets = family;
  for (auto& s : sets) normalize_word_set(s);
  auto pairs = covering_pairs(
      sets.size(), [&](std::size_t i) -> const WordSet& { return sets[i]; },
      [&](std::size_t a, std::size_t b) {
        return sets[a].size() < sets[b].size() && is_subset(sets[a], sets[b]);
      });
  std::vector<std::pair<WordSet, WordSet>> out;
  out.reserve(pairs.size());
  for (auto [a, b] : pairs) out.emplace_back(sets[a], sets[b]);
  return out;
}

class RelationalGraph {
 public:
  RelationalGraph() = default;

  // Validates the tables and builds adjacency and lookup indices.
  RelationalGraph(std::vector<Node> nodes, std::vector<Edge> edges, std::size_t item_count)
      : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    up_.resize(nodes_.size());
    down_.resize(nodes_.size());
    minus_.resize(nodes_.size());
    item_node_.assign(item_count, kInvalidId);
    for (NodeId v = 0; v < nodes_.size(); ++v) {
      const auto& n = nodes_[v];
      if (n.words.empty()) throw Error("node " + std::to_string(v) + " has no words");
      if (n.is_item()) {
        if (n.items.empty()) throw Error("item node " + std::to_string(v) + " has no items");
        for (ItemId i : n.items) {
          if (i >= item_count) throw Error("item id out of range in node table");
          item_node_[i] = v;
        }
        item_sets_.emplace(n.words, v);
      } else {
        query_sets_.emplace(n.words, v);
      }
    }
    for (std::uint32_t e = 0; e < edges_.size(); ++e) {
      const auto& edge = edges_[e];
      if (edge.a >= nodes_.size() || edge.b >= nodes_.size() || edge.a == edge.b) {
        throw Error("bad edge " + std::to_string(e));
      }
      if (edge.rel == Relation::plus) {
        up_[edge.a].push_back({edge.b, e});
        down_[edge.b].push_back({edge.a, e});
      } else {
        minus_[edge.a].push_back({edge.b, e});
        minus_[edge.b].push_back({edge.a, e});
      }
    }
    auto by_node = [](const Neighbor& x, const Neighbor& y) { return x.node < y.node; };
    for (NodeId v = 0; v < nodes_.size(); ++v) {
      std::sort(up_[v].begin(), up_[v].end(), by_node);
      std::sort(down_[v].begin(), down_[v].end(), by_node);
      std::sort(minus_[v].begin(), minus_[v].end(), by_node);
    }
  }

  std::size_t size() const { return nodes_.size(); }
  std::size_t item_count() const { return item_node_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(NodeId v) const { return nodes_.at(v); }

  // Covering wholes of v (reversed R+ direction).
  std::span<const Neighbor> wholes(NodeId v) const { return up_[v]; }
  // Covered parts of v.
  std::span<const Neighbor> parts(NodeId v) const { return down_[v]; }
  std::span<const Neighbor> inhibitors(NodeId v) const { return minus_[v]; }

  double weight(std::uint32_t edge) const { return edges_[edge].weight; }

  NodeId item_node(ItemId item) const {
    return item < item_node_.size() ? item_node_[item] : kInvalidId;
  }

  std::optional<NodeId> find_query(WordSet words) const { return find(query_sets_, std::move(words)); }
  std::optional<NodeId> find_item_node(WordSet words) const { return find(item_sets_, std::move(words)); }

  // Exact word-set match; a query node wins over an item node with the same words.
  std::optional<NodeId> node_lookup(WordSet words) const {
    normalize_word_set(words);
    if (auto q = find(query_sets_, words)) return q;
    return find(item_sets_, words);
  }

  // Copy with every edge weight replaced. Weights are indexed like edges().
  RelationalGraph with_weights(std::span<const double> weights) const {
    if (weights.size() != edges_.size()) throw Error("weight table size mismatch");
    auto edges = edges_;
    for (std::size_t e = 0; e < edges.size(); ++e) edges[e].weight = weights[e];
    return RelationalGraph(nodes_, std::move(edges), item_node_.size());
  }

  std::size_t count(Relation rel) const {
    return static_cast<std::size_t>(
        std::count_if(edges_.begin(), edges_.end(), [&](const Edge& e) { return e.rel == rel; }));
  }

  friend bool operator==(const RelationalGraph& x, const RelationalGraph& y) {
    return x.nodes_ == y.nodes_ && x.edges_ == y.edges_ && x.item_node_ == y.item_node_;
  }

 private:
  static std::optional<NodeId> find(const std::map<WordSet, NodeId>& m, WordSet words) {
    normalize_word_set(words);
    auto it = m.find(words);
    if (it == m.end()) return std::nullopt;
    return it->second;
  }

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> up_;
  std::vector<std::vector<Neighbor>> down_;
  std::vector<std::vector<Neighbor>> minus_;
  std::vector<NodeId> item_node_;
  std::map<WordSet, NodeId> query_sets_;
  std::map<WordSet, NodeId> item_sets_;
};

struct GraphOptions {
  std::size_t max_combo_size = 2;
  std::size_t rminus_degree_cap = 16;
};

namespace detail {

inline void for_each_subset_of_size(const WordSet& words, std::size_t k,
                                    const std::function<void(const WordSet&)>& fn) {
  if (k == 0 || k > words.size()) return;
  WordSet current;
  current.reserve(k);
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (current.size() == k) {
      fn(current);
      return;
    }
    for (std::size_t i = start; i + (k - current.size()) <= words.size(); ++i) {
      current.push_back(words[i]);
      rec(i + 1);
      current.pop_back();
    }
  };
  rec(0);
}

}  // namespace detail

/// Builds the relational graph for a catalog.
///
/// Node ids: item nodes first (in item order), then one node per word, then
/// combinations ordered by size and lexicographically. Combinations are all
/// subsets of 2..max_combo_size words of each item, plus every searched query
/// of two or more words that some item contains. All weights start at 1.
inline RelationalGraph build_graph(const Catalog& catalog, GraphOptions opts = {}) {
  std::vector<Node> nodes;
  std::map<WordSet, NodeId> item_nodes;
  for (ItemId i = 0; i < catalog.items.size(); ++i) {
    const auto& words = catalog.items[i].words;
    auto [it, inserted] = item_nodes.try_emplace(words, static_cast<NodeId>(nodes.size()));
    if (inserted) {
      nodes.push_back(Node{words, NodeKind::item, {i}});
    } else {
      nodes[it->second].items.push_back(i);
    }
  }

  std::vector<std::vector<ItemId>> items_by_word(catalog.words.size());
  for (ItemId i = 0; i < catalog.items.size(); ++i) {
    for (WordId w : catalog.items[i].words) items_by_word[w].push_back(i);
  }
  auto contained_in_some_item = [&](const WordSet& ws) {
    const std::vector<ItemId>* shortest = nullptr;
    for (WordId w : ws) {
      if (w >= items_by_word.size()) return false;
      if (!shortest || items_by_word[w].size() < shortest->size()) shortest = &items_by_word[w];
    }
    if (!shortest) return false;
    return std::any_of(shortest->begin(), shortest->end(),
                       [&](ItemId i) { return is_subset(ws, catalog.items[i].words); });
  };

  std::vector<bool> word_used(catalog.words.size(), false);
  for (const auto& item : catalog.items) {
    for (WordId w : item.words) word_used[w] = true;
  }
  for (WordId w = 0; w < catalog.words.size(); ++w) {
    if (word_used[w]) nodes.push_back(Node{{w}, NodeKind::word, {}});
  }

  auto by_size_then_lex = [](const WordSet& x, const WordSet& y) {
    return x.size() != y.size() ? x.size() < y.size() : x < y;
  };
  std::set<WordSet, decltype(by_size_then_lex)> combos(by_size_then_lex);
  for (const auto& item : catalog.items) {
    for (std::size_t k = 2; k <= opts.max_combo_size; ++k) {
      detail::for_each_subset_of_size(item.words, k, [&](const WordSet& s) { combos.insert(s); });
    }
  }
  for (const auto& user : catalog.log.users) {
    for (const auto& q : user.queries) {
      if (q.words.size() >= 2 && contained_in_some_item(q.words)) combos.insert(q.words);
    }
  }
  for (const auto& c : combos) nodes.push_back(Node{c, NodeKind::combination, {}});

  std::vector<Edge> edges;
  auto plus_pairs = covering_pairs(
      nodes.size(), [&](std::size_t i) -> const WordSet& { return nodes[i].words; },
      [&](std::size_t a, std::size_t b) { return node_precedes(nodes[a], nodes[b]); });
  for (auto [a, b] : plus_pairs) {
    edges.push_back(Edge{static_cast<NodeId>(a), static_cast<NodeId>(b), Relation::plus, 1.0});
  }

  std::vector<std::vector<NodeId>> nodes_by_word(catalog.words.size());
  for (NodeId v = 0; v < nodes.size(); ++v) {
    for (WordId w : nodes[v].words) nodes_by_word[w].push_back(v);
  }
  std::vector<std::size_t> minus_degree(nodes.size(), 0);
  std::vector<NodeId> stamp(nodes.size(), kInvalidId);
  std::vector<NodeId> partners;
  for (NodeId a = 0; a < nodes.size(); ++a) {
    if (minus_degree[a] >= opts.rminus_degree_cap) continue;
    partners.clear();
    for (WordId w : nodes[a].words) {
      for (NodeId b : nodes_by_word[w]) {
        if (b <= a || stamp[b] == a) continue;
        stamp[b] = a;
        partners.push_back(b);
      }
    }
    std::sort(partners.begin(), partners.end());
    for (NodeId b : partners) {
      if (minus_degree[a] >= opts.rminus_degree_cap) break;
      if (minus_degree[b] >= opts.rminus_degree_cap) continue;
      const auto& wa = nodes[a].words;
      const auto& wb = nodes[b].words;
      if (is_subset(wa, wb) || is_subset(wb, wa)) continue;
      WordSet joint;
      std::set_union(wa.begin(), wa.end(), wb.begin(), wb.end(), std::back_inserter(joint));
      if (contained_in_some_item(joint)) continue;
      edges.push_back(Edge{a, b, Relation::minus, 1.0});
      ++minus_degree[a];
      ++minus_degree[b];
    }
  }

  return RelationalGraph(std::move(nodes), std::move(edges), catalog.items.size());
}

/// Kahn topological order of the part-of orientation (parts before wholes).
/// Empty optional if the R+ edges contain a cycle.
inline std::optional<std::vector<NodeId>> topological_order(const RelationalGraph& g) {
  std::vector<std::size_t> indegree(g.size(), 0);
  for (NodeId v = 0; v < g.size(); ++v) indegree[v] = g.parts(v).size();
  std::vector<NodeId> order;
  order.reserve(g.size());
  for (NodeId v = 0; v < g.size(); ++v) {
    if (indegree[v] == 0) order.push_back(v);
  }
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (const auto& up : g.wholes(order[head])) {
      if (--indegree[up.node] == 0) order.push_back(up.node);
    }
  }
  if (order.size() != g.size()) return std::nullopt;
  return order;
}

}  // namespace magus

#endif  // MAGUS_GRAPH_HPP_
