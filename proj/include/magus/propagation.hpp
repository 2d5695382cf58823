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

// Per-session node scores and the signed label propagation that moves them.
//
// Initialization pushes base-recommender scores from item nodes down to their
// parts; feedback pushes the responses back up toward wholes. R- neighbours
// are inhibited in both directions.

#ifndef MAGUS_PROPAGATION_HPP_
#define MAGUS_PROPAGATION_HPP_

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "magus/catalog.hpp"
#include "magus/common.hpp"
#include "magus/graph.hpp"
#include "magus/scorer.hpp"

namespace magus {

enum class Outcome : std::uint8_t { pending, success, exhausted };
enum class Response : std::uint8_t { yes, no, not_care };
enum class FeedbackMode : std::uint8_t { literal, delta };
enum class QueryBoost : std::uint8_t { max_floor, literal_min };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::pending: return "pending";
    case Outcome::success: return "success";
    case Outcome::exhausted: return "exhausted";
  }
  return "?";
}

inline std::string_view to_string(Response r) {
  switch (r) {
    case Response::yes: return "yes";
    case Response::no: return "no";
    case Response::not_care: return "not_care";
  }
  return "?";
}

inline std::string_view to_string(FeedbackMode m) { return m == FeedbackMode::literal ? "literal" : "delta"; }
inline std::string_view to_string(QueryBoost b) {
  return b == QueryBoost::max_floor ? "max_floor" : "literal_min";
}

inline Response parse_response(std::string_view s) {
  if (s == "yes") return Response::yes;
  if (s == "no") return Response::no;
  if (s == "not_care") return Response::not_care;
  throw Error("unknown response '" + std::string(s) + "'");
}

inline FeedbackMode parse_mode(std::string_view s) {
  if (s == "literal") return FeedbackMode::literal;
  if (s == "delta") return FeedbackMode::delta;
  throw Error("unknown feedback mode '" + std::string(s) + "'");
}

inline QueryBoost parse_query_boost(std::string_view s) {
  if (s == "max_floor") return QueryBoost::max_floor;
  if (s == "literal_min") return QueryBoost::literal_min;
  throw Error("unknown query boost '" + std::string(s) + "'");
}

struct PropagationConfig {
  std::size_t n = 3;       // recommendations per round
  std::size_t k_max = 5;   // round budget
  FeedbackMode mode = FeedbackMode::literal;
  QueryBoost query_boost = QueryBoost::max_floor;
};

struct Recommendation {
  NodeId node = kInvalidId;
  bool is_item = false;
  std::size_t position = 0;  // 1-based
  double score = 0.0;

  friend bool operator==(const Recommendation&, const Recommendation&) = default;
};

struct Feedback {
  NodeId node = kInvalidId;
  Response response = Response::no;

  friend bool operator==(const Feedback&, const Feedback&) = default;
};

struct ScoreState {
  std::vector<double> scores;         // indexed by NodeId
  std::vector<std::uint8_t> active;   // 0 for item nodes outside the candidate pool
  std::vector<std::uint8_t> visited;
  std::vector<ItemId> targets;        // sorted
  std::vector<Recommendation> outstanding;
  std::size_t round = 0;
  Outcome outcome = Outcome::pending;

  std::size_t visited_count() const {
    return static_cast<std::size_t>(std::count(visited.begin(), visited.end(), std::uint8_t{1}));
  }
};

class FeedbackError : public Error {
 public:
  enum class Code { not_pending, not_emitted, incomplete, duplicate, multiple_yes };

  FeedbackError(Code code, const std::string& what) : Error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// Initial node scores for one session.
///
/// Candidate item nodes take the base score (the max over items sharing the
/// node); other item nodes are frozen at 0. Each query node then collects
/// w * score from the wholes covering it, processed from the largest word
/// sets down, and is inhibited by w * score of its R- neighbours as they stand
/// after that accumulation. Finally nodes matching the user's searched queries
/// are floored per `boost`.
inline ScoreState init_scores(const RelationalGraph& g, const ScorerModel& scorer,
                              const SessionSpec& session, QueryBoost boost = QueryBoost::max_floor) {
  const std::size_t n = g.size();
  ScoreState st;
  st.scores.assign(n, 0.0);
  st.active.assign(n, 1);
  st.visited.assign(n, 0);
  st.targets = session.targets;
  std::sort(st.targets.begin(), st.targets.end());

  for (NodeId v = 0; v < n; ++v) {
    if (g.node(v).is_item()) st.active[v] = 0;
  }
  const auto base = scorer.score_items(session.user, session.candidates);
  for (std::size_t k = 0; k < session.candidates.size(); ++k) {
    const NodeId v = g.item_node(session.candidates[k]);
    if (v == kInvalidId) throw Error("candidate item " + std::to_string(session.candidates[k]) + " has no node");
    st.scores[v] = st.active[v] ? std::max(st.scores[v], base[k]) : base[k];
    st.active[v] = 1;
  }

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    return g.node(a).words.size() > g.node(b).words.size();
  });
  std::vector<double> acc = st.scores;
  for (NodeId v : order) {
    if (g.node(v).is_item()) continue;
    double sum = 0.0;
    for (const auto& up : g.wholes(v)) sum += g.weight(up.edge) * acc[up.node];
    acc[v] = sum;
  }
  for (NodeId v = 0; v < n; ++v) {
    if (g.node(v).is_item()) continue;
    double inhibition = 0.0;
    for (const auto& nb : g.inhibitors(v)) inhibition += g.weight(nb.edge) * acc[nb.node];
    st.scores[v] = acc[v] - inhibition;
  }

  std::vector<std::uint8_t> searched(n, 0);
  for (const auto& q : session.queries) {
    if (auto v = g.find_query(q)) searched[*v] = 1;
  }
  if (std::find(searched.begin(), searched.end(), 1) != searched.end()) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (NodeId v = 0; v < n; ++v) {
      if (searched[v] || g.node(v).is_item()) continue;
      lo = std::min(lo, st.scores[v]);
      hi = std::max(hi, st.scores[v]);
    }
    if (std::isfinite(lo)) {
      const double floor = boost == QueryBoost::max_floor ? std::min(hi, 1.0) : std::min(lo, 1.0);
      for (NodeId v = 0; v < n; ++v) {
        if (searched[v]) st.scores[v] = std::max(floor, st.scores[v]);
      }
    }
  }
  return st;
}

/// Min-max rescales the masked entries to [0, 1]; if they are all equal they
/// become 0.5. Unmasked entries are left alone.
inline void normalize_scores(std::span<double> scores, std::span<const std::uint8_t> mask) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < scores.size(); ++v) {
    if (!mask[v]) continue;
    lo = std::min(lo, scores[v]);
    hi = std::max(hi, scores[v]);
  }
  if (!std::isfinite(lo)) return;
  const double range = hi - lo;
  for (std::size_t v = 0; v < scores.size(); ++v) {
    if (!mask[v]) continue;
    scores[v] = range > 0 ? (scores[v] - lo) / range : 0.5;
  }
}

inline void normalize_scores(std::span<double> scores) {
  std::vector<std::uint8_t> all(scores.size(), 1);
  normalize_scores(scores, all);
}

// Frozen (non-candidate) item nodes keep their 0.
inline void normalize(ScoreState& st) { normalize_scores(st.scores, st.active); }

/// Highest-scoring unvisited active nodes, ties to the lower id. Items and
/// queries compete in one pool. Records the list as outstanding; an empty
/// pool exhausts the session.
inline std::vector<Recommendation> select_topn(ScoreState& st, const RelationalGraph& g, std::size_t n) {
  std::vector<NodeId> pool;
  for (NodeId v = 0; v < st.scores.size(); ++v) {
    if (st.active[v] && !st.visited[v]) pool.push_back(v);
  }
  const std::size_t take = std::min(n, pool.size());
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(),
                    [&](NodeId a, NodeId b) {
                      return st.scores[a] != st.scores[b] ? st.scores[a] > st.scores[b] : a < b;
                    });
  std::vector<Recommendation> out;
  out.reserve(take);
  for (std::size_t k = 0; k < take; ++k) {
    const NodeId v = pool[k];
    out.push_back(Recommendation{v, g.node(v).is_item(), k + 1, st.scores[v]});
  }
  st.outstanding = out;
  if (out.empty()) st.outcome = Outcome::exhausted;
  return out;
}

namespace detail {

inline void validate_feedback(const ScoreState& st, std::span<const Feedback> feedbacks) {
  using Code = FeedbackError::Code;
  if (st.outcome != Outcome::pending) throw FeedbackError(Code::not_pending, "session is no longer pending");
  std::size_t yes = 0;
  std::vector<NodeId> seen;
  for (const auto& f : feedbacks) {
    const bool emitted = std::any_of(st.outstanding.begin(), st.outstanding.end(),
                                     [&](const Recommendation& r) { return r.node == f.node; });
    if (!emitted) {
      throw FeedbackError(Code::not_emitted, "node " + std::to_string(f.node) + " was not recommended this round");
    }
    if (std::find(seen.begin(), seen.end(), f.node) != seen.end()) {
      throw FeedbackError(Code::duplicate, "node " + std::to_string(f.node) + " answered twice");
    }
    seen.push_back(f.node);
    yes += f.response == Response::yes;
  }
  if (yes > 1) throw FeedbackError(Code::multiple_yes, "at most one yes per round");
  if (seen.size() != st.outstanding.size()) {
    throw FeedbackError(Code::incomplete, "every recommended node needs a response");
  }
}

}  // namespace detail

/// Applies one round of responses.
///
/// The yes node is set to 1 and every no node to 0; not_care leaves the score
/// as is. All answered nodes become visited. The yes/no nodes are sources
/// with a propagated quantity of their new score (literal) or of their signed
/// change (delta). The sweep then:
///   - walks toward wholes level by level from the sources; a node reached
///     at level d+1 gains the sum of w * quantity over its parts at level d
///     and carries that sum on as its own quantity;
///   - inhibits every R- neighbour of a source by w * quantity of that source.
/// Each non-source node is updated once, as a single clamp to [0, 1] of both
/// effects. Frozen item nodes are never updated and do not relay.
inline void apply_feedback(ScoreState& st, const RelationalGraph& g, std::span<const Feedback> feedbacks,
                           const PropagationConfig& cfg) {
  detail::validate_feedback(st, feedbacks);
  const std::size_t n = g.size();

  std::vector<NodeId> sources;
  std::vector<double> quantity(n, 0.0);
  bool hit = false;
  for (const auto& f : feedbacks) {
    st.visited[f.node] = 1;
    if (f.response == Response::not_care) continue;
    const double before = st.scores[f.node];
    const double after = f.response == Response::yes ? 1.0 : 0.0;
    st.scores[f.node] = after;
    quantity[f.node] = cfg.mode == FeedbackMode::literal ? after : after - before;
    sources.push_back(f.node);
    if (f.response == Response::yes && g.node(f.node).is_item()) {
      for (ItemId i : g.node(f.node).items) {
        hit = hit || std::binary_search(st.targets.begin(), st.targets.end(), i);
      }
    }
  }
  std::sort(sources.begin(), sources.end());

  std::vector<std::uint8_t> touched(n, 0);
  std::vector<double> inhibition(n, 0.0);
  std::vector<std::uint8_t> inhibited(n, 0);
  for (NodeId s : sources) touched[s] = 1;
  for (NodeId s : sources) {
    for (const auto& nb : g.inhibitors(s)) {
      if (touched[nb.node] || !st.active[nb.node]) continue;
      inhibition[nb.node] += g.weight(nb.edge) * quantity[s];
      inhibited[nb.node] = 1;
    }
  }

  std::vector<NodeId> frontier = sources;
  std::vector<NodeId> next;
  std::vector<double> gain(n, 0.0);
  std::vector<std::uint8_t> queued(n, 0);
  while (!frontier.empty()) {
    next.clear();
    for (NodeId u : frontier) {
      for (const auto& up : g.wholes(u)) {
        const NodeId v = up.node;
        if (touched[v] || !st.active[v]) continue;
        if (!queued[v]) {
          queued[v] = 1;
          next.push_back(v);
        }
        gain[v] += g.weight(up.edge) * quantity[u];
      }
    }
    std::sort(next.begin(), next.end());
    for (NodeId v : next) {
      touched[v] = 1;
      st.scores[v] = clamp01(st.scores[v] + gain[v] - inhibition[v]);
      quantity[v] = gain[v];
    }
    frontier.swap(next);
  }
  for (NodeId v = 0; v < n; ++v) {
    if (inhibited[v] && !touched[v]) st.scores[v] = clamp01(st.scores[v] - inhibition[v]);
  }

  st.outstanding.clear();
  ++st.round;
  if (hit) {
    st.outcome = Outcome::success;
  } else if (st.round >= cfg.k_max) {
    st.outcome = Outcome::exhausted;
  }
}

}  // namespace magus

#endif  // MAGUS_PROPAGATION_HPP_
