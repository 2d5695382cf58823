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

// Simulated users, session metrics and the benchmark driver.

#ifndef MAGUS_SIMULATOR_HPP_
#define MAGUS_SIMULATOR_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "magus/catalog.hpp"
#include "magus/graph.hpp"
#include "magus/propagation.hpp"
#include "magus/scorer.hpp"
#include "magus/session.hpp"

namespace magus {

enum class AgentVariant : std::uint8_t { strict, ambiguous };

inline std::string_view to_string(AgentVariant v) { return v == AgentVariant::strict ? "strict" : "ambiguous"; }

inline AgentVariant parse_agent(std::string_view s) {
  if (s == "strict") return AgentVariant::strict;
  if (s == "ambiguous") return AgentVariant::ambiguous;
  throw Error("unknown agent '" + std::string(s) + "'");
}

// Says yes to a target item, or to a query that describes part of a target.
// The ambiguous variant answers not_care to a query that fits two or more
// targets. Only the highest-placed acceptable entry gets the yes.
class SimulatedUser {
 public:
  SimulatedUser(AgentVariant variant, std::vector<ItemId> targets)
      : variant_(variant), targets_(std::move(targets)) {
    std::sort(targets_.begin(), targets_.end());
  }

  AgentVariant variant() const { return variant_; }
  const std::vector<ItemId>& targets() const { return targets_; }

  // Response to a single node, ignoring the one-yes-per-round rule.
  Response judge(const RelationalGraph& g, NodeId v) const {
    const auto& node = g.node(v);
    if (node.is_item()) {
      const bool hit = std::any_of(node.items.begin(), node.items.end(), [&](ItemId i) {
        return std::binary_search(targets_.begin(), targets_.end(), i);
      });
      return hit ? Response::yes : Response::no;
    }
    std::size_t containing = 0;
    for (ItemId t : targets_) {
      const NodeId tv = g.item_node(t);
      if (tv != kInvalidId && is_subset(node.words, g.node(tv).words)) ++containing;
    }
    if (containing == 0) return Response::no;
    if (variant_ == AgentVariant::ambiguous && containing >= 2) return Response::not_care;
    return Response::yes;
  }

  std::vector<Feedback> respond(const RelationalGraph& g, std::span<const Recommendation> list) const {
    std::vector<const Recommendation*> ordered;
    for (const auto& r : list) ordered.push_back(&r);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const Recommendation* a, const Recommendation* b) { return a->position < b->position; });
    std::vector<Feedback> out(list.size());
    bool said_yes = false;
    for (const auto* r : ordered) {
      Response resp = judge(g, r->node);
      if (resp == Response::yes) {
        if (said_yes) resp = Response::no;
        said_yes = true;
      }
      out[static_cast<std::size_t>(r - list.data())] = Feedback{r->node, resp};
    }
    return out;
  }

 private:
  AgentVariant variant_;
  std::vector<ItemId> targets_;
};

// 1 / log2(b + 1) for a yes at position b, else 0.
inline double round_accuracy(const RoundRecord& r) {
  for (std::size_t k = 0; k < r.feedback.size(); ++k) {
    if (r.feedback[k].response != Response::yes) continue;
    const auto pos = static_cast<double>(r.list[k].position);
    return 1.0 / std::log2(pos + 1.0);
  }
  return 0.0;
}

// Mean over every executed round (round <= k_max) of every session.
inline double compute_ra(std::span<const SessionTranscript> transcripts, std::size_t k_max) {
  double sum = 0.0;
  std::size_t rounds = 0;
  for (const auto& t : transcripts) {
    for (const auto& r : t.rounds) {
      if (r.round > k_max) break;
      sum += round_accuracy(r);
      ++rounds;
    }
  }
  return rounds ? sum / static_cast<double>(rounds) : 0.0;
}

inline bool session_success(const SessionTranscript& t, std::size_t k_max) {
  return std::any_of(t.rounds.begin(), t.rounds.end(), [&](const RoundRecord& r) {
    return r.round <= k_max && r.outcome == Outcome::success;
  });
}

inline double compute_sa(std::span<const SessionTranscript> transcripts, std::size_t k_max) {
  if (transcripts.empty()) return 0.0;
  std::size_t wins = 0;
  for (const auto& t : transcripts) wins += session_success(t, k_max);
  return static_cast<double>(wins) / static_cast<double>(transcripts.size());
}

// Top-n candidate items by base score (ties to the lower item id).
inline std::vector<ItemId> top_items(const ScorerModel& scorer, const SessionSpec& s, std::size_t n) {
  const auto scores = scorer.score_items(s.user, s.candidates);
  std::vector<std::size_t> idx(s.candidates.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : s.candidates[a] < s.candidates[b];
  });
  std::vector<ItemId> out;
  for (std::size_t k = 0; k < std::min(n, idx.size()); ++k) out.push_back(s.candidates[idx[k]]);
  return out;
}

inline bool single_round_hit(const ScorerModel& scorer, const SessionSpec& s, std::size_t n) {
  const auto top = top_items(scorer, s, n);
  return std::any_of(top.begin(), top.end(), [&](ItemId i) {
    return std::binary_search(s.targets.begin(), s.targets.end(), i);
  });
}

inline double compute_sac(const ScorerModel& scorer, std::span<const SessionSpec> sessions, std::size_t n) {
  if (sessions.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : sessions) hits += single_round_hit(scorer, s, n);
  return static_cast<double>(hits) / static_cast<double>(sessions.size());
}

struct SessionMetrics {
  UserId user = kInvalidId;
  std::size_t rounds = 0;
  double ra = 0.0;  // mean over this session's rounds
  double sa = 0.0;
  std::optional<double> sac;
};

struct MetricReport {
  double ra = 0.0;
  double sa = 0.0;
  std::optional<double> sac;
  std::vector<SessionMetrics> sessions;
  PropagationConfig config;
  AgentVariant agent = AgentVariant::strict;
};

inline MetricReport make_report(std::span<const SessionTranscript> transcripts, std::span<const SessionSpec> sessions,
                                const ScorerModel* scorer, const PropagationConfig& cfg, AgentVariant agent) {
  MetricReport rep;
  rep.config = cfg;
  rep.agent = agent;
  rep.ra = compute_ra(transcripts, cfg.k_max);
  rep.sa = compute_sa(transcripts, cfg.k_max);
  if (scorer) rep.sac = compute_sac(*scorer, sessions, cfg.n);
  for (std::size_t s = 0; s < transcripts.size(); ++s) {
    const auto& t = transcripts[s];
    SessionMetrics m;
    m.user = t.user;
    m.rounds = t.rounds.size();
    m.ra = compute_ra(std::span(&t, 1), cfg.k_max);
    m.sa = session_success(t, cfg.k_max) ? 1.0 : 0.0;
    if (scorer) m.sac = single_round_hit(*scorer, sessions[s], cfg.n) ? 1.0 : 0.0;
    rep.sessions.push_back(m);
  }
  return rep;
}

inline nlohmann::json report_json(const MetricReport& rep) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& m : rep.sessions) {
    nlohmann::json row = {{"user", m.user}, {"rounds", m.rounds}, {"ra", m.ra}, {"sa", m.sa}};
    if (m.sac) row["sac"] = *m.sac;
    per.push_back(row);
  }
  nlohmann::json j = {{"ra", rep.ra},
                      {"sa", rep.sa},
                      {"config",
                       {{"n", rep.config.n},
                        {"k_max", rep.config.k_max},
                        {"mode", std::string(to_string(rep.config.mode))},
                        {"query_boost", std::string(to_string(rep.config.query_boost))},
                        {"agent", std::string(to_string(rep.agent))}}},
                      {"sessions", per}};
  j["sac"] = rep.sac ? nlohmann::json(*rep.sac) : nlohmann::json(nullptr);
  return j;
}

struct BenchmarkCell {
  PropagationConfig config;
  MetricReport report;
  std::vector<SessionTranscript> transcripts;
};

/// Runs every session under every configuration. Sessions are independent
/// and spread over `threads` workers; results keep session order.
inline std::vector<BenchmarkCell> run_benchmark(const RelationalGraph& g, const ScorerModel& scorer,
                                                std::span<const SessionSpec> sessions, AgentVariant agent,
                                                std::span<const PropagationConfig> grid, unsigned threads = 1) {
  if (sessions.empty()) throw Error("benchmark needs at least one session");
  std::vector<BenchmarkCell> cells;
  for (const auto& cfg : grid) {
    BenchmarkCell cell;
    cell.config = cfg;
    cell.transcripts.resize(sessions.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t s = next++; s < sessions.size(); s = next++) {
        SimulatedUser user(agent, sessions[s].targets);
        cell.transcripts[s] = run_session(g, scorer, sessions[s], user, cfg);
      }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(sessions.size())));
    if (workers == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    cell.report = make_report(cell.transcripts, sessions, &scorer, cfg, agent);
    cells.push_back(std::move(cell));
  }
  return cells;
}

}  // namespace magus

#endif  // MAGUS_SIMULATOR_HPP_
