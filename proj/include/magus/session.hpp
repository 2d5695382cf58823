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

#ifndef MAGUS_SESSION_HPP_
#define MAGUS_SESSION_HPP_

#include <concepts>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magus/catalog.hpp"
#include "magus/graph.hpp"
#include "magus/propagation.hpp"
#include "magus/scorer.hpp"

namespace magus {

struct RoundRecord {
  std::size_t round = 0;  // 1-based
  std::vector<Recommendation> list;
  std::vector<Feedback> feedback;  // aligned with list
  Outcome outcome = Outcome::pending;
};

struct SessionTranscript {
  UserId user = kInvalidId;
  std::vector<RoundRecord> rounds;
  Outcome outcome = Outcome::pending;
};

template <typename A>
concept UserAgent = requires(const A& agent, const RelationalGraph& g, std::span<const Recommendation> list) {
  { agent.respond(g, list) } -> std::convertible_to<std::vector<Feedback>>;
};

/// One interactive session: normalize, recommend, collect responses, update,
/// until a target item is accepted, the round budget is spent, or nothing is
/// left to recommend.
template <UserAgent Agent>
SessionTranscript run_session(const RelationalGraph& g, const ScorerModel& scorer, const SessionSpec& session,
                              const Agent& agent, const PropagationConfig& cfg) {
  SessionTranscript t;
  t.user = session.user;
  auto st = init_scores(g, scorer, session, cfg.query_boost);
  if (cfg.k_max == 0) st.outcome = Outcome::exhausted;
  while (st.outcome == Outcome::pending) {
    normalize(st);
    auto list = select_topn(st, g, cfg.n);
    if (list.empty()) break;
    auto feedback = agent.respond(g, list);
    apply_feedback(st, g, feedback, cfg);
    t.rounds.push_back(RoundRecord{st.round, std::move(list), std::move(feedback), st.outcome});
  }
  t.outcome = st.outcome;
  return t;
}

inline nlohmann::json recommendation_json(const Recommendation& r) {
  return {{"node", r.node}, {"kind", r.is_item ? "item" : "query"}, {"pos", r.position}, {"score", r.score}};
}

inline nlohmann::json round_json(const RoundRecord& r, std::size_t session_index, UserId user) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& rec : r.list) list.push_back(recommendation_json(rec));
  nlohmann::json feedback = nlohmann::json::array();
  for (const auto& f : r.feedback) {
    feedback.push_back({{"node", f.node}, {"response", std::string(to_string(f.response))}});
  }
  return {{"session", session_index},
          {"user", user},
          {"round", r.round},
          {"list", list},
          {"feedback", feedback},
          {"outcome", std::string(to_string(r.outcome))}};
}

// One JSON object per round, newline-terminated.
inline void write_transcript(std::ostream& out, const SessionTranscript& t, std::size_t session_index) {
  for (const auto& r : t.rounds) out << round_json(r, session_index, t.user).dump() << '\n';
}

inline std::string transcript_text(const SessionTranscript& t, std::size_t session_index) {
  std::string out;
  for (const auto& r : t.rounds) out += round_json(r, session_index, t.user).dump() + '\n';
  return out;
}

}  // namespace magus

#endif  // MAGUS_SESSION_HPP_
