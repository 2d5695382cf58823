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

// Live interactive sessions over JSON/HTTP.
//
//   POST   /api/sessions                 create, returns round-1 list
//   GET    /api/sessions/{id}            summary and transcript so far
//   POST   /api/sessions/{id}/feedback   {"round": k, "feedback": [...]}
//   GET    /api/sessions/{id}/state      top_m nodes by score
//   DELETE /api/sessions/{id}
//   GET    /api/health

#ifndef MAGUS_SERVICE_HPP_
#define MAGUS_SERVICE_HPP_

#include <algorithm>
#include <array>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "magus/catalog.hpp"
#include "magus/graph.hpp"
#include "magus/propagation.hpp"
#include "magus/scorer.hpp"
#include "magus/session.hpp"

namespace magus {

using Verbalizer = std::function<std::string(const RelationalGraph&, const Catalog&, NodeId)>;

/// Sorted words joined by spaces; item nodes render as "label (words)".
inline std::string default_verbalize(const RelationalGraph& g, const Catalog& cat, NodeId v) {
  const auto& node = g.node(v);
  std::vector<std::string> words;
  for (WordId w : node.words) words.push_back(w < cat.words.size() ? cat.words[w] : std::to_string(w));
  std::sort(words.begin(), words.end());
  std::string joined;
  for (const auto& w : words) {
    if (!joined.empty()) joined += ' ';
    joined += w;
  }
  if (!node.is_item()) return joined;
  const ItemId item = node.items.front();
  const std::string label = item < cat.items.size() ? cat.items[item].label : std::to_string(item);
  return label + " (" + joined + ")";
}

// 128 random bits, base64url without padding.
inline std::string random_session_id(std::mt19937_64& gen) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
  std::array<std::uint8_t, 16> bytes{};
  for (std::size_t k = 0; k < bytes.size(); k += 8) {
    const std::uint64_t r = gen();
    for (std::size_t b = 0; b < 8; ++b) bytes[k + b] = static_cast<std::uint8_t>(r >> (8 * b));
  }
  std::string out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (std::uint8_t byte : bytes) {
    acc = (acc << 8) | byte;
    bits += 8;
    while (bits >= 6) {
      bits -= 6;
      out += kAlphabet[(acc >> bits) & 63];
    }
  }
  if (bits > 0) out += kAlphabet[(acc << (6 - bits)) & 63];
  return out;
}

struct ServiceOptions {
  PropagationConfig defaults;
  std::chrono::seconds idle_timeout{30 * 60};
  std::size_t session_size = 30;  // candidates drawn for auto-sampled sessions
  std::uint64_t seed = 0;
};

struct ServiceReply {
  int status = 200;
  nlohmann::json body;
};

class SessionService {
 public:
  using Clock = std::chrono::steady_clock;

  SessionService(const RelationalGraph& g, const ScorerModel& scorer, const Catalog& catalog,
                 ServiceOptions opts = {}, Verbalizer verbalize = default_verbalize)
      : g_(g), scorer_(scorer), catalog_(catalog), opts_(opts), verbalize_(std::move(verbalize)),
        id_gen_(std::random_device{}()), sample_rng_(opts.seed) {}

  void set_clock(std::function<Clock::time_point()> now) { now_ = std::move(now); }

  std::size_t live_sessions() {
    std::lock_guard lock(mu_);
    expire_locked();
    return sessions_.size();
  }

  ServiceReply create(const nlohmann::json& body) {
    if (!body.is_object() || !body.contains("user_id") || !body["user_id"].is_string()) {
      return error(400, "malformed_body", "user_id (string) is required");
    }
    const auto user = catalog_.find_user(body["user_id"].get<std::string>());
    if (!user) return error(404, "unknown_user");

    PropagationConfig cfg = opts_.defaults;
    SessionSpec spec;
    try {
      if (body.contains("config")) cfg = parse_config(body["config"], cfg);
      if (body.contains("session")) {
        spec = parse_spec(body["session"], *user);
      } else {
        const auto positives = catalog_.log.users[*user].distinct_positives();
        if (positives.empty()) return error(422, "no_positives", "user has no positive interactions to sample");
        std::lock_guard lock(mu_);
        spec = sample_session(*user, positives, catalog_.items.size(), opts_.session_size, sample_rng_);
      }
    } catch (const ServiceInputError& e) {
      return error(400, "malformed_body", e.what());
    } catch (const nlohmann::json::exception& e) {
      return error(400, "malformed_body", e.what());
    }
    if (!spec.valid()) return error(400, "malformed_body", "targets must be a non-empty subset of candidates");

    auto live = std::make_shared<Live>();
    live->user = body["user_id"].get<std::string>();
    live->cfg = cfg;
    live->state = init_scores(g_, scorer_, spec, cfg.query_boost);
    live->transcript.user = spec.user;
    normalize(live->state);
    live->list = select_topn(live->state, g_, cfg.n);
    live->last_active = now();

    std::lock_guard lock(mu_);
    expire_locked();
    std::string id;
    do {
      id = random_session_id(id_gen_);
    } while (sessions_.count(id));
    live->id = id;
    sessions_[id] = live;
    return {201, {{"session_id", id},
                  {"round", live->state.round + 1},
                  {"outcome", std::string(to_string(live->state.outcome))},
                  {"config", config_json(cfg)},
                  {"list", list_json(live->list)}}};
  }

  ServiceReply get(const std::string& id) {
    auto live = find(id);
    if (!live) return error(404, "unknown_session");
    std::lock_guard lock(live->mu);
    return {200, summary_json(*live)};
  }

  ServiceReply feedback(const std::string& id, const nlohmann::json& body) {
    auto live = find(id);
    if (!live) return error(404, "unknown_session");
    std::lock_guard lock(live->mu);
    if (!body.is_object() || !body.contains("round") || !body["round"].is_number_unsigned() ||
        !body.contains("feedback") || !body["feedback"].is_array()) {
      return error(400, "malformed_body", "expected {\"round\": k, \"feedback\": [...]}");
    }
    const auto round = body["round"].get<std::size_t>();
    if (live->state.outcome != Outcome::pending) return error(409, "session_closed");
    if (round != live->state.round + 1) return error(409, "round_conflict");

    std::vector<Feedback> fb;
    try {
      for (const auto& f : body["feedback"]) {
        fb.push_back({f.at("node").get<NodeId>(), parse_response(f.at("response").get<std::string>())});
      }
    } catch (const nlohmann::json::exception& e) {
      return error(400, "malformed_body", e.what());
    } catch (const Error& e) {
      return error(400, "malformed_body", e.what());
    }
    try {
      apply_feedback(live->state, g_, fb, live->cfg);
    } catch (const FeedbackError& e) {
      return error(422, feedback_code(e.code()), e.what());
    }
    live->last_active = now();
    live->transcript.rounds.push_back(RoundRecord{live->state.round, live->list, fb, live->state.outcome});

    live->list.clear();
    if (live->state.outcome == Outcome::pending) {
      normalize(live->state);
      live->list = select_topn(live->state, g_, live->cfg.n);
    }
    live->transcript.outcome = live->state.outcome;
    nlohmann::json out = {{"outcome", std::string(to_string(live->state.outcome))}};
    if (live->state.outcome == Outcome::pending) {
      out["round"] = live->state.round + 1;
      out["list"] = list_json(live->list);
    } else {
      out["summary"] = summary_json(*live);
    }
    return {200, out};
  }

  ServiceReply state(const std::string& id, std::size_t top_m) {
    auto live = find(id);
    if (!live) return error(404, "unknown_session");
    std::lock_guard lock(live->mu);
    const auto& st = live->state;
    std::vector<NodeId> order(st.scores.size());
    std::iota(order.begin(), order.end(), NodeId{0});
    std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return st.scores[a] > st.scores[b]; });
    order.resize(std::min(top_m, order.size()));
    nlohmann::json nodes = nlohmann::json::array();
    for (NodeId v : order) {
      nodes.push_back({{"node", v},
                       {"kind", node_kind(v)},
                       {"words", word_labels(v)},
                       {"display", verbalize_(g_, catalog_, v)},
                       {"score", st.scores[v]},
                       {"visited", st.visited[v] != 0},
                       {"active", st.active[v] != 0}});
    }
    return {200, {{"session_id", id},
                  {"round", st.round},
                  {"outcome", std::string(to_string(st.outcome))},
                  {"nodes", nodes}}};
  }

  ServiceReply remove(const std::string& id) {
    std::lock_guard lock(mu_);
    expire_locked();
    if (!sessions_.erase(id)) return error(404, "unknown_session");
    return {200, {{"deleted", id}}};
  }

  ServiceReply health() {
    return {200, {{"status", "ok"}, {"nodes", g_.size()}, {"items", catalog_.items.size()}, {"sessions", live_sessions()}}};
  }

  void mount(httplib::Server& server) {
    auto send = [](httplib::Response& res, const ServiceReply& r) {
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    };
    auto parse = [](const httplib::Request& req) {
      return nlohmann::json::parse(req.body, nullptr, /*allow_exceptions=*/false);
    };
    server.Get("/api/health", [this, send](const httplib::Request&, httplib::Response& res) { send(res, health()); });
    server.Post("/api/sessions", [this, send, parse](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse(req);
      send(res, body.is_discarded() ? error(400, "malformed_body", "invalid JSON") : create(body));
    });
    server.Get("/api/sessions/:id", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, get(req.path_params.at("id")));
    });
    server.Delete("/api/sessions/:id", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, remove(req.path_params.at("id")));
    });
    server.Post("/api/sessions/:id/feedback", [this, send, parse](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse(req);
      send(res, body.is_discarded() ? error(400, "malformed_body", "invalid JSON")
                                    : feedback(req.path_params.at("id"), body));
    });
    server.Get("/api/sessions/:id/state", [this, send](const httplib::Request& req, httplib::Response& res) {
      std::size_t top_m = 20;
      if (req.has_param("top_m")) {
        try {
          top_m = std::stoul(req.get_param_value("top_m"));
        } catch (const std::exception&) {
          send(res, error(400, "malformed_query", "top_m must be a non-negative integer"));
          return;
        }
      }
      send(res, state(req.path_params.at("id"), top_m));
    });
  }

 private:
  struct Live {
    std::mutex mu;
    std::string id;
    std::string user;
    PropagationConfig cfg;
    ScoreState state;
    std::vector<Recommendation> list;
    SessionTranscript transcript;
    Clock::time_point last_active;
  };

  class ServiceInputError : public Error {
    using Error::Error;
  };

  static ServiceReply error(int status, const std::string& code, const std::string& detail = {}) {
    nlohmann::json body = {{"error", code}};
    if (!detail.empty()) body["detail"] = detail;
    return {status, body};
  }

  static std::string feedback_code(FeedbackError::Code c) {
    switch (c) {
      case FeedbackError::Code::not_pending: return "session_closed";
      case FeedbackError::Code::not_emitted: return "not_emitted";
      case FeedbackError::Code::incomplete: return "incomplete";
      case FeedbackError::Code::duplicate: return "duplicate_node";
      case FeedbackError::Code::multiple_yes: return "multiple_yes";
    }
    return "invalid_feedback";
  }

  static PropagationConfig parse_config(const nlohmann::json& j, PropagationConfig cfg) {
    if (!j.is_object()) throw ServiceInputError("config must be an object");
    try {
      if (j.contains("n")) cfg.n = j["n"].get<std::size_t>();
      if (j.contains("kmax")) cfg.k_max = j["kmax"].get<std::size_t>();
      if (j.contains("mode")) cfg.mode = parse_mode(j["mode"].get<std::string>());
      if (j.contains("query_boost")) cfg.query_boost = parse_query_boost(j["query_boost"].get<std::string>());
    } catch (const ServiceInputError&) {
      throw;
    } catch (const Error& e) {
      throw ServiceInputError(e.what());
    }
    if (cfg.n == 0 || cfg.k_max == 0) throw ServiceInputError("n and kmax must be positive");
    return cfg;
  }

  ItemId item_by_label(const nlohmann::json& j) const {
    const auto id = catalog_.find_item(j.get<std::string>());
    if (!id) throw ServiceInputError("unknown item '" + j.get<std::string>() + "'");
    return *id;
  }

  SessionSpec parse_spec(const nlohmann::json& j, UserId user) const {
    if (!j.is_object()) throw ServiceInputError("session must be an object");
    SessionSpec s;
    s.user = user;
    for (const auto& c : j.at("candidates")) s.candidates.push_back(item_by_label(c));
    for (const auto& t : j.at("targets")) s.targets.push_back(item_by_label(t));
    std::sort(s.targets.begin(), s.targets.end());
    s.targets.erase(std::unique(s.targets.begin(), s.targets.end()), s.targets.end());
    if (j.contains("queries")) {
      for (const auto& q : j["queries"]) {
        WordSet ws;
        for (const auto& w : q) {
          if (auto id = catalog_.find_word(w.get<std::string>())) ws.push_back(*id);
        }
        normalize_word_set(ws);
        if (!ws.empty()) s.queries.push_back(std::move(ws));
      }
    }
    return s;
  }

  static nlohmann::json config_json(const PropagationConfig& cfg) {
    return {{"n", cfg.n},
            {"kmax", cfg.k_max},
            {"mode", std::string(to_string(cfg.mode))},
            {"query_boost", std::string(to_string(cfg.query_boost))}};
  }

  std::string node_kind(NodeId v) const {
    switch (g_.node(v).kind) {
      case NodeKind::word: return "word";
      case NodeKind::combination: return "combination";
      case NodeKind::item: return "item";
    }
    return "unknown";
  }

  nlohmann::json word_labels(NodeId v) const {
    nlohmann::json out = nlohmann::json::array();
    for (WordId w : g_.node(v).words) out.push_back(w < catalog_.words.size() ? catalog_.words[w] : std::to_string(w));
    return out;
  }

  nlohmann::json list_json(const std::vector<Recommendation>& list) const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : list) {
      auto j = recommendation_json(r);
      j["words"] = word_labels(r.node);
      j["display"] = verbalize_(g_, catalog_, r.node);
      out.push_back(j);
    }
    return out;
  }

  nlohmann::json summary_json(const Live& live) const {
    nlohmann::json rounds = nlohmann::json::array();
    for (const auto& r : live.transcript.rounds) rounds.push_back(round_json(r, 0, live.transcript.user));
    nlohmann::json j = {{"session_id", live.id},
                        {"user_id", live.user},
                        {"outcome", std::string(to_string(live.state.outcome))},
                        {"rounds", live.transcript.rounds.size()},
                        {"config", config_json(live.cfg)},
                        {"transcript", rounds}};
    if (live.state.outcome == Outcome::pending) {
      j["round"] = live.state.round + 1;
      j["list"] = list_json(live.list);
    }
    return j;
  }

  Clock::time_point now() const { return now_ ? now_() : Clock::now(); }

  void expire_locked() {
    const auto t = now();
    std::erase_if(sessions_, [&](const auto& kv) {
      std::lock_guard lock(kv.second->mu);
      return t - kv.second->last_active > opts_.idle_timeout;
    });
  }

  std::shared_ptr<Live> find(const std::string& id) {
    std::lock_guard lock(mu_);
    expire_locked();
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return nullptr;
    {
      std::lock_guard session_lock(it->second->mu);
      it->second->last_active = now();
    }
    return it->second;
  }

  const RelationalGraph& g_;
  const ScorerModel& scorer_;
  const Catalog& catalog_;
  ServiceOptions opts_;
  Verbalizer verbalize_;
  std::function<Clock::time_point()> now_;

  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Live>> sessions_;
  std::mt19937_64 id_gen_;
  Rng sample_rng_;
};

}  // namespace magus

#endif  // MAGUS_SERVICE_HPP_
