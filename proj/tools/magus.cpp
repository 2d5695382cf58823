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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "magus/catalog.hpp"
#include "magus/graph.hpp"
#include "magus/graph_io.hpp"
#include "magus/propagation.hpp"
#include "magus/scorer.hpp"
#include "magus/service.hpp"
#include "magus/session.hpp"
#include "magus/simulator.hpp"
#include "magus/synthetic.hpp"
#include "magus/weight_trainer.hpp"

namespace {

using namespace magus;

void print_load_summary(const Catalog& cat) {
  const auto& s = cat.summary;
  std::cerr << "catalog: " << cat.items.size() << " items, " << cat.words.size() << " words, " << cat.users.size()
            << " users; rejected " << s.rejected_items << " items, " << s.rejected_interactions
            << " interactions, " << s.rejected_queries << " queries\n";
}

TemporalSplit split_catalog(const Catalog& cat, std::size_t min_length) {
  auto split = temporal_split(cat.log, {}, min_length);
  std::cerr << "split: kept " << split.kept_users.size() << " users, dropped " << split.dropped_users << "\n";
  return split;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"magus: interactive recommendation over a word/item relational graph"};
  app.require_subcommand(1);

  // gen-synthetic
  SyntheticConfig syn;
  std::string syn_out;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a planted synthetic catalog");
  gen->add_option("--users", syn.users)->capture_default_str();
  gen->add_option("--items", syn.items)->capture_default_str();
  gen->add_option("--words", syn.words)->capture_default_str();
  gen->add_option("--wpi", syn.words_per_item, "words per item")->capture_default_str();
  gen->add_option("--events", syn.events_per_user, "events per user")->capture_default_str();
  gen->add_option("--queries", syn.queries_per_user, "searched queries per user")->capture_default_str();
  gen->add_option("--seed", syn.seed)->capture_default_str();
  gen->add_option("--out", syn_out)->required();

  // build-graph
  std::string catalog_dir, graph_out;
  GraphOptions gopts;
  auto* bg = app.add_subcommand("build-graph", "Build the relational graph snapshot");
  bg->add_option("--catalog", catalog_dir)->required();
  bg->add_option("--max-combo", gopts.max_combo_size)->capture_default_str();
  bg->add_option("--rminus-cap", gopts.rminus_degree_cap)->capture_default_str();
  bg->add_option("--out", graph_out)->required();

  // train-scorer
  std::string kind = "matfact", scorer_out;
  MatFactOptions mopts;
  std::size_t min_length = 30;
  auto* ts = app.add_subcommand("train-scorer", "Fit the base recommender on the training split");
  ts->add_option("--kind", kind)->check(CLI::IsMember({"matfact", "popularity"}))->capture_default_str();
  ts->add_option("--catalog", catalog_dir)->required();
  ts->add_option("--epochs", mopts.epochs)->capture_default_str();
  ts->add_option("--dim", mopts.dim)->capture_default_str();
  ts->add_option("--lr-start", mopts.lr_start)->capture_default_str();
  ts->add_option("--lr-end", mopts.lr_end)->capture_default_str();
  ts->add_option("--l2", mopts.l2)->capture_default_str();
  ts->add_option("--seed", mopts.seed)->capture_default_str();
  ts->add_option("--min-length", min_length)->capture_default_str();
  ts->add_option("--out", scorer_out)->required();

  // train-weights
  std::string graph_in, scorer_in;
  WeightTrainerOptions wopts;
  auto* tw = app.add_subcommand("train-weights", "Learn edge weights and write a new graph snapshot");
  tw->add_option("--graph", graph_in)->required();
  tw->add_option("--scorer", scorer_in)->required();
  tw->add_option("--catalog", catalog_dir)->required();
  tw->add_option("--epochs", wopts.epochs)->capture_default_str();
  tw->add_option("--lr-start", wopts.lr_start)->capture_default_str();
  tw->add_option("--lr-end", wopts.lr_end)->capture_default_str();
  tw->add_option("--l2", wopts.l2)->capture_default_str();
  tw->add_option("--seed", wopts.seed)->capture_default_str();
  tw->add_option("--min-length", min_length)->capture_default_str();
  tw->add_option("--out", graph_out)->required();

  // build-sessions
  SessionOptions sopts;
  std::string sessions_out;
  auto* bs = app.add_subcommand("build-sessions", "Sample evaluation sessions from the test split");
  bs->add_option("--catalog", catalog_dir)->required();
  bs->add_option("--size", sopts.size, "candidates per session")->capture_default_str();
  bs->add_option("--seed", sopts.seed)->capture_default_str();
  bs->add_option("--min-length", min_length)->capture_default_str();
  bs->add_option("--out", sessions_out)->required();

  // simulate
  std::string sessions_in, agent = "strict", mode = "literal", boost = "max_floor", report_out, transcripts_out;
  PropagationConfig pcfg;
  std::uint64_t sim_seed = 0;
  unsigned threads = 1;
  auto* sim = app.add_subcommand("simulate", "Run simulated users over sessions and report metrics");
  sim->add_option("--graph", graph_in)->required();
  sim->add_option("--scorer", scorer_in)->required();
  sim->add_option("--sessions", sessions_in)->required();
  sim->add_option("--agent", agent)->check(CLI::IsMember({"strict", "ambiguous"}))->capture_default_str();
  sim->add_option("--n", pcfg.n)->capture_default_str();
  sim->add_option("--kmax", pcfg.k_max)->capture_default_str();
  sim->add_option("--mode", mode)->check(CLI::IsMember({"literal", "delta"}))->capture_default_str();
  sim->add_option("--query-boost", boost)->check(CLI::IsMember({"max_floor", "literal_min"}))->capture_default_str();
  sim->add_option("--seed", sim_seed)->capture_default_str();
  sim->add_option("--threads", threads)->capture_default_str();
  sim->add_option("--report", report_out)->required();
  sim->add_option("--transcripts", transcripts_out, "JSON-lines transcript output");

  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* srv = app.add_subcommand("serve", "Serve live sessions over HTTP");
  srv->add_option("--graph", graph_in)->required();
  srv->add_option("--scorer", scorer_in)->required();
  srv->add_option("--catalog", catalog_dir)->required();
  srv->add_option("--host", host)->capture_default_str();
  srv->add_option("--port", port)->capture_default_str();
  srv->add_option("--n", pcfg.n)->capture_default_str();
  srv->add_option("--kmax", pcfg.k_max)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      gen_synthetic(syn, syn_out);
      std::cerr << "wrote " << syn.items << " items for " << syn.users << " users to " << syn_out << "\n";
    } else if (*bg) {
      const auto cat = load_catalog_dir(catalog_dir);
      print_load_summary(cat);
      const auto g = build_graph(cat, gopts);
      save_graph(graph_out, g);
      std::cerr << "graph: " << g.size() << " nodes, " << g.count(Relation::plus) << " R+ edges, "
                << g.count(Relation::minus) << " R- edges\n";
    } else if (*ts) {
      const auto cat = load_catalog_dir(catalog_dir);
      print_load_summary(cat);
      const auto split = split_catalog(cat, min_length);
      if (kind == "popularity") {
        save_scorer(scorer_out, train_popularity(split.train, cat.items.size()));
      } else {
        const auto res = train_matfact(split.train, cat.users.size(), cat.items.size(), mopts);
        std::cerr << "matfact: loss " << res.epoch_loss.front() << " -> " << res.epoch_loss.back() << "\n";
        save_scorer(scorer_out, res.model);
      }
    } else if (*tw) {
      const auto cat = load_catalog_dir(catalog_dir);
      const auto split = split_catalog(cat, min_length);
      const auto g = load_graph(graph_in);
      const auto scorer = load_scorer(scorer_in);
      const auto res = train_weights(g, scorer, split.train, wopts);
      std::cerr << "weights: loss " << res.epoch_loss.front() << " -> " << res.epoch_loss.back() << "\n";
      save_graph(graph_out, g.with_weights(res.weights));
    } else if (*bs) {
      const auto cat = load_catalog_dir(catalog_dir);
      const auto split = split_catalog(cat, min_length);
      const auto sessions = build_sessions(split.test, cat.items.size(), sopts, &split.train);
      write_sessions(sessions_out, sessions);
      std::cerr << "wrote " << sessions.size() << " sessions\n";
    } else if (*sim) {
      pcfg.mode = parse_mode(mode);
      pcfg.query_boost = parse_query_boost(boost);
      const auto g = load_graph(graph_in);
      const auto scorer = load_scorer(scorer_in);
      const auto sessions = read_sessions(sessions_in);
      const std::vector<PropagationConfig> grid{pcfg};
      const auto cells = run_benchmark(g, scorer, sessions, parse_agent(agent), grid, threads);
      auto report = report_json(cells.front().report);
      report["seed"] = sim_seed;
      std::ofstream(report_out) << report.dump(2) << '\n';
      if (!transcripts_out.empty()) {
        std::ofstream out(transcripts_out);
        for (std::size_t s = 0; s < cells.front().transcripts.size(); ++s) {
          write_transcript(out, cells.front().transcripts[s], s);
        }
      }
      std::cout << "RA@" << pcfg.k_max << " " << cells.front().report.ra << "  SA@" << pcfg.k_max << " "
                << cells.front().report.sa << "  SAC " << cells.front().report.sac.value_or(0.0) << "\n";
    } else if (*srv) {
      if (const char* env = std::getenv("MAGUS_PORT")) port = std::stoi(env);
      const auto cat = load_catalog_dir(catalog_dir);
      const auto g = load_graph(graph_in);
      const auto scorer = load_scorer(scorer_in);
      ServiceOptions sopt;
      sopt.defaults = pcfg;
      SessionService service(g, scorer, cat, sopt);
      httplib::Server server;
      service.mount(server);
      std::cerr << "listening on " << host << ":" << port << "\n";
      if (!server.listen(host, port)) {
        std::cerr << "error: cannot bind " << host << ":" << port << "\n";
        return 1;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
