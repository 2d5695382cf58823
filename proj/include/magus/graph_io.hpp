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

// Graph snapshot, little-endian:
//
//   "MGGR" u32 version
//   u32 item_count
//   u32 node_count, then per node:
//     u8 kind, u32 n_words, u32 words[n_words], u32 n_items, u32 items[n_items]
//   u32 edge_count, then per edge:
//     u32 a, u32 b, u8 rel, f64 weight

#ifndef MAGUS_GRAPH_IO_HPP_
#define MAGUS_GRAPH_IO_HPP_

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include "magus/common.hpp"
#include "magus/graph.hpp"

namespace magus {

inline constexpr std::uint32_t kGraphSnapshotVersion = 1;

inline void write_graph(std::ostream& out, const RelationalGraph& g) {
  using binio::write_pod;
  binio::write_magic(out, "MGGR", kGraphSnapshotVersion);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(g.item_count()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(g.size()));
  for (const auto& n : g.nodes()) {
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(n.kind));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(n.words.size()));
    for (WordId w : n.words) write_pod<std::uint32_t>(out, w);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(n.items.size()));
    for (ItemId i : n.items) write_pod<std::uint32_t>(out, i);
  }
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(g.edges().size()));
  for (const auto& e : g.edges()) {
    write_pod<std::uint32_t>(out, e.a);
    write_pod<std::uint32_t>(out, e.b);
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(e.rel));
    write_pod<double>(out, e.weight);
  }
}

inline RelationalGraph read_graph(std::istream& in) {
  using binio::read_pod;
  binio::expect_magic(in, "MGGR", kGraphSnapshotVersion);
  const auto item_count = read_pod<std::uint32_t>(in);
  const auto node_count = read_pod<std::uint32_t>(in);
  std::vector<Node> nodes(node_count);
  for (auto& n : nodes) {
    const auto kind = read_pod<std::uint8_t>(in);
    if (kind > static_cast<std::uint8_t>(NodeKind::item)) throw Error("bad node kind in snapshot");
    n.kind = static_cast<NodeKind>(kind);
    n.words.resize(read_pod<std::uint32_t>(in));
    for (auto& w : n.words) w = read_pod<std::uint32_t>(in);
    n.items.resize(read_pod<std::uint32_t>(in));
    for (auto& i : n.items) i = read_pod<std::uint32_t>(in);
  }
  const auto edge_count = read_pod<std::uint32_t>(in);
  std::vector<Edge> edges(edge_count);
  for (auto& e : edges) {
    e.a = read_pod<std::uint32_t>(in);
    e.b = read_pod<std::uint32_t>(in);
    const auto rel = read_pod<std::uint8_t>(in);
    if (rel > static_cast<std::uint8_t>(Relation::minus)) throw Error("bad relation in snapshot");
    e.rel = static_cast<Relation>(rel);
    e.weight = read_pod<double>(in);
  }
  return RelationalGraph(std::move(nodes), std::move(edges), item_count);
}

inline void save_graph(const std::filesystem::path& path, const RelationalGraph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_graph(out, g);
}

inline RelationalGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_graph(in);
}

}  // namespace magus

#endif  // MAGUS_GRAPH_IO_HPP_
