#include "toxsim/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "toxsim/rng.hpp"

namespace toxsim {

namespace {

constexpr std::uint64_t kErStreamTag = 0x4552u;  // graph generation stream

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("edge list line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

DirectedGraph DirectedGraph::from_edges(std::size_t node_count,
                                        std::vector<std::pair<NodeId, NodeId>> edges) {
  for (const auto& [u, v] : edges) {
    if (u >= node_count || v >= node_count)
      throw std::invalid_argument("edge endpoint out of range");
    if (u == v) throw std::invalid_argument("self-loops are not allowed");
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw std::invalid_argument("parallel edges are not allowed");

  DirectedGraph g;
  g.node_count_ = node_count;
  g.out_offsets_.assign(node_count + 1, 0);
  g.in_offsets_.assign(node_count + 1, 0);
  for (const auto& [u, v] : edges) {
    ++g.out_offsets_[u + 1];
    ++g.in_offsets_[v + 1];
  }
  for (std::size_t i = 1; i <= node_count; ++i) {
    g.out_offsets_[i] += g.out_offsets_[i - 1];
    g.in_offsets_[i] += g.in_offsets_[i - 1];
  }
  g.out_targets_.resize(edges.size());
  g.in_sources_.resize(edges.size());
  std::vector<std::uint64_t> out_pos(g.out_offsets_.begin(), g.out_offsets_.end() - 1);
  std::vector<std::uint64_t> in_pos(g.in_offsets_.begin(), g.in_offsets_.end() - 1);
  for (const auto& [u, v] : edges) {
    g.out_targets_[out_pos[u]++] = v;
    g.in_sources_[in_pos[v]++] = u;
  }
  // edges were sorted by (src, dst) so out lists are already ascending; in
  // lists are filled in ascending source order per target.
  return g;
}

std::span<const NodeId> DirectedGraph::out_neighbors(NodeId u) const {
  if (u >= node_count_) throw std::out_of_range("node id out of range");
  return {out_targets_.data() + out_offsets_[u],
          static_cast<std::size_t>(out_offsets_[u + 1] - out_offsets_[u])};
}

std::span<const NodeId> DirectedGraph::in_neighbors(NodeId v) const {
  if (v >= node_count_) throw std::out_of_range("node id out of range");
  return {in_sources_.data() + in_offsets_[v],
          static_cast<std::size_t>(in_offsets_[v + 1] - in_offsets_[v])};
}

bool DirectedGraph::has_edge(NodeId u, NodeId v) const {
  auto nbrs = out_neighbors(u);
  return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

std::vector<std::pair<NodeId, NodeId>> DirectedGraph::edges() const {
  std::vector<std::pair<NodeId, NodeId>> result;
  result.reserve(edge_count());
  for (NodeId u = 0; u < node_count_; ++u)
    for (NodeId v : out_neighbors(u)) result.emplace_back(u, v);
  return result;
}

DirectedGraph generate_er(std::size_t node_count, double edge_probability, std::uint64_t seed) {
  if (node_count == 0) throw std::invalid_argument("node count must be at least 1");
  if (!(edge_probability >= 0.0 && edge_probability <= 1.0))
    throw std::invalid_argument("edge probability must lie in [0, 1]");

  std::vector<std::pair<NodeId, NodeId>> edges;
  if (edge_probability > 0.0 && node_count > 1) {
    const std::uint64_t stride = node_count - 1;  // pairs per source node
    const std::uint64_t total = static_cast<std::uint64_t>(node_count) * stride;
    edges.reserve(static_cast<std::size_t>(
        static_cast<double>(total) * edge_probability * 1.05) + 16);

    RngStream rng(derive_key(seed, kErStreamTag));
    const double log_q = std::log1p(-edge_probability);  // -inf when p == 1
    std::uint64_t index = 0;
    bool first = true;
    while (true) {
      const double u = rng.uniform01();
      const double skip = std::floor(std::log1p(-u) / log_q);
      if (skip >= static_cast<double>(total)) break;
      index += static_cast<std::uint64_t>(skip) + (first ? 0 : 1);
      first = false;
      if (index >= total) break;
      const NodeId src = static_cast<NodeId>(index / stride);
      const std::uint64_t r = index % stride;
      const NodeId dst = static_cast<NodeId>(r + (r >= src ? 1 : 0));
      edges.emplace_back(src, dst);
    }
  }
  return DirectedGraph::from_edges(node_count, std::move(edges));
}

IdMap IdMap::identity(std::size_t n) {
  IdMap map;
  map.internal_to_external.resize(n);
  map.external_to_internal.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    map.internal_to_external[i] = i;
    map.external_to_internal.emplace(i, static_cast<NodeId>(i));
  }
  return map;
}

LoadedGraph load_edge_list(std::istream& in, const EdgeListOptions& opts) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> raw;
  std::string line;
  std::size_t line_no = 0;
  std::size_t self_loops = 0;

  auto parse_id = [&](const char* begin, const char* end, std::uint64_t& out) {
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{}) parse_fail(line_no, "expected a non-negative integer id");
    return ptr;
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::size_t pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;

    const char* cur = line.data() + pos;
    const char* end = line.data() + line.size();
    std::uint64_t src = 0, dst = 0;
    cur = parse_id(cur, end, src);
    while (cur != end && (*cur == ' ' || *cur == '\t')) ++cur;
    if (cur == end) parse_fail(line_no, "expected \"src dst\"");
    cur = parse_id(cur, end, dst);
    while (cur != end && (*cur == ' ' || *cur == '\t' || *cur == '\r')) ++cur;
    if (cur != end) parse_fail(line_no, "trailing characters after edge");

    if (src == dst) {
      if (!opts.drop_self_loops) parse_fail(line_no, "self-loop is not allowed");
      ++self_loops;
      continue;
    }
    raw.emplace_back(src, dst);
  }

  // Dense remap in ascending external-id order.
  std::vector<std::uint64_t> ids;
  ids.reserve(raw.size() * 2);
  for (const auto& [s, d] : raw) {
    ids.push_back(s);
    ids.push_back(d);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  LoadedGraph result;
  result.self_loops_dropped = self_loops;
  result.ids.internal_to_external = ids;
  result.ids.external_to_internal.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i)
    result.ids.external_to_internal.emplace(ids[i], static_cast<NodeId>(i));

  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(raw.size());
  for (const auto& [s, d] : raw)
    edges.emplace_back(result.ids.external_to_internal.at(s),
                       result.ids.external_to_internal.at(d));
  std::sort(edges.begin(), edges.end());
  const auto unique_end = std::unique(edges.begin(), edges.end());
  result.duplicates_dropped = static_cast<std::size_t>(edges.end() - unique_end);
  edges.erase(unique_end, edges.end());

  result.graph = DirectedGraph::from_edges(ids.size(), std::move(edges));
  return result;
}

void save_edge_list(const DirectedGraph& g, std::ostream& out) {
  for (NodeId u = 0; u < g.node_count(); ++u)
    for (NodeId v : g.out_neighbors(u)) out << u << ' ' << v << '\n';
}

void save_id_map(const IdMap& ids, std::ostream& out) {
  for (std::size_t i = 0; i < ids.internal_to_external.size(); ++i)
    out << ids.internal_to_external[i] << ' ' << i << '\n';
}

IdMap load_id_map(std::istream& in) {
  IdMap map;
  std::uint64_t external = 0, internal = 0;
  while (in >> external >> internal) {
    if (internal != map.internal_to_external.size())
      throw std::runtime_error("id map internal ids must be dense and ascending");
    map.internal_to_external.push_back(external);
    map.external_to_internal.emplace(external, static_cast<NodeId>(internal));
  }
  return map;
}

}  // namespace toxsim
