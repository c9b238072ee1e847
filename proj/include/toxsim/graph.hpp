#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace toxsim {

using NodeId = std::uint32_t;

// Immutable directed graph over dense node ids with CSR adjacency in both
// directions. No self-loops, no parallel edges; adjacency lists sorted
// ascending. Read-only after construction and shareable across threads.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  // Validates ids, rejects self-loops and duplicate edges.
  static DirectedGraph from_edges(std::size_t node_count,
                                  std::vector<std::pair<NodeId, NodeId>> edges);

  std::size_t node_count() const noexcept { return node_count_; }
  std::size_t edge_count() const noexcept { return out_targets_.size(); }

  std::span<const NodeId> out_neighbors(NodeId u) const;
  std::span<const NodeId> in_neighbors(NodeId v) const;
  std::size_t outdegree(NodeId u) const { return out_neighbors(u).size(); }
  std::size_t indegree(NodeId v) const { return in_neighbors(v).size(); }

  bool has_edge(NodeId u, NodeId v) const;

  // All edges ordered by (src, dst).
  std::vector<std::pair<NodeId, NodeId>> edges() const;

 private:
  std::size_t node_count_ = 0;
  std::vector<std::uint64_t> out_offsets_{0};
  std::vector<std::uint64_t> in_offsets_{0};
  std::vector<NodeId> out_targets_;
  std::vector<NodeId> in_sources_;
};

// G(n, p): each ordered pair (u, v), u != v, is an edge independently with
// probability p. Deterministic for a fixed seed. O(edges) via geometric gap
// sampling over the pair index space.
DirectedGraph generate_er(std::size_t node_count, double edge_probability, std::uint64_t seed);

// External-id <-> dense internal-id mapping persisted alongside loaded graphs.
struct IdMap {
  std::vector<std::uint64_t> internal_to_external;
  std::unordered_map<std::uint64_t, NodeId> external_to_internal;

  bool empty() const noexcept { return internal_to_external.empty(); }
  static IdMap identity(std::size_t n);
};

struct EdgeListOptions {
  // When false (default) a self-loop line is a validation error; when true
  // self-loops are dropped and counted.
  bool drop_self_loops = false;
};

struct LoadedGraph {
  DirectedGraph graph;
  IdMap ids;
  std::size_t duplicates_dropped = 0;
  std::size_t self_loops_dropped = 0;
};

// Text edge list: one "src dst" pair of decimal ids per line, optional '#'
// comments, blank lines ignored. External ids are remapped to dense internal
// ids in ascending external order; duplicate edges collapse.
LoadedGraph load_edge_list(std::istream& in, const EdgeListOptions& opts = {});

// Writes internal ids, one edge per line, ordered by (src, dst).
void save_edge_list(const DirectedGraph& g, std::ostream& out);

// Sidecar format: "external_id internal_id" per line.
void save_id_map(const IdMap& ids, std::ostream& out);
IdMap load_id_map(std::istream& in);

}  // namespace toxsim
