#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "amst/types.hpp"

namespace amst {

using NodeIndex = std::uint32_t;
using EdgeIndex = std::uint32_t;

struct Edge {
  NodeIndex a = 0;  // endpoint with the larger ID
  NodeIndex b = 0;  // endpoint with the smaller ID
  Weight w = 0;
};

struct Adjacency {
  NodeIndex nbr;
  EdgeIndex edge;
};

struct EdgeInput {
  NodeIndex a;
  NodeIndex b;
  Weight w;
};

// Immutable undirected simple graph. Nodes are addressed by dense index
// internally and carry unique external IDs; adjacency lists are sorted by
// neighbour ID.
class WeightedGraph {
 public:
  WeightedGraph() = default;

  // Throws std::invalid_argument on self-loops, parallel edges, duplicate IDs,
  // zero weights or out-of-range endpoints. Weights need not be unique.
  WeightedGraph(std::vector<NodeId> ids, const std::vector<EdgeInput>& edges);

  std::size_t nodeCount() const { return ids_.size(); }
  std::size_t edgeCount() const { return edges_.size(); }

  NodeId id(NodeIndex v) const { return ids_[v]; }
  std::span<const NodeId> ids() const { return ids_; }
  NodeId maxId() const { return maxId_; }

  const Edge& edge(EdgeIndex e) const { return edges_[e]; }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const Adjacency> neighbors(NodeIndex v) const {
    return {adj_.data() + offsets_[v], adj_.data() + offsets_[v + 1]};
  }
  std::size_t degree(NodeIndex v) const { return offsets_[v + 1] - offsets_[v]; }

  // Returns nodeCount() when the ID is unknown.
  NodeIndex indexOf(NodeId id) const;
  // Returns edgeCount() when the nodes are not adjacent.
  EdgeIndex findEdge(NodeIndex u, NodeIndex v) const;

  bool weightsUnique() const;
  Weight totalWeight(std::span<const EdgeIndex> edges) const;

 private:
  std::vector<NodeId> ids_;
  std::vector<NodeIndex> byId_;  // node indices sorted by ID
  NodeId maxId_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Adjacency> adj_;
};

// w' = w * 2^(2|ID|) + x * 2^|ID| + y with x > y the endpoint IDs and |ID|
// the bit length of the largest ID. Throws std::overflow_error if w' would
// not fit.
WeightedGraph makeWeightsUnique(const WeightedGraph& g);
Weight uniqueWeight(Weight w, NodeId x, NodeId y, int idBits);

enum class Family { Gnp, Complete, Path, Grid, Barbell };

struct FamilySpec {
  Family family = Family::Gnp;
  double p = 0.5;

  // "gnp:0.3", "complete", "path", "grid", "barbell"
  static FamilySpec parse(const std::string& text);
  std::string str() const;
};

struct GeneratedGraph {
  WeightedGraph graph;
  bool repaired = false;  // a random spanning tree was added to connect it
};

// Deterministic for fixed (spec, n, seed). Throws std::invalid_argument for
// n < 1 or p outside (0, 1].
GeneratedGraph generateGraph(const FamilySpec& spec, std::size_t n, std::uint64_t seed);

// Plain-text format: "n m" then one "u v w" line per edge (IDs and weight in
// decimal). The node set is the set of IDs mentioned; it must have size n.
WeightedGraph readGraph(std::istream& in);
void writeGraph(std::ostream& out, const WeightedGraph& g);

}  // namespace amst
