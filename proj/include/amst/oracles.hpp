#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "amst/graph.hpp"

namespace amst {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n = 0);
  std::uint32_t find(std::uint32_t x);
  // Returns false if x and y were already joined.
  bool unite(std::uint32_t x, std::uint32_t y);
  std::size_t sets() const { return sets_; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint8_t> rank_;
  std::size_t sets_;
};

struct SpanningForest {
  std::vector<EdgeIndex> edges;          // sorted ascending
  std::vector<NodeIndex> component;      // representative per node
  std::size_t components = 0;
  bool connected() const { return components <= 1; }
};

// Minimum spanning forest by Kruskal. For connected inputs this is the MST.
SpanningForest kruskalMsf(const WeightedGraph& g);
// Same restricted to a subset of edges (mask indexed by EdgeIndex).
SpanningForest kruskalMsf(const WeightedGraph& g, const std::vector<bool>& edgeMask);
// Independent second route: lazy Prim from every unvisited node.
SpanningForest primMsf(const WeightedGraph& g);

inline constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

struct BfsResult {
  std::vector<std::uint32_t> distance;  // kUnreachable when not connected
  std::uint32_t eccentricity = 0;
  bool allReached = true;
};

BfsResult oracleBfs(const WeightedGraph& g, NodeIndex source);
BfsResult oracleBfs(const WeightedGraph& g, NodeIndex source, const std::vector<bool>& edgeMask);
// All-sources sweep; kUnreachable for disconnected graphs.
std::uint32_t diameter(const WeightedGraph& g);

// Properties of an edge set viewed as a forest.
bool isAcyclic(const WeightedGraph& g, std::span<const EdgeIndex> edges);
bool isSpanningTree(const WeightedGraph& g, std::span<const EdgeIndex> edges);
// Hop diameter of every tree of a forest, summed.
std::uint64_t sumTreeDiameters(const WeightedGraph& g, std::span<const EdgeIndex> forest);

}  // namespace amst
