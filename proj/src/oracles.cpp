#include "amst/oracles.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <numeric>
#include <queue>

namespace amst {

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_(n, 0), sets_(n) {
  std::iota(parent_.begin(), parent_.end(), 0u);
}

std::uint32_t UnionFind::find(std::uint32_t x) {
  while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
  return x;
}

bool UnionFind::unite(std::uint32_t x, std::uint32_t y) {
  x = find(x);
  y = find(y);
  if (x == y) return false;
  if (rank_[x] < rank_[y]) std::swap(x, y);
  parent_[y] = x;
  if (rank_[x] == rank_[y]) ++rank_[x];
  --sets_;
  return true;
}

namespace {

SpanningForest finish(const WeightedGraph& g, std::vector<EdgeIndex> edges) {
  SpanningForest out;
  std::sort(edges.begin(), edges.end());
  UnionFind uf(g.nodeCount());
  for (EdgeIndex e : edges) uf.unite(g.edge(e).a, g.edge(e).b);
  out.edges = std::move(edges);
  out.component.resize(g.nodeCount());
  for (NodeIndex v = 0; v < g.nodeCount(); ++v) out.component[v] = uf.find(v);
  out.components = uf.sets();
  return out;
}

}  // namespace

SpanningForest kruskalMsf(const WeightedGraph& g, const std::vector<bool>& edgeMask) {
  std::vector<EdgeIndex> order;
  for (EdgeIndex e = 0; e < g.edgeCount(); ++e)
    if (edgeMask.empty() || edgeMask[e]) order.push_back(e);
  std::sort(order.begin(), order.end(), [&](EdgeIndex x, EdgeIndex y) { return g.edge(x).w < g.edge(y).w; });
  UnionFind uf(g.nodeCount());
  std::vector<EdgeIndex> chosen;
  for (EdgeIndex e : order)
    if (uf.unite(g.edge(e).a, g.edge(e).b)) chosen.push_back(e);
  return finish(g, std::move(chosen));
}

SpanningForest kruskalMsf(const WeightedGraph& g) { return kruskalMsf(g, {}); }

SpanningForest primMsf(const WeightedGraph& g) {
  const std::size_t n = g.nodeCount();
  std::vector<bool> inTree(n, false);
  std::vector<EdgeIndex> chosen;
  using Item = std::pair<Weight, EdgeIndex>;
  for (NodeIndex root = 0; root < n; ++root) {
    if (inTree[root]) continue;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    auto add = [&](NodeIndex v) {
      inTree[v] = true;
      for (const auto& a : g.neighbors(v))
        if (!inTree[a.nbr]) heap.emplace(g.edge(a.edge).w, a.edge);
    };
    add(root);
    while (!heap.empty()) {
      auto [w, e] = heap.top();
      heap.pop();
      const Edge& ed = g.edge(e);
      NodeIndex next = inTree[ed.a] ? ed.b : ed.a;
      if (inTree[next]) continue;
      chosen.push_back(e);
      add(next);
    }
  }
  return finish(g, std::move(chosen));
}

BfsResult oracleBfs(const WeightedGraph& g, NodeIndex source, const std::vector<bool>& edgeMask) {
  BfsResult out;
  out.distance.assign(g.nodeCount(), kUnreachable);
  std::deque<NodeIndex> queue{source};
  out.distance[source] = 0;
  while (!queue.empty()) {
    NodeIndex v = queue.front();
    queue.pop_front();
    for (const auto& a : g.neighbors(v)) {
      if (!edgeMask.empty() && !edgeMask[a.edge]) continue;
      if (out.distance[a.nbr] != kUnreachable) continue;
      out.distance[a.nbr] = out.distance[v] + 1;
      out.eccentricity = std::max(out.eccentricity, out.distance[a.nbr]);
      queue.push_back(a.nbr);
    }
  }
  out.allReached = std::none_of(out.distance.begin(), out.distance.end(),
                                [](std::uint32_t d) { return d == kUnreachable; });
  return out;
}

BfsResult oracleBfs(const WeightedGraph& g, NodeIndex source) { return oracleBfs(g, source, {}); }

std::uint32_t diameter(const WeightedGraph& g) {
  std::uint32_t best = 0;
  for (NodeIndex v = 0; v < g.nodeCount(); ++v) {
    auto r = oracleBfs(g, v);
    if (!r.allReached) return kUnreachable;
    best = std::max(best, r.eccentricity);
  }
  return best;
}

bool isAcyclic(const WeightedGraph& g, std::span<const EdgeIndex> edges) {
  UnionFind uf(g.nodeCount());
  for (EdgeIndex e : edges)
    if (!uf.unite(g.edge(e).a, g.edge(e).b)) return false;
  return true;
}

bool isSpanningTree(const WeightedGraph& g, std::span<const EdgeIndex> edges) {
  return edges.size() + 1 == g.nodeCount() && isAcyclic(g, edges);
}

std::uint64_t sumTreeDiameters(const WeightedGraph& g, std::span<const EdgeIndex> forest) {
  std::vector<bool> mask(g.edgeCount(), false);
  for (EdgeIndex e : forest) mask[e] = true;
  std::vector<bool> touched(g.nodeCount(), false);
  for (EdgeIndex e : forest) touched[g.edge(e).a] = touched[g.edge(e).b] = true;
  std::vector<bool> seen(g.nodeCount(), false);
  std::uint64_t total = 0;
  for (NodeIndex v = 0; v < g.nodeCount(); ++v) {
    if (!touched[v] || seen[v]) continue;
    // Double sweep is exact on trees.
    auto first = oracleBfs(g, v, mask);
    NodeIndex far = v;
    for (NodeIndex u = 0; u < g.nodeCount(); ++u) {
      if (first.distance[u] == kUnreachable) continue;
      seen[u] = true;
      if (first.distance[u] > first.distance[far]) far = u;
    }
    total += oracleBfs(g, far, mask).eccentricity;
  }
  return total;
}

}  // namespace amst
