#include "amst/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace amst {

WeightedGraph::WeightedGraph(std::vector<NodeId> ids, const std::vector<EdgeInput>& edges)
    : ids_(std::move(ids)) {
  const std::size_t n = ids_.size();
  byId_.resize(n);
  std::iota(byId_.begin(), byId_.end(), NodeIndex{0});
  std::sort(byId_.begin(), byId_.end(), [&](NodeIndex x, NodeIndex y) { return ids_[x] < ids_[y]; });
  for (std::size_t i = 0; i < n; ++i) {
    if (ids_[byId_[i]] == 0) throw std::invalid_argument("node IDs must be positive");
    if (i > 0 && ids_[byId_[i]] == ids_[byId_[i - 1]]) throw std::invalid_argument("duplicate node ID");
  }
  maxId_ = n == 0 ? 0 : ids_[byId_.back()];

  edges_.reserve(edges.size());
  std::vector<std::size_t> deg(n, 0);
  for (const auto& in : edges) {
    if (in.a >= n || in.b >= n) throw std::invalid_argument("edge endpoint out of range");
    if (in.a == in.b) throw std::invalid_argument("self-loop");
    if (in.w == 0) throw std::invalid_argument("edge weights must be positive");
    Edge e{in.a, in.b, in.w};
    if (ids_[e.a] < ids_[e.b]) std::swap(e.a, e.b);
    edges_.push_back(e);
    ++deg[e.a];
    ++deg[e.b];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + deg[v];
  adj_.resize(offsets_[n]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (EdgeIndex e = 0; e < edges_.size(); ++e) {
    adj_[fill[edges_[e].a]++] = {edges_[e].b, e};
    adj_[fill[edges_[e].b]++] = {edges_[e].a, e};
  }
  for (std::size_t v = 0; v < n; ++v) {
    auto first = adj_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]);
    auto last = adj_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]);
    std::sort(first, last, [&](const Adjacency& x, const Adjacency& y) { return ids_[x.nbr] < ids_[y.nbr]; });
    for (auto it = first; it + 1 < last; ++it) {
      if (it->nbr == (it + 1)->nbr) throw std::invalid_argument("parallel edge");
    }
  }
}

NodeIndex WeightedGraph::indexOf(NodeId id) const {
  auto it = std::lower_bound(byId_.begin(), byId_.end(), id,
                             [&](NodeIndex v, NodeId key) { return ids_[v] < key; });
  if (it == byId_.end() || ids_[*it] != id) return static_cast<NodeIndex>(nodeCount());
  return *it;
}

EdgeIndex WeightedGraph::findEdge(NodeIndex u, NodeIndex v) const {
  auto nb = neighbors(u);
  const NodeId target = ids_[v];
  auto it = std::lower_bound(nb.begin(), nb.end(), target,
                             [&](const Adjacency& a, NodeId key) { return ids_[a.nbr] < key; });
  if (it == nb.end() || it->nbr != v) return static_cast<EdgeIndex>(edgeCount());
  return it->edge;
}

bool WeightedGraph::weightsUnique() const {
  std::vector<Weight> ws;
  ws.reserve(edges_.size());
  for (const auto& e : edges_) ws.push_back(e.w);
  std::sort(ws.begin(), ws.end());
  return std::adjacent_find(ws.begin(), ws.end()) == ws.end();
}

Weight WeightedGraph::totalWeight(std::span<const EdgeIndex> edges) const {
  Weight total = 0;
  for (EdgeIndex e : edges) total += edges_[e].w;
  return total;
}

Weight uniqueWeight(Weight w, NodeId x, NodeId y, int idBits) {
  if (x < y) std::swap(x, y);
  if (bitLength(w) + 2 * idBits > 126) throw std::overflow_error("unique weight does not fit in 126 bits");
  return (w << (2 * idBits)) + (Weight{x} << idBits) + Weight{y};
}

WeightedGraph makeWeightsUnique(const WeightedGraph& g) {
  const int idBits = bitLength(g.maxId());
  std::vector<EdgeInput> edges;
  edges.reserve(g.edgeCount());
  for (const auto& e : g.edges()) {
    edges.push_back({e.a, e.b, uniqueWeight(e.w, g.id(e.a), g.id(e.b), idBits)});
  }
  return WeightedGraph(std::vector<NodeId>(g.ids().begin(), g.ids().end()), edges);
}

FamilySpec FamilySpec::parse(const std::string& text) {
  FamilySpec spec;
  auto colon = text.find(':');
  std::string name = text.substr(0, colon);
  if (name == "gnp") {
    spec.family = Family::Gnp;
    if (colon == std::string::npos) throw std::invalid_argument("gnp needs a probability, e.g. gnp:0.3");
    spec.p = std::stod(text.substr(colon + 1));
    if (!(spec.p > 0.0 && spec.p <= 1.0)) throw std::invalid_argument("gnp probability must lie in (0, 1]");
  } else if (name == "complete") {
    spec.family = Family::Complete;
  } else if (name == "path") {
    spec.family = Family::Path;
  } else if (name == "grid") {
    spec.family = Family::Grid;
  } else if (name == "barbell") {
    spec.family = Family::Barbell;
  } else {
    throw std::invalid_argument("unknown graph family: " + text);
  }
  return spec;
}

std::string FamilySpec::str() const {
  switch (family) {
    case Family::Gnp: {
      std::ostringstream os;
      os << "gnp:" << p;
      return os.str();
    }
    case Family::Complete: return "complete";
    case Family::Path: return "path";
    case Family::Grid: return "grid";
    case Family::Barbell: return "barbell";
  }
  return "?";
}

namespace {

std::vector<NodeId> drawIds(std::size_t n, std::mt19937_64& rng) {
  const auto nn = static_cast<unsigned long long>(n);
  const unsigned long long hi = std::max<unsigned long long>(nn * nn * nn, nn);
  std::uniform_int_distribution<unsigned long long> pick(1, hi);
  std::unordered_set<NodeId> seen;
  std::vector<NodeId> ids;
  ids.reserve(n);
  while (ids.size() < n) {
    NodeId id = pick(rng);
    if (seen.insert(id).second) ids.push_back(id);
  }
  return ids;
}

using PairList = std::vector<std::pair<NodeIndex, NodeIndex>>;

PairList structure(const FamilySpec& spec, std::size_t n, std::mt19937_64& rng) {
  PairList pairs;
  auto clique = [&](NodeIndex from, NodeIndex to) {
    for (NodeIndex i = from; i < to; ++i)
      for (NodeIndex j = i + 1; j < to; ++j) pairs.emplace_back(i, j);
  };
  switch (spec.family) {
    case Family::Complete:
      clique(0, static_cast<NodeIndex>(n));
      break;
    case Family::Path:
      for (NodeIndex i = 0; i + 1 < n; ++i) pairs.emplace_back(i, i + 1);
      break;
    case Family::Grid: {
      const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)) - 1e-9));
      for (std::size_t i = 0; i < n; ++i) {
        if ((i % side) + 1 < side && i + 1 < n) pairs.emplace_back(i, i + 1);
        if (i + side < n) pairs.emplace_back(i, i + side);
      }
      break;
    }
    case Family::Barbell: {
      // Two cliques of size n/3 joined by a path through the remaining nodes.
      const auto k = static_cast<NodeIndex>(std::max<std::size_t>(1, n / 3));
      const auto nn = static_cast<NodeIndex>(n);
      clique(0, k);
      clique(nn - k, nn);
      for (NodeIndex i = k - 1; i + 1 <= nn - k; ++i) pairs.emplace_back(i, i + 1);
      break;
    }
    case Family::Gnp: {
      std::bernoulli_distribution coin(spec.p);
      for (NodeIndex i = 0; i < n; ++i)
        for (NodeIndex j = i + 1; j < n; ++j)
          if (coin(rng)) pairs.emplace_back(i, j);
      break;
    }
  }
  return pairs;
}

std::vector<NodeIndex> componentLabels(std::size_t n, const PairList& pairs) {
  std::vector<NodeIndex> parent(n);
  std::iota(parent.begin(), parent.end(), NodeIndex{0});
  auto find = [&](NodeIndex x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (auto [a, b] : pairs) parent[find(a)] = find(b);
  std::vector<NodeIndex> label(n);
  for (NodeIndex v = 0; v < n; ++v) label[v] = find(v);
  return label;
}

// Uniform labelled spanning tree via a random Pruefer sequence.
PairList randomSpanningTree(std::size_t n, std::mt19937_64& rng) {
  PairList tree;
  if (n < 2) return tree;
  if (n == 2) return {{0, 1}};
  std::uniform_int_distribution<NodeIndex> pick(0, static_cast<NodeIndex>(n - 1));
  std::vector<NodeIndex> seq(n - 2);
  for (auto& s : seq) s = pick(rng);
  std::vector<std::size_t> degree(n, 1);
  for (auto s : seq) ++degree[s];
  std::set<NodeIndex> leaves;
  for (NodeIndex v = 0; v < n; ++v)
    if (degree[v] == 1) leaves.insert(v);
  for (auto s : seq) {
    NodeIndex leaf = *leaves.begin();
    leaves.erase(leaves.begin());
    tree.emplace_back(leaf, s);
    if (--degree[s] == 1) leaves.insert(s);
  }
  NodeIndex u = *leaves.begin();
  NodeIndex v = *std::next(leaves.begin());
  tree.emplace_back(u, v);
  return tree;
}

}  // namespace

GeneratedGraph generateGraph(const FamilySpec& spec, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  if (spec.family == Family::Gnp && !(spec.p > 0.0 && spec.p <= 1.0))
    throw std::invalid_argument("gnp probability must lie in (0, 1]");
  std::mt19937_64 rng(mix(seed, 0x67726170680aULL));
  GeneratedGraph out;
  std::vector<NodeId> ids = drawIds(n, rng);
  PairList pairs = structure(spec, n, rng);

  auto labels = componentLabels(n, pairs);
  if (std::any_of(labels.begin(), labels.end(), [&](NodeIndex l) { return l != labels[0]; })) {
    out.repaired = true;
    std::set<std::pair<NodeIndex, NodeIndex>> present;
    for (auto [a, b] : pairs) present.emplace(std::min(a, b), std::max(a, b));
    for (auto [a, b] : randomSpanningTree(n, rng)) {
      if (present.emplace(std::min(a, b), std::max(a, b)).second) pairs.emplace_back(a, b);
    }
  }

  const auto nn = static_cast<unsigned long long>(n);
  std::uniform_int_distribution<unsigned long long> weight(1, std::max<unsigned long long>(1, nn * nn));
  std::vector<EdgeInput> edges;
  edges.reserve(pairs.size());
  for (auto [a, b] : pairs) edges.push_back({a, b, Weight{weight(rng)}});
  out.graph = makeWeightsUnique(WeightedGraph(std::move(ids), edges));
  return out;
}

WeightedGraph readGraph(std::istream& in) {
  std::size_t n = 0, m = 0;
  if (!(in >> n >> m)) throw std::invalid_argument("graph file: missing 'n m' header");
  std::map<NodeId, NodeIndex> index;
  std::vector<NodeId> ids;
  std::vector<EdgeInput> edges;
  edges.reserve(m);
  auto intern = [&](NodeId id) {
    auto [it, fresh] = index.emplace(id, static_cast<NodeIndex>(ids.size()));
    if (fresh) ids.push_back(id);
    return it->second;
  };
  for (std::size_t i = 0; i < m; ++i) {
    NodeId u = 0, v = 0;
    std::string w;
    if (!(in >> u >> v >> w)) throw std::invalid_argument("graph file: truncated edge list");
    edges.push_back({intern(u), intern(v), parseWeight(w)});
  }
  if (ids.size() != n) throw std::invalid_argument("graph file: node count does not match header");
  WeightedGraph g(std::move(ids), edges);
  return g.weightsUnique() ? g : makeWeightsUnique(g);
}

void writeGraph(std::ostream& out, const WeightedGraph& g) {
  out << g.nodeCount() << ' ' << g.edgeCount() << '\n';
  for (const auto& e : g.edges()) out << g.id(e.a) << ' ' << g.id(e.b) << ' ' << toString(e.w) << '\n';
}

}  // namespace amst
