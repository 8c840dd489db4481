#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "amst/graph.hpp"
#include "amst/oracles.hpp"

using namespace amst;

namespace {

WeightedGraph triangle() { return WeightedGraph({1, 2, 3}, {{0, 1, 1}, {1, 2, 2}, {0, 2, 3}}); }

std::vector<Weight> weightsOf(const WeightedGraph& g, const std::vector<EdgeIndex>& es) {
  std::vector<Weight> w;
  for (EdgeIndex e : es) w.push_back(g.edge(e).w);
  std::sort(w.begin(), w.end());
  return w;
}

}  // namespace

TEST_CASE("unique weight formula") {
  CHECK(uniqueWeight(5, 3, 2, 2) == 94);
  CHECK(uniqueWeight(7, 9, 4, 4) != uniqueWeight(7, 9, 5, 4));
  CHECK(uniqueWeight(7, 9, 4, 4) < uniqueWeight(8, 2, 1, 4));
}

TEST_CASE("makeWeightsUnique keeps the order of distinct weights") {
  const auto gen = generateGraph(FamilySpec::parse("gnp:0.4"), 20, 11);
  std::vector<EdgeInput> in;
  std::vector<NodeId> ids(gen.graph.ids().begin(), gen.graph.ids().end());
  for (const auto& e : gen.graph.edges()) in.push_back({e.a, e.b, static_cast<Weight>(e.w % 7 + 1)});
  const WeightedGraph dup(ids, in);
  CHECK_FALSE(dup.weightsUnique());
  const WeightedGraph u = makeWeightsUnique(dup);
  CHECK(u.weightsUnique());
  for (EdgeIndex i = 0; i < dup.edgeCount(); ++i)
    for (EdgeIndex j = 0; j < dup.edgeCount(); ++j)
      if (dup.edge(i).w < dup.edge(j).w) CHECK(u.edge(i).w < u.edge(j).w);
}

TEST_CASE("graph validation") {
  CHECK_THROWS_AS(WeightedGraph({1, 2}, {{0, 0, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(WeightedGraph({1, 2}, {{0, 1, 1}, {1, 0, 2}}), std::invalid_argument);
  CHECK_THROWS_AS(WeightedGraph({1, 1}, {{0, 1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(WeightedGraph({1, 2}, {{0, 1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(WeightedGraph({1, 2}, {{0, 2, 1}}), std::invalid_argument);
}

TEST_CASE("generator families") {
  SUBCASE("complete n=4") {
    const auto g = generateGraph(FamilySpec::parse("complete"), 4, 1).graph;
    CHECK(g.edgeCount() == 6);
  }
  SUBCASE("path n=5") {
    const auto g = generateGraph(FamilySpec::parse("path"), 5, 1).graph;
    CHECK(g.edgeCount() == 4);
    CHECK(diameter(g) == 4);
  }
  SUBCASE("grid 8x8") {
    const auto g = generateGraph(FamilySpec::parse("grid"), 64, 1).graph;
    CHECK(g.edgeCount() == 112);
    CHECK(diameter(g) == 14);
  }
  SUBCASE("barbell is connected") {
    const auto g = generateGraph(FamilySpec::parse("barbell"), 40, 3).graph;
    CHECK(kruskalMsf(g).connected());
  }
  SUBCASE("gnp is reproducible") {
    const auto a = generateGraph(FamilySpec::parse("gnp:0.5"), 64, 1).graph;
    const auto b = generateGraph(FamilySpec::parse("gnp:0.5"), 64, 1).graph;
    REQUIRE(a.edgeCount() == b.edgeCount());
    for (EdgeIndex e = 0; e < a.edgeCount(); ++e) {
      CHECK(a.edge(e).a == b.edge(e).a);
      CHECK(a.edge(e).b == b.edge(e).b);
      CHECK(a.edge(e).w == b.edge(e).w);
    }
    CHECK(std::equal(a.ids().begin(), a.ids().end(), b.ids().begin()));
    CHECK(a.weightsUnique());
  }
  SUBCASE("sparse gnp is repaired into a connected graph") {
    const auto gen = generateGraph(FamilySpec::parse("gnp:0.01"), 50, 2);
    CHECK(gen.repaired);
    CHECK(kruskalMsf(gen.graph).connected());
  }
  CHECK_THROWS(FamilySpec::parse("lattice"));
}

TEST_CASE("family names round-trip") {
  for (const char* s : {"complete", "path", "grid", "barbell"}) CHECK(FamilySpec::parse(s).str() == s);
  CHECK(FamilySpec::parse(FamilySpec::parse("gnp:0.3").str()).p == doctest::Approx(0.3));
}

TEST_CASE("oracle MST") {
  SUBCASE("triangle") {
    const auto g = triangle();
    CHECK(weightsOf(g, kruskalMsf(g).edges) == std::vector<Weight>{1, 2});
    CHECK(weightsOf(g, primMsf(g).edges) == std::vector<Weight>{1, 2});
  }
  SUBCASE("path") {
    const auto g = generateGraph(FamilySpec::parse("path"), 9, 4).graph;
    CHECK(kruskalMsf(g).edges.size() == 8);
  }
  SUBCASE("Kruskal and Prim agree") {
    for (std::uint64_t seed : {7u, 8u, 9u}) {
      const auto g = generateGraph(FamilySpec::parse("gnp:0.3"), 32, seed).graph;
      const auto k = kruskalMsf(g);
      CHECK(k.edges == primMsf(g).edges);
      CHECK(isSpanningTree(g, k.edges));
    }
  }
  SUBCASE("masked forest") {
    const auto g = triangle();
    std::vector<bool> mask{false, true, true};
    const auto f = kruskalMsf(g, mask);
    CHECK(weightsOf(g, f.edges) == std::vector<Weight>{2, 3});
  }
  SUBCASE("disconnected input gives a forest") {
    const WeightedGraph g({1, 2, 3, 4}, {{0, 1, 5}, {2, 3, 6}});
    const auto f = kruskalMsf(g);
    CHECK(f.components == 2);
    CHECK(f.edges.size() == 2);
  }
}

TEST_CASE("oracle BFS") {
  const auto path = generateGraph(FamilySpec::parse("path"), 5, 1).graph;
  NodeIndex end = 0;
  for (NodeIndex v = 0; v < path.nodeCount(); ++v)
    if (path.degree(v) == 1) end = v;
  const auto r = oracleBfs(path, end);
  auto d = r.distance;
  std::sort(d.begin(), d.end());
  CHECK(d == std::vector<std::uint32_t>{0, 1, 2, 3, 4});
  CHECK(r.eccentricity == 4);

  const auto k = generateGraph(FamilySpec::parse("complete"), 12, 1).graph;
  for (auto x : oracleBfs(k, 3).distance) CHECK(x <= 1);
  CHECK(diameter(k) == 1);

  const WeightedGraph split({1, 2, 3}, {{0, 1, 1}});
  const auto s = oracleBfs(split, 0);
  CHECK_FALSE(s.allReached);
  CHECK(s.distance[2] == kUnreachable);
  CHECK(diameter(split) == kUnreachable);
}

TEST_CASE("forest properties") {
  const auto g = generateGraph(FamilySpec::parse("path"), 6, 1).graph;
  std::vector<EdgeIndex> all(g.edgeCount());
  std::iota(all.begin(), all.end(), 0);
  CHECK(isAcyclic(g, all));
  CHECK(isSpanningTree(g, all));
  CHECK(sumTreeDiameters(g, all) == 5);
  CHECK(sumTreeDiameters(g, std::vector<EdgeIndex>{}) == 0);

  const auto t = triangle();
  CHECK_FALSE(isAcyclic(t, std::vector<EdgeIndex>{0, 1, 2}));
}

TEST_CASE("graph text format round-trips") {
  const auto g = generateGraph(FamilySpec::parse("gnp:0.3"), 16, 5).graph;
  std::stringstream ss;
  writeGraph(ss, g);
  const auto h = readGraph(ss);
  REQUIRE(h.edgeCount() == g.edgeCount());
  CHECK(kruskalMsf(h).edges.size() == kruskalMsf(g).edges.size());
  CHECK(h.totalWeight(kruskalMsf(h).edges) == g.totalWeight(kruskalMsf(g).edges));
}
