#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "amst/graph.hpp"
#include "amst/primitives.hpp"
#include "amst/sketch.hpp"

using namespace amst;

namespace {

struct Builder {
  std::size_t n;
  std::vector<EdgeInput> edges;
  Weight next = 1;
  explicit Builder(std::size_t nodes) : n(nodes) {}
  void add(NodeIndex a, NodeIndex b) { edges.push_back({a, b, next++}); }
  void add(NodeIndex a, NodeIndex b, Weight w) { edges.push_back({a, b, w}); }
  WeightedGraph build() const {
    std::vector<NodeId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<NodeId>(i + 1);
    return WeightedGraph(ids, edges);
  }
};

std::set<EdgeIndex> cutOf(const WeightedGraph& g, const std::vector<NodeIndex>& members) {
  std::vector<bool> in(g.nodeCount(), false);
  for (auto v : members) in[v] = true;
  std::set<EdgeIndex> cut;
  for (EdgeIndex e = 0; e < g.edgeCount(); ++e)
    if (in[g.edge(e).a] != in[g.edge(e).b]) cut.insert(e);
  return cut;
}

bool sameEdge(const WeightedGraph& g, EdgeIndex e, const SketchEdge& s) {
  const auto& ed = g.edge(e);
  return ed.w == s.w && g.id(ed.a) == s.x && g.id(ed.b) == s.y;
}

FixtureRun fixture(const WeightedGraph& g, std::vector<NodeIndex> members, NodeIndex leader, FixtureOp op,
                   std::uint64_t seed, DelayPolicy policy = DelayPolicy::Unit) {
  FixtureSpec spec;
  spec.members = std::move(members);
  spec.leader = leader;
  spec.seed = seed;
  spec.sched.policy = policy;
  spec.sched.seed = seed;
  return runFixture(g, spec, op);
}

// Connected member set grown from a random leader.
std::vector<NodeIndex> randomFragment(const WeightedGraph& g, std::mt19937_64& rng, std::size_t size) {
  std::vector<NodeIndex> members{static_cast<NodeIndex>(rng() % g.nodeCount())};
  std::vector<bool> in(g.nodeCount(), false);
  in[members[0]] = true;
  while (members.size() < size) {
    std::vector<NodeIndex> frontier;
    for (auto v : members)
      for (const auto& a : g.neighbors(v))
        if (!in[a.nbr]) frontier.push_back(a.nbr);
    if (frontier.empty()) break;
    const NodeIndex pick = frontier[rng() % frontier.size()];
    in[pick] = true;
    members.push_back(pick);
  }
  return members;
}

}  // namespace

TEST_CASE("sketch linearity") {
  const auto e1 = XorSketch::canonical(10, 3, 7);
  const auto e2 = XorSketch::canonical(11, 7, 9);
  CHECK(e1.x == 7);
  CHECK(e1.y == 3);
  XorSketch a(5, XorSketch::levelsFor(16)), b(5, XorSketch::levelsFor(16));
  CHECK(a.empty());
  CHECK(a.decode().status == XorSketch::Status::Empty);
  a.add(e1);
  CHECK(a.decode().status == XorSketch::Status::Decoded);
  CHECK(a.decode().edge == e1);
  a.add(e2);
  b.add(e2);
  a.combine(b);
  CHECK(a.decode().edge == e1);
  a.add(e1);
  CHECK(a.empty());
  CHECK(a.deepestLevel() == -1);
}

TEST_CASE("sketch levels follow the seeded hash") {
  int atLeastOne = 0, total = 4000;
  for (int i = 0; i < total; ++i) {
    const auto e = XorSketch::canonical(static_cast<Weight>(i + 1), 1, 2);
    if (XorSketch::levelOf(99, e, 20) >= 1) ++atLeastOne;
  }
  CHECK(std::abs(atLeastOne / static_cast<double>(total) - 0.5) < 0.05);
}

TEST_CASE("corrupted cell fails validation") {
  XorSketch s(3, 6);
  s.add(XorSketch::canonical(5, 1, 2));
  s.add(XorSketch::canonical(6, 1, 3));
  s.add(XorSketch::canonical(7, 2, 3));
  s.add(XorSketch::canonical(8, 2, 4));
  // some level holds several edges; whatever decodes must be one of the inputs
  const auto r = s.decode();
  if (r.status == XorSketch::Status::Decoded) CHECK(r.edge.w >= 5);
  CHECK(r.status != XorSketch::Status::Empty);
}

TEST_CASE("approximate estimate of an empty set is zero") {
  SketchBundle b(3, XorSketch(1, 8));
  CHECK(approxEstimate(b, 0) == 0);
  CHECK(descend(b).action == DescentStep::Action::Done);
}

TEST_CASE("FindAny on the whole graph is always empty") {
  const auto g = generateGraph(FamilySpec::parse("gnp:0.3"), 24, 3).graph;
  std::vector<NodeIndex> all(g.nodeCount());
  for (NodeIndex v = 0; v < all.size(); ++v) all[v] = v;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto r = fixture(g, all, 0, FixtureOp::FindAny, seed);
    CHECK(r.result.done);
    CHECK(r.result.status == XorSketch::Status::Empty);
  }
}

TEST_CASE("FindAny succeeds often and never returns a non-cut edge") {
  Builder b(6);
  b.add(0, 1);
  b.add(1, 2);
  b.add(0, 3);
  b.add(1, 4);
  b.add(2, 5);
  b.add(3, 4);
  const auto g = b.build();
  const std::vector<NodeIndex> members{0, 1, 2};
  const auto cut = cutOf(g, members);
  int ok = 0, trials = 800;
  for (int t = 0; t < trials; ++t) {
    const auto r = fixture(g, members, 1, FixtureOp::FindAny, 1000 + t, DelayPolicy::UniformRandom);
    REQUIRE(r.result.done);
    if (r.result.status != XorSketch::Status::Decoded) continue;
    ++ok;
    bool inCut = false;
    for (EdgeIndex e : cut) inCut |= sameEdge(g, e, *r.result.edge);
    CHECK(inCut);
    CHECK(r.result.verified);
  }
  CHECK(ok >= trials / 16);
}

TEST_CASE("FindMin returns the lightest cut edge") {
  SUBCASE("single outgoing edge") {
    Builder b(3);
    b.add(0, 1, 4);
    b.add(1, 2, 9);
    const auto g = b.build();
    const auto r = fixture(g, {0, 1}, 0, FixtureOp::FindMin, 7);
    REQUIRE(r.result.edge);
    CHECK(r.result.edge->w == 9);
  }
  SUBCASE("five outgoing edges") {
    Builder b(6);
    b.add(0, 1, 50);
    b.add(1, 2, 51);
    b.add(0, 3, 30);
    b.add(0, 4, 12);
    b.add(1, 4, 44);
    b.add(2, 5, 17);
    b.add(2, 3, 25);
    b.add(3, 4, 1);
    const auto g = b.build();
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto r = fixture(g, {0, 1, 2}, 1, FixtureOp::FindMin, seed, DelayPolicy::AdversarialLag);
      REQUIRE(r.result.edge);
      CHECK(r.result.edge->w == 12);
    }
  }
  SUBCASE("no outgoing edge") {
    Builder b(2);
    b.add(0, 1);
    const auto g = b.build();
    const auto r = fixture(g, {0, 1}, 0, FixtureOp::FindMin, 3);
    CHECK(r.result.done);
    CHECK_FALSE(r.result.edge);
  }
  SUBCASE("random fragments agree with brute force") {
    const auto g = generateGraph(FamilySpec::parse("gnp:0.3"), 64, 5).graph;
    std::mt19937_64 rng(17);
    int agree = 0, trials = 100;
    for (int t = 0; t < trials; ++t) {
      const auto members = randomFragment(g, rng, 1 + rng() % 40);
      const auto cut = cutOf(g, members);
      const auto r = fixture(g, members, members[0], FixtureOp::FindMin, 500 + t, DelayPolicy::UniformRandom);
      REQUIRE(r.result.done);
      if (cut.empty()) {
        agree += !r.result.edge;
        continue;
      }
      EdgeIndex best = *cut.begin();
      for (EdgeIndex e : cut)
        if (g.edge(e).w < g.edge(best).w) best = e;
      agree += r.result.edge && sameEdge(g, best, *r.result.edge);
    }
    CHECK(agree >= 99 * trials / 100);
  }
}

TEST_CASE("ApproxCut estimates the cut size") {
  SUBCASE("no outgoing edges") {
    const auto g = generateGraph(FamilySpec::parse("complete"), 8, 1).graph;
    const auto r = fixture(g, {0, 1, 2, 3, 4, 5, 6, 7}, 0, FixtureOp::ApproxCut, 1);
    CHECK(r.result.done);
    CHECK(r.result.estimate == 0);
  }
  SUBCASE("k = 100 with n = 64") {
    Builder b(64);
    for (NodeIndex i = 0; i + 1 < 10; ++i) b.add(i, i + 1);
    for (NodeIndex i = 0; i < 10; ++i)
      for (NodeIndex j = 10; j < 20; ++j) b.add(i, j);
    for (NodeIndex j = 19; j + 1 < 64; ++j) b.add(j, j + 1);
    const auto g = b.build();
    std::vector<NodeIndex> members{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    REQUIRE(cutOf(g, members).size() == 100);
    int inRange = 0, trials = 200;
    for (int t = 0; t < trials; ++t) {
      const auto r = fixture(g, members, 0, FixtureOp::ApproxCut, 77 + t);
      REQUIRE(r.result.done);
      CHECK(r.result.filteredEdges == 118);  // 100 cut edges + both ends of 9 internal ones
      inRange += r.result.estimate >= 4 && r.result.estimate <= 100;
    }
    CHECK(inRange >= 95 * trials / 100);
  }
}

TEST_CASE("threshold detection") {
  // members 0..3 on a path; node 4 and 5 are low-degree senders attached to it
  Builder b(6);
  b.add(0, 1);
  b.add(1, 2);
  b.add(2, 3);
  b.add(3, 4);
  b.add(0, 5);
  const auto g = b.build();
  auto run = [&](std::vector<NodeIndex> senders, std::uint64_t k) {
    FixtureSpec spec;
    spec.members = {0, 1, 2, 3};
    spec.leader = 1;
    spec.lowSenders = std::move(senders);
    spec.thresholdK = k;
    return runFixture(g, spec, FixtureOp::Threshold);
  };
  CHECK(run({4, 5}, 8).result.done);
  CHECK_FALSE(run({4}, 8).result.done);
  CHECK_FALSE(run({}, 8).result.done);
}

TEST_CASE("threshold fires only after the target event") {
  // leader 0 with a path of members; 100 low-degree leaves hang off the last member
  const std::size_t leaves = 100;
  Builder b(4 + leaves);
  b.add(0, 1);
  b.add(1, 2);
  b.add(2, 3);
  std::vector<NodeIndex> senders;
  for (NodeIndex i = 0; i < leaves; ++i) {
    b.add(3, 4 + i);
    senders.push_back(4 + i);
  }
  const auto g = b.build();
  FixtureSpec spec;
  spec.members = {0, 1, 2, 3};
  spec.leader = 0;
  spec.lowSenders = senders;
  spec.thresholdK = 100;
  // leaf i's announcement lands at (i + 1) / 101; everything else is instant-ish
  spec.sched.custom = [](const Envelope& env) {
    if (env.src >= 4) return static_cast<double>(env.src - 3) / 101.0;
    return 0.001;
  };
  const auto r = runFixture(g, spec, FixtureOp::Threshold);
  REQUIRE(r.result.done);
  CHECK(r.result.eventsAtTrigger >= 25);
  CHECK(r.result.triggerTime >= 25.0 / 101.0);
}
