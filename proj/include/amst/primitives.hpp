#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "amst/graph.hpp"
#include "amst/node.hpp"
#include "amst/sim.hpp"
#include "amst/sketch.hpp"

namespace amst {

// One step of the minimum-outgoing-edge descent over a weight range [lo, hi).
// Done: the range holds no edge. Narrow: some copy decoded; `edge` is the
// lightest decoded edge and the next range is [lo, edge.w). Retry: the range
// is non-empty but nothing decoded.
struct DescentStep {
  enum class Action { Done, Narrow, Retry };
  Action action = Action::Done;
  std::optional<SketchEdge> edge;
};
DescentStep descend(const SketchBundle& bundle);

// Cut-size estimate from independent sketch copies of the same edge set:
// 2^(l-3) where l is the deepest level that is non-zero in a strict majority
// of copies, clamped to [1, filteredEdges]; 0 when the set is empty.
std::uint64_t approxEstimate(const SketchBundle& bundle, std::uint64_t filteredEdges);

// Runs a single fragment primitive on the fragment induced by `members`
// (must be connected), rooted at `leader`. Nodes in `lowSenders` send
// <Low-degree> to all neighbours at wake-up; they count as events for the
// threshold fixture.
struct FixtureSpec {
  std::vector<NodeIndex> members;
  NodeIndex leader = 0;
  std::vector<NodeIndex> lowSenders;
  SchedulerConfig sched;
  ProtocolParams params;
  std::uint64_t seed = 0;
  std::uint64_t thresholdK = 0;
};

struct FixtureRun {
  FixtureResult result;
  RunResult run;
};

FixtureRun runFixture(const WeightedGraph& g, const FixtureSpec& spec, FixtureOp op);

}  // namespace amst
