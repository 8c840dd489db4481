#include <algorithm>
#include <deque>
#include <stdexcept>

#include "amst/primitives.hpp"

namespace amst {

FixtureRun runFixture(const WeightedGraph& g, const FixtureSpec& spec, FixtureOp op) {
  const std::size_t n = g.nodeCount();
  std::vector<std::uint8_t> member(n, 0), low(n, 0);
  for (NodeIndex v : spec.members) member.at(v) = 1;
  for (NodeIndex v : spec.lowSenders) low.at(v) = 1;
  if (!member.at(spec.leader)) throw std::invalid_argument("fixture leader is not a member");

  // BFS tree of the induced fragment
  std::vector<NodeIndex> parent(n, static_cast<NodeIndex>(n));
  std::vector<std::uint8_t> seen(n, 0);
  std::deque<NodeIndex> queue{spec.leader};
  seen[spec.leader] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const NodeIndex v = queue.front();
    queue.pop_front();
    for (const auto& a : g.neighbors(v)) {
      if (!member[a.nbr] || seen[a.nbr]) continue;
      seen[a.nbr] = 1;
      parent[a.nbr] = v;
      queue.push_back(a.nbr);
      ++reached;
    }
  }
  if (reached != spec.members.size()) throw std::invalid_argument("fixture fragment is not connected");

  auto know = knowledgeInit(g, spec.params.doubleN);
  auto cfg = std::make_shared<AgentConfig>();
  cfg->params = spec.params;
  cfg->protocolSeed = spec.seed;
  cfg->stages = StageSelect::Forest;

  std::vector<std::unique_ptr<NodeAgent>> agents;
  agents.reserve(n);
  for (NodeIndex v = 0; v < n; ++v) agents.push_back(std::make_unique<NodeAgent>(know.nodes[v], cfg));

  auto portTo = [&](NodeIndex v, NodeIndex u) { return *know.nodes[v].portOf(g.id(u)); };
  const NodeId leaderId = g.id(spec.leader);
  for (NodeIndex v = 0; v < n; ++v) {
    if (!member[v]) {
      agents[v]->presetFixture(g.id(v), kNoPort, {}, !low[v], low[v] != 0);
      continue;
    }
    std::vector<Port> kids;
    for (const auto& a : g.neighbors(v))
      if (member[a.nbr] && parent[a.nbr] == v) kids.push_back(portTo(v, a.nbr));
    const Port up = v == spec.leader ? kNoPort : portTo(v, parent[v]);
    agents[v]->presetFixture(leaderId, up, std::move(kids), !low[v], low[v] != 0);
  }
  agents[spec.leader]->presetOp(op, spec.seed, spec.thresholdK);

  std::vector<Process*> procs;
  procs.reserve(n);
  for (auto& a : agents) procs.push_back(a.get());
  KernelConfig kc;
  kc.cMsg = spec.params.cMsg;
  Kernel kernel(g, spec.sched, kc);
  FixtureRun out;
  out.run = kernel.run(procs);
  out.result = agents[spec.leader]->report().fixture;
  return out;
}

}  // namespace amst
