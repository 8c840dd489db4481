#include "amst/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "amst/oracles.hpp"

namespace amst {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

Check makeCheck(bool pass, std::string detail = {}) {
  Check c;
  c.applicable = true;
  c.pass = pass;
  c.detail = std::move(detail);
  return c;
}

std::vector<EdgeIndex> sortedUnique(std::vector<EdgeIndex> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::uint32_t graphDiameter(const WeightedGraph& g) {
  const std::size_t n = g.nodeCount();
  if (n <= 1) return 0;
  if (g.edgeCount() == n * (n - 1) / 2) return 1;
  return diameter(g);
}

}  // namespace

void RunConfig::validate() const {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  params.validate();
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (finalStage != "ghs") throw std::invalid_argument("unknown final stage: " + finalStage);
  if (!(lagFraction >= 0.0 && lagFraction <= 1.0)) throw std::invalid_argument("lag fraction must lie in [0, 1]");
}

std::string RunConfig::reproduceCommand() const {
  std::ostringstream os;
  os << "amst_cli run --n=" << n << " --family=" << family.str();
  if (family.family == Family::Gnp) os << " --p=" << shortest(family.p);
  os << " --eps=" << shortest(params.eps) << " --alpha=" << shortest(params.alpha)
     << " --beta=" << shortest(params.beta) << " --c-tree=" << shortest(params.cTree)
     << " --c-find=" << shortest(params.cFind) << " --c-approx=" << shortest(params.cApprox)
     << " --kappa-b=" << shortest(params.kappaB) << " --c-msg=" << params.cMsg
     << " --copies=" << params.searchCopies << (params.doubleN ? " --double-n" : "")
     << " --sched=" << policyName(policy) << " --lag=" << shortest(lagFraction) << (pipelined ? " --pipelined" : "")
     << " --graph-seed=" << graphSeed << " --protocol-seed=" << protocolSeed << " --sched-seed=" << schedulerSeed
     << " --stage=" << stageSelectName(stages) << " --final-stage=" << finalStage;
  return os.str();
}

bool Checks::allPass() const {
  for (const auto& [name, c] : list())
    if (c->applicable && !c->pass) return false;
  return true;
}

double RunRecord::preFinalTime() const {
  return std::max(metrics.stage(Stage::Forest).endTime, metrics.stage(Stage::Fmin).endTime);
}

TrialOutput runTrial(const RunConfig& cfg, const TrialOptions& opts) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  TrialOutput out;
  RunRecord& rec = out.record;
  rec.config = cfg;
  if (opts.graph) {
    out.graph = *opts.graph;
  } else {
    auto gen = generateGraph(cfg.family, cfg.n, cfg.graphSeed);
    out.graph = std::move(gen.graph);
    rec.repaired = gen.repaired;
  }
  const WeightedGraph& g = out.graph;
  const std::size_t n = g.nodeCount();
  rec.nodes = n;
  rec.edges = g.edgeCount();

  const Roles roles = assignRoles(g, cfg.params, cfg.protocolSeed);
  rec.stars = roles.starCount();
  rec.high = static_cast<std::size_t>(std::count(roles.high.begin(), roles.high.end(), true));
  rec.starSalt = roles.salt;
  rec.roleAttempts = roles.attempts;
  const auto gMask = gprimeMask(g, roles);
  rec.gprimeEdges = static_cast<std::size_t>(std::count(gMask.begin(), gMask.end(), true));
  if (!roles.covered) {
    rec.failure = "star selection left a high-degree node without a star neighbour after " +
                  std::to_string(roles.attempts) + " attempts";
    rec.wallSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

  NodeIndex initiator = 0;
  bool haveStar = false;
  for (NodeIndex v = 0; v < n; ++v) {
    if (roles.star[v] && (!haveStar || g.id(v) < g.id(initiator))) {
      initiator = v;
      haveStar = true;
    } else if (!haveStar && g.id(v) < g.id(initiator)) {
      initiator = v;
    }
  }

  auto know = knowledgeInit(g, cfg.params.doubleN);
  auto agentCfg = std::make_shared<AgentConfig>();
  agentCfg->params = cfg.params;
  agentCfg->protocolSeed = cfg.protocolSeed;
  agentCfg->starSalt = roles.salt;
  agentCfg->bfsInitiator = n > 0 ? g.id(initiator) : 0;
  agentCfg->stages = cfg.stages;

  std::vector<std::unique_ptr<NodeAgent>> agents;
  agents.reserve(n);
  std::vector<Process*> procs;
  procs.reserve(n);
  for (NodeIndex v = 0; v < n; ++v) {
    agents.push_back(std::make_unique<NodeAgent>(know.nodes[v], agentCfg));
    procs.push_back(agents.back().get());
  }

  SchedulerConfig sc;
  sc.policy = cfg.policy;
  sc.seed = cfg.schedulerSeed;
  sc.lagFraction = cfg.lagFraction;
  sc.pipelined = cfg.pipelined;
  KernelConfig kc;
  kc.cMsg = cfg.params.cMsg;
  kc.recordTrace = opts.recordTrace;
  Kernel kernel(g, sc, kc);
  RunResult rr = kernel.run(procs);
  rec.metrics = rr.metrics;
  rec.quiescent = rr.quiescent;
  rec.failure = rr.failure;
  rec.traceHash = rr.traceHash;
  out.trace = std::move(rr.trace);

  auto edgeAt = [&](NodeIndex v, Port p) { return g.neighbors(v)[p].edge; };
  std::uint64_t gate = 0, sync = 0, idu = 0;
  bool allForest = true, allFmin = true, allBfs = true, allFinal = true;
  std::vector<EdgeIndex> sparse, bfsTree;
  out.bfsDepth.assign(n, kUnreachable);
  const std::uint32_t s = computeThresholds(know.nodes.empty() ? 1 : know.nodes[0].nEstimate(), cfg.params).sqrtN;
  Check window;
  for (NodeIndex v = 0; v < n; ++v) {
    const NodeReport r = agents[v]->report();
    for (Port p : r.forestPorts) out.forest.push_back(edgeAt(v, p));
    for (Port p : r.fminPorts) out.fmin.push_back(edgeAt(v, p));
    for (Port p : r.sparsePorts) sparse.push_back(edgeAt(v, p));
    for (Port p : r.sminPorts) out.smin.push_back(edgeAt(v, p));
    for (Port p : r.mstPorts) out.mst.push_back(edgeAt(v, p));
    if (r.bfsJoined) {
      out.bfsDepth[v] = r.bfsDepth;
      if (r.bfsParent != kNoPort) bfsTree.push_back(edgeAt(v, r.bfsParent));
    }
    gate += r.gateViolations;
    sync += r.syncViolations;
    idu += r.idUpdateViolations;
    allForest = allForest && r.forestDone;
    allFmin = allFmin && r.fminDone;
    allBfs = allBfs && r.bfsDone;
    allFinal = allFinal && r.finalDone;
    if (!r.partA.empty()) {
      window.applicable = true;
      for (const auto& e : r.partA) {
        rec.partA.push_back(e);
        if (e.fragments > 1 && e.maxHeight > 5ull * s) {
          window.pass = false;
          window.detail = "phase " + std::to_string(e.phase) + " max height " + std::to_string(e.maxHeight);
        }
      }
      if (r.partBRan && r.partA.back().minHeight < s) {
        window.pass = false;
        window.detail = "part B started with min height " + std::to_string(r.partA.back().minHeight);
      }
    }
    rec.partBRan = rec.partBRan || r.partBRan;
    rec.partBPhases = std::max(rec.partBPhases, r.partBPhases);
  }
  out.forest = sortedUnique(std::move(out.forest));
  out.fmin = sortedUnique(std::move(out.fmin));
  out.smin = sortedUnique(std::move(out.smin));
  out.mst = sortedUnique(std::move(out.mst));
  sparse = sortedUnique(std::move(sparse));
  rec.forestEdges = out.forest.size();
  rec.fminEdges = out.fmin.size();
  rec.sparseEdges = sparse.size();
  rec.sminEdges = out.smin.size();
  rec.mstEdges = out.mst.size();

  Checks& ck = rec.checks;
  ck.partAWindow = window;
  ck.fifo = makeCheck(rr.fifoViolations == 0, std::to_string(rr.fifoViolations) + " out-of-order deliveries");
  ck.kt1 = makeCheck(*know.violations == 0, std::to_string(*know.violations) + " knowledge violations");
  ck.gate = makeCheck(gate == 0, std::to_string(gate) + " early final-stage sends");
  ck.sync = makeCheck(sync == 0, std::to_string(sync) + " synchronization violations");
  ck.idUpdate = makeCheck(idu == 0, std::to_string(idu) + " ID updates bypassing the old leader");
  bool done = rr.quiescent && rr.failure.empty() && allForest;
  if (selectsFmin(cfg.stages)) done = done && allFmin;
  if (selectsBfs(cfg.stages)) done = done && allBfs;
  if (selectsFinal(cfg.stages)) done = done && allFinal;
  ck.completed = makeCheck(done, rr.failure.empty() ? (rr.quiescent ? "" : "not quiescent") : rr.failure);

  if (selectsBfs(cfg.stages)) {
    const auto oracle = oracleBfs(g, initiator);
    out.oracleDistance = oracle.distance;
    std::int64_t worst = 0;
    bool joined = true;
    for (NodeIndex v = 0; v < n; ++v) {
      if (out.bfsDepth[v] == kUnreachable) {
        joined = false;
        continue;
      }
      worst = std::max<std::int64_t>(worst, static_cast<std::int64_t>(out.bfsDepth[v]) - oracle.distance[v]);
    }
    rec.bfsStretchMax = worst;
    rec.graphDiameter = graphDiameter(g);
    rec.bfsTreeDiameter = static_cast<std::uint32_t>(sumTreeDiameters(g, bfsTree));
    const double slack = cfg.params.kappaB * std::sqrt(static_cast<double>(n));
    ck.bfsStretch = makeCheck(joined && static_cast<double>(worst) <= slack,
                              joined ? "max depth - distance = " + std::to_string(worst) : "some node never joined");
    ck.bfsDiameter = makeCheck(joined && isSpanningTree(g, bfsTree) &&
                                   rec.bfsTreeDiameter <= 2.0 * (rec.graphDiameter + slack),
                               "tree diameter " + std::to_string(rec.bfsTreeDiameter) + ", graph diameter " +
                                   std::to_string(rec.graphDiameter));
  }

  const Checks oracle = verifyOutputs(out);
  ck.mstMatch = oracle.mstMatch;
  ck.fminMatch = oracle.fminMatch;
  ck.mstInSmin = oracle.mstInSmin;
  ck.forestMaximal = oracle.forestMaximal;
  ck.forestInGprime = oracle.forestInGprime;
  ck.diameterBound = oracle.diameterBound;
  ck.acyclic = oracle.acyclic;
  rec.forestDiameterSum = sumTreeDiameters(g, out.forest);
  rec.wallSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

Checks verifyOutputs(const TrialOutput& out) {
  const WeightedGraph& g = out.graph;
  const RunConfig& cfg = out.record.config;
  Checks ck = out.record.checks;
  const Roles roles = assignRoles(g, cfg.params, cfg.protocolSeed);
  const auto gMask = gprimeMask(g, roles);

  // forest stage
  bool inside = true;
  for (EdgeIndex e : out.forest) inside = inside && gMask[e];
  ck.forestInGprime = makeCheck(inside);
  {
    UnionFind uf(g.nodeCount());
    for (EdgeIndex e : out.forest) uf.unite(g.edge(e).a, g.edge(e).b);
    std::size_t split = 0;
    for (EdgeIndex e = 0; e < g.edgeCount(); ++e)
      if (gMask[e] && uf.find(g.edge(e).a) != uf.find(g.edge(e).b)) ++split;
    ck.forestMaximal = makeCheck(split == 0, std::to_string(split) + " G' edges join different trees");
  }
  const std::uint64_t diamSum = sumTreeDiameters(g, out.forest);
  // 2 * stars is the asserted bound; 4 * stars is what height <= 2 * stars per tree guarantees
  ck.diameterBound = makeCheck(diamSum <= 2 * roles.starCount(),
                              "sum of tree diameters " + std::to_string(diamSum) + ", stars " +
                                  std::to_string(roles.starCount()) +
                                  (diamSum <= 4 * roles.starCount() ? ", within 4x stars" : ", above 4x stars"));

  bool acyclic = isAcyclic(g, out.forest);
  std::string which = acyclic ? "" : "F";
  if (selectsFmin(cfg.stages)) {
    const auto want = kruskalMsf(g, gMask).edges;
    ck.fminMatch = makeCheck(want == out.fmin, std::to_string(out.fmin.size()) + " edges, oracle " +
                                                   std::to_string(want.size()));
    const auto mst = kruskalMsf(g).edges;
    bool subset = std::includes(out.smin.begin(), out.smin.end(), mst.begin(), mst.end());
    ck.mstInSmin = makeCheck(subset);
    if (!isAcyclic(g, out.fmin)) {
      acyclic = false;
      which += " F_min";
    }
  }
  if (selectsFinal(cfg.stages)) {
    const auto want = kruskalMsf(g).edges;
    ck.mstMatch = makeCheck(want == out.mst, std::to_string(out.mst.size()) + " edges, oracle " +
                                                 std::to_string(want.size()));
    if (!isAcyclic(g, out.mst)) {
      acyclic = false;
      which += " MST";
    }
  }
  ck.acyclic = makeCheck(acyclic, which.empty() ? "" : "cycle in" + (which[0] == ' ' ? which : " " + which));
  return ck;
}

// ---------------------------------------------------------------- JSON

using nlohmann::json;

json toJson(const RunConfig& c) {
  return json{{"n", c.n},
              {"family", c.family.str()},
              {"p", c.family.p},
              {"eps", c.params.eps},
              {"alpha", c.params.alpha},
              {"beta", c.params.beta},
              {"cTree", c.params.cTree},
              {"cFind", c.params.cFind},
              {"cApprox", c.params.cApprox},
              {"kappaB", c.params.kappaB},
              {"cMsg", c.params.cMsg},
              {"searchCopies", c.params.searchCopies},
              {"doubleN", c.params.doubleN},
              {"sched", policyName(c.policy)},
              {"lagFraction", c.lagFraction},
              {"pipelined", c.pipelined},
              {"graphSeed", c.graphSeed},
              {"protocolSeed", c.protocolSeed},
              {"schedulerSeed", c.schedulerSeed},
              {"stage", stageSelectName(c.stages)},
              {"trials", c.trials},
              {"finalStage", c.finalStage}};
}

RunConfig runConfigFromJson(const json& j) {
  RunConfig c;
  c.n = j.value("n", c.n);
  if (j.contains("family")) c.family = FamilySpec::parse(j.at("family").get<std::string>());
  if (j.contains("p")) c.family.p = j.at("p").get<double>();
  auto& p = c.params;
  p.eps = j.value("eps", p.eps);
  p.alpha = j.value("alpha", p.alpha);
  p.beta = j.value("beta", p.beta);
  p.cTree = j.value("cTree", p.cTree);
  p.cFind = j.value("cFind", p.cFind);
  p.cApprox = j.value("cApprox", p.cApprox);
  p.kappaB = j.value("kappaB", p.kappaB);
  p.cMsg = j.value("cMsg", p.cMsg);
  p.searchCopies = j.value("searchCopies", p.searchCopies);
  p.doubleN = j.value("doubleN", p.doubleN);
  if (j.contains("sched")) c.policy = SchedulerConfig::parsePolicy(j.at("sched").get<std::string>());
  c.lagFraction = j.value("lagFraction", c.lagFraction);
  c.pipelined = j.value("pipelined", c.pipelined);
  c.graphSeed = j.value("graphSeed", c.graphSeed);
  c.protocolSeed = j.value("protocolSeed", c.protocolSeed);
  c.schedulerSeed = j.value("schedulerSeed", c.schedulerSeed);
  if (j.contains("stage")) c.stages = parseStageSelect(j.at("stage").get<std::string>());
  c.trials = j.value("trials", c.trials);
  c.finalStage = j.value("finalStage", c.finalStage);
  c.validate();
  return c;
}

json toJson(const Metrics& m) {
  json stages = json::object();
  for (std::size_t i = 0; i < kStageCount; ++i) {
    const auto& s = m.perStage[i];
    stages[std::string(stageName(static_cast<Stage>(i)))] = {{"logicalMessages", s.logicalMessages},
                                                             {"congestMessages", s.congestMessages},
                                                             {"endTime", s.endTime},
                                                             {"reached", s.reached}};
  }
  json tags = json::object();
  for (std::size_t i = 0; i < kTagCount; ++i)
    if (m.perTag[i] != 0) tags[std::string(tagName(static_cast<Tag>(i)))] = m.perTag[i];
  return json{{"logicalMessages", m.logicalMessages},
              {"congestMessages", m.congestMessages},
              {"simTime", m.simTime},
              {"events", m.events},
              {"perStage", stages},
              {"perTag", tags}};
}

Metrics metricsFromJson(const json& j) {
  Metrics m;
  m.logicalMessages = j.at("logicalMessages").get<std::uint64_t>();
  m.congestMessages = j.at("congestMessages").get<std::uint64_t>();
  m.simTime = j.at("simTime").get<double>();
  m.events = j.at("events").get<std::uint64_t>();
  for (std::size_t i = 0; i < kStageCount; ++i) {
    const auto& s = j.at("perStage").at(std::string(stageName(static_cast<Stage>(i))));
    auto& out = m.perStage[i];
    out.logicalMessages = s.at("logicalMessages").get<std::uint64_t>();
    out.congestMessages = s.at("congestMessages").get<std::uint64_t>();
    out.endTime = s.at("endTime").get<double>();
    out.reached = s.at("reached").get<bool>();
  }
  const auto& tags = j.at("perTag");
  for (std::size_t i = 0; i < kTagCount; ++i) {
    const std::string name(tagName(static_cast<Tag>(i)));
    if (tags.contains(name)) m.perTag[i] = tags.at(name).get<std::uint64_t>();
  }
  return m;
}

json toJson(const RunRecord& r) {
  json checks = json::object();
  for (const auto& [name, c] : r.checks.list())
    checks[name] = {{"applicable", c->applicable}, {"pass", c->pass}, {"detail", c->detail}};
  json partA = json::array();
  for (const auto& e : r.partA)
    partA.push_back({{"phase", e.phase}, {"minHeight", e.minHeight}, {"maxHeight", e.maxHeight},
                     {"fragments", e.fragments}});
  return json{{"config", toJson(r.config)},
              {"metrics", toJson(r.metrics)},
              {"quiescent", r.quiescent},
              {"failure", r.failure},
              {"ok", r.ok()},
              {"checks", checks},
              {"nodes", r.nodes},
              {"edges", r.edges},
              {"repaired", r.repaired},
              {"stars", r.stars},
              {"high", r.high},
              {"starSalt", r.starSalt},
              {"roleAttempts", r.roleAttempts},
              {"gprimeEdges", r.gprimeEdges},
              {"forestEdges", r.forestEdges},
              {"fminEdges", r.fminEdges},
              {"sparseEdges", r.sparseEdges},
              {"sminEdges", r.sminEdges},
              {"mstEdges", r.mstEdges},
              {"forestDiameterSum", r.forestDiameterSum},
              {"bfsStretchMax", r.bfsStretchMax},
              {"bfsTreeDiameter", r.bfsTreeDiameter},
              {"graphDiameter", r.graphDiameter},
              {"partA", partA},
              {"partBRan", r.partBRan},
              {"partBPhases", r.partBPhases},
              {"traceHash", r.traceHash},
              {"wallSeconds", r.wallSeconds}};
}

RunRecord runRecordFromJson(const json& j) {
  RunRecord r;
  r.config = runConfigFromJson(j.at("config"));
  r.metrics = metricsFromJson(j.at("metrics"));
  r.quiescent = j.at("quiescent").get<bool>();
  r.failure = j.at("failure").get<std::string>();
  const auto& checks = j.at("checks");
  Checks& ck = r.checks;
  for (auto& [name, c] : ck.list()) {
    if (!checks.contains(name)) continue;
    const auto& cj = checks.at(name);
    c->applicable = cj.at("applicable").get<bool>();
    c->pass = cj.at("pass").get<bool>();
    c->detail = cj.at("detail").get<std::string>();
  }
  r.nodes = j.at("nodes").get<std::size_t>();
  r.edges = j.at("edges").get<std::size_t>();
  r.repaired = j.at("repaired").get<bool>();
  r.stars = j.at("stars").get<std::size_t>();
  r.high = j.at("high").get<std::size_t>();
  r.starSalt = j.at("starSalt").get<std::uint32_t>();
  r.roleAttempts = j.at("roleAttempts").get<std::uint32_t>();
  r.gprimeEdges = j.at("gprimeEdges").get<std::size_t>();
  r.forestEdges = j.at("forestEdges").get<std::size_t>();
  r.fminEdges = j.at("fminEdges").get<std::size_t>();
  r.sparseEdges = j.at("sparseEdges").get<std::size_t>();
  r.sminEdges = j.at("sminEdges").get<std::size_t>();
  r.mstEdges = j.at("mstEdges").get<std::size_t>();
  r.forestDiameterSum = j.at("forestDiameterSum").get<std::uint64_t>();
  r.bfsStretchMax = j.at("bfsStretchMax").get<std::int64_t>();
  r.bfsTreeDiameter = j.at("bfsTreeDiameter").get<std::uint32_t>();
  r.graphDiameter = j.at("graphDiameter").get<std::uint32_t>();
  for (const auto& e : j.at("partA"))
    r.partA.push_back({e.at("phase").get<std::uint32_t>(), e.at("minHeight").get<std::uint64_t>(),
                       e.at("maxHeight").get<std::uint64_t>(), e.at("fragments").get<std::uint64_t>()});
  r.partBRan = j.at("partBRan").get<bool>();
  r.partBPhases = j.at("partBPhases").get<std::uint32_t>();
  r.traceHash = j.at("traceHash").get<std::uint64_t>();
  r.wallSeconds = j.at("wallSeconds").get<double>();
  return r;
}

}  // namespace amst
