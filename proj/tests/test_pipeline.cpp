#include <doctest.h>

#include <fstream>
#include <random>

#include <json.hpp>

#include "amst/harness.hpp"
#include "amst/oracles.hpp"
#include "amst/pipeline.hpp"

#ifndef AMST_GOLDEN_DIR
#define AMST_GOLDEN_DIR "tests/golden"
#endif

using namespace amst;
using nlohmann::json;

namespace {

RunConfig config(const std::string& family, std::size_t n, std::uint64_t seed, DelayPolicy policy = DelayPolicy::Unit) {
  RunConfig c;
  c.family = FamilySpec::parse(family);
  c.n = n;
  c.graphSeed = c.protocolSeed = c.schedulerSeed = seed;
  c.policy = policy;
  return c;
}

std::vector<std::string> failing(const RunRecord& r) {
  std::vector<std::string> out;
  for (const auto& [name, c] : r.checks.list())
    if (c->applicable && !c->pass) out.push_back(name + ": " + c->detail);
  if (!r.failure.empty()) out.push_back(r.failure);
  return out;
}

std::vector<std::string> sortedKeys(const json& j) {
  std::vector<std::string> k;
  for (const auto& [key, _] : j.items()) k.push_back(key);
  std::sort(k.begin(), k.end());
  return k;
}

}  // namespace

TEST_CASE("thresholds and roles") {
  ProtocolParams p;
  const auto t = computeThresholds(256, p);
  CHECK(t.sqrtN == 16);
  CHECK(t.highDegree == doctest::Approx(0.1 * 16 * std::pow(std::log(256.0), 2)));
  CHECK(t.starProbability == doctest::Approx(5.0 / (16 * std::log(256.0))));
  p.eps = 0.3;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);

  // complete graph: everyone is high-degree and every node ends up next to a star
  const auto g = generateGraph(FamilySpec::parse("complete"), 100, 4).graph;
  const auto roles = assignRoles(g, ProtocolParams{}, 4);
  CHECK(roles.covered);
  CHECK(roles.starCount() >= 1);
  for (NodeIndex v = 0; v < g.nodeCount(); ++v) CHECK(roles.high[v]);
}

TEST_CASE("initial fragments cover G' on a complete graph") {
  auto c = config("complete", 100, 4);
  c.stages = StageSelect::Forest;
  const auto out = runTrial(c);
  CHECK(out.record.ok());
  CHECK(out.record.checks.forestMaximal.pass);
  CHECK(out.record.forestEdges == 99);  // one tree spanning all 100 nodes
}

TEST_CASE("degenerate regime: no high-degree nodes") {
  auto c = config("gnp:0.3", 24, 2);
  c.params.alpha = 1000;
  const auto out = runTrial(c);
  CHECK(out.record.high == 0);
  CHECK(out.record.ok());
  CHECK(out.record.sminEdges == out.record.edges);
  CHECK(out.mst == kruskalMsf(out.graph).edges);
}

TEST_CASE("final stage on small graphs") {
  auto onGraph = [](const WeightedGraph& g) {
    RunConfig c;
    c.n = g.nodeCount();
    c.params.alpha = 1000;  // all low-degree: the final stage sees the whole graph
    TrialOptions o;
    o.graph = &g;
    return runTrial(c, o);
  };
  SUBCASE("triangle") {
    const WeightedGraph g({1, 2, 3}, {{0, 1, 1}, {1, 2, 2}, {0, 2, 3}});
    const auto out = onGraph(g);
    CHECK(out.record.ok());
    REQUIRE(out.mst.size() == 2);
    CHECK(g.totalWeight(out.mst) == 3);
  }
  SUBCASE("path") {
    const auto g = generateGraph(FamilySpec::parse("path"), 12, 3).graph;
    const auto out = onGraph(g);
    CHECK(out.record.ok());
    CHECK(out.mst.size() == 11);
  }
  SUBCASE("random graphs") {
    std::mt19937_64 rng(2024);
    int matched = 0;
    for (int i = 0; i < 200; ++i) {
      const std::size_t n = 2 + rng() % 63;
      const double p = 0.05 + (rng() % 90) / 100.0;
      const auto g = generateGraph(FamilySpec{Family::Gnp, p}, n, rng()).graph;
      RunConfig c;
      c.n = n;
      c.params.alpha = 1000;
      c.policy = static_cast<DelayPolicy>(i % 3);
      c.schedulerSeed = c.protocolSeed = static_cast<std::uint64_t>(i);
      TrialOptions o;
      o.graph = &g;
      const auto out = runTrial(c, o);
      matched += out.mst == kruskalMsf(g).edges;
    }
    CHECK(matched == 200);
  }
}

TEST_CASE("full pipeline across families and schedulers") {
  struct Case {
    const char* family;
    std::size_t n;
  };
  for (const Case& k : {Case{"complete", 48}, Case{"gnp:0.3", 64}, Case{"barbell", 64}, Case{"grid", 49},
                        Case{"path", 20}}) {
    for (auto policy : {DelayPolicy::Unit, DelayPolicy::UniformRandom, DelayPolicy::AdversarialLag}) {
      const auto r = runTrial(config(k.family, k.n, 11, policy)).record;
      CAPTURE(k.family);
      CAPTURE(policyName(policy));
      CAPTURE(r.config.reproduceCommand());
      CHECK(r.failure.empty());
      CHECK(r.checks.mstMatch.pass);
      CHECK(r.checks.fminMatch.pass);
      CHECK(r.checks.mstInSmin.pass);
      CHECK(r.checks.forestMaximal.pass);
      CHECK(r.checks.acyclic.pass);
      CHECK(r.checks.fifo.pass);
      CHECK(r.checks.kt1.pass);
      CHECK(r.checks.gate.pass);
      CHECK(r.checks.bfsStretch.pass);
      CHECK(r.checks.completed.pass);
    }
  }
}

TEST_CASE("Part B runs and completes the minimum spanning forest") {
  // large stars and low thresholds make Part A stop with several tall fragments
  int partB = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto r = runTrial(config("gnp:0.3", 96, seed, DelayPolicy::UniformRandom)).record;
    CAPTURE(r.config.reproduceCommand());
    CHECK(failing(r).empty());
    partB += r.partBRan;
  }
  CHECK(partB > 0);
}

TEST_CASE("stage selection") {
  auto c = config("complete", 40, 3);
  c.stages = StageSelect::Forest;
  auto r = runTrial(c).record;
  CHECK(r.ok());
  CHECK(r.checks.forestMaximal.applicable);
  CHECK_FALSE(r.checks.fminMatch.applicable);
  CHECK_FALSE(r.checks.mstMatch.applicable);
  CHECK(r.metrics.stage(Stage::Final).logicalMessages == 0);
  CHECK(r.metrics.stage(Stage::Fmin).logicalMessages == 0);

  c.stages = StageSelect::Bfs;
  r = runTrial(c).record;
  CHECK(r.ok());
  CHECK(r.checks.bfsStretch.applicable);
  CHECK_FALSE(r.checks.mstMatch.applicable);
}

TEST_CASE("an injected MST fault fails only the MST check") {
  auto out = runTrial(config("gnp:0.3", 40, 5));
  REQUIRE(out.record.ok());
  // swap one MST edge for a non-MST edge
  std::vector<bool> inMst(out.graph.edgeCount(), false);
  for (auto e : out.mst) inMst[e] = true;
  EdgeIndex outside = 0;
  while (inMst[outside]) ++outside;
  out.mst.back() = outside;
  std::sort(out.mst.begin(), out.mst.end());
  const Checks ck = verifyOutputs(out);
  CHECK_FALSE(ck.mstMatch.pass);
  for (const auto& [name, c] : ck.list())
    if (name != "mstMatch" && name != "acyclic") CHECK_MESSAGE(c->pass, name);
}

TEST_CASE("verifyOutputs agrees with the recorded checks") {
  const auto out = runTrial(config("barbell", 48, 8, DelayPolicy::AdversarialLag));
  const Checks ck = verifyOutputs(out);
  const auto a = ck.list();
  const auto b = out.record.checks.list();
  for (std::size_t i = 0; i < a.size(); ++i) {
    CAPTURE(a[i].first);
    CHECK(a[i].second->pass == b[i].second->pass);
    CHECK(a[i].second->applicable == b[i].second->applicable);
  }
}

TEST_CASE("runs are deterministic") {
  for (auto policy : {DelayPolicy::Unit, DelayPolicy::UniformRandom, DelayPolicy::AdversarialLag}) {
    TrialOptions o;
    o.recordTrace = true;
    const auto c = config("gnp:0.4", 48, 21, policy);
    const auto a = runTrial(c, o);
    const auto b = runTrial(c, o);
    CHECK(a.trace == b.trace);
    CHECK(a.record.traceHash == b.record.traceHash);
    auto ja = toJson(a.record), jb = toJson(b.record);
    ja.erase("wallSeconds");
    jb.erase("wallSeconds");
    CHECK(ja == jb);
  }
}

TEST_CASE("records round-trip through JSON") {
  auto c = config("gnp:0.25", 40, 6, DelayPolicy::AdversarialLag);
  c.params.eps = 0.125;
  c.lagFraction = 0.4;
  c.pipelined = true;
  const auto r = runTrial(c).record;
  const json j = toJson(r);
  const RunRecord back = runRecordFromJson(json::parse(j.dump()));
  CHECK(toJson(back) == j);
  CHECK(back.metrics == r.metrics);
  CHECK(back.config.reproduceCommand() == r.config.reproduceCommand());
}

TEST_CASE("record schema is stable") {
  std::ifstream in(std::string(AMST_GOLDEN_DIR) + "/run_record_schema.json");
  REQUIRE(in);
  const json golden = json::parse(in);
  auto c = config("complete", 16, 1);
  const json j = toJson(runTrial(c).record);
  CHECK(sortedKeys(j) == golden.at("record").get<std::vector<std::string>>());
  CHECK(sortedKeys(j.at("config")) == golden.at("config").get<std::vector<std::string>>());
  CHECK(sortedKeys(j.at("metrics")) == golden.at("metrics").get<std::vector<std::string>>());
  CHECK(sortedKeys(j.at("metrics").at("perStage")) == golden.at("perStage").get<std::vector<std::string>>());
  CHECK(sortedKeys(j.at("metrics").at("perStage").at("fmin")) ==
        golden.at("stageMetrics").get<std::vector<std::string>>());
  std::vector<std::string> checks;
  for (const auto& [k, _] : j.at("checks").items()) checks.push_back(k);
  auto want = golden.at("checks").get<std::vector<std::string>>();
  std::sort(want.begin(), want.end());
  std::sort(checks.begin(), checks.end());
  CHECK(checks == want);
  CHECK(sortedKeys(j.at("checks").at("mstMatch")) == golden.at("check").get<std::vector<std::string>>());
  REQUIRE_FALSE(j.at("partA").empty());
  CHECK(sortedKeys(j.at("partA").at(0)) == golden.at("partA").get<std::vector<std::string>>());
}

TEST_CASE("reproduce command parses back to the same configuration") {
  auto c = config("gnp:0.3", 33, 9, DelayPolicy::UniformRandom);
  c.params.beta = 3.5;
  const std::string cmd = c.reproduceCommand();
  CHECK(cmd.find("--n=33") != std::string::npos);
  CHECK(cmd.find("--p=0.3") != std::string::npos);
  CHECK(cmd.find("--beta=3.5") != std::string::npos);
  CHECK(cmd.find("--sched=uniform") != std::string::npos);
  CHECK(cmd.find("--graph-seed=9") != std::string::npos);
}

TEST_CASE("config validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  c.n = 0;
  CHECK_THROWS(c.validate());
  c = RunConfig{};
  c.finalStage = "awerbuch";
  CHECK_THROWS(c.validate());
  c = RunConfig{};
  c.lagFraction = 1.5;
  CHECK_THROWS(c.validate());
  CHECK_THROWS(runConfigFromJson(json{{"eps", 0.5}}));
}

TEST_CASE("sweeps expand, run in order and summarize") {
  const json spec{{"base", {{"family", "complete"}, {"stage", "forest"}}}, {"n", {16, 32}}, {"sched", {"unit", "uniform"}},
                  {"seeds", 2}};
  const auto configs = expandTrials(expandSweep(spec));
  REQUIRE(configs.size() == 8);
  CHECK(configs[0].graphSeed + 1 == configs[1].graphSeed);
  std::ostringstream lines;
  const auto recs = runSweep(configs, 3, &lines);
  REQUIRE(recs.size() == 8);
  std::istringstream back(lines.str());
  const auto read = readRecords(back);
  REQUIRE(read.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(read[i].traceHash == recs[i].traceHash);
    CHECK(read[i].config.n == configs[i].n);
    CHECK(verifyRecord(read[i]).reproduced);
  }
  const auto rows = summarize(recs);
  CHECK(rows.size() == 4);
  for (const auto& row : rows) {
    CHECK(row.trials == 2);
    CHECK(row.messages > 0);
  }
  std::ostringstream csv;
  writeSummaryCsv(csv, rows);
  CHECK(csv.str().rfind("family,sched,eps,n,", 0) == 0);
}

TEST_CASE("log-log slope") {
  CHECK(logLogSlope({1, 2, 4, 8}, {3, 12, 48, 192}) == doctest::Approx(2.0));
  CHECK(logLogSlope({10, 100}, {5, 50}) == doctest::Approx(1.0));
  CHECK(std::isnan(logLogSlope({1}, {1})));
  CHECK(std::isnan(logLogSlope({1, 2}, {0, 1})));
}
