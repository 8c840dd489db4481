#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "amst/harness.hpp"
#include "amst/oracles.hpp"
#include "amst/pipeline.hpp"

using namespace amst;
using nlohmann::json;

namespace {

struct Common {
  RunConfig cfg;
  std::string family = "gnp";
  std::optional<double> p;
  std::string sched = "unit";
  std::string stage = "all";
  std::optional<std::uint64_t> seed;
  std::string graphFile;
  std::string traceFile;
};

void addRunOptions(CLI::App* app, Common& c) {
  auto& cfg = c.cfg;
  auto& p = cfg.params;
  app->add_option("--n", cfg.n, "number of nodes")->capture_default_str();
  app->add_option("--family", c.family, "gnp:P | complete | path | grid | barbell")->capture_default_str();
  app->add_option("--p", c.p, "edge probability for gnp (overrides gnp:P)");
  app->add_option("--eps", p.eps, "trade-off parameter in [0, 1/4]")->capture_default_str();
  app->add_option("--alpha", p.alpha, "high-degree threshold scale")->capture_default_str();
  app->add_option("--beta", p.beta, "star probability scale")->capture_default_str();
  app->add_option("--c-tree", p.cTree, "maximal-tree sampling budget constant")->capture_default_str();
  app->add_option("--c-find", p.cFind, "minimum-edge search retry constant")->capture_default_str();
  app->add_option("--c-approx", p.cApprox, "cut estimate repetitions constant")->capture_default_str();
  app->add_option("--kappa-b", p.kappaB, "BFS additive stretch constant")->capture_default_str();
  app->add_option("--c-msg", p.cMsg, "words per CONGEST message")->capture_default_str();
  app->add_option("--copies", p.searchCopies, "sketch copies per search round")->capture_default_str();
  app->add_flag("--double-n", p.doubleN, "nodes are told 2n instead of n");
  app->add_option("--sched", c.sched, "unit | uniform | adversarial")->capture_default_str();
  app->add_option("--lag", cfg.lagFraction, "fraction of lagged nodes (adversarial)")->capture_default_str();
  app->add_flag("--pipelined", cfg.pipelined, "charge one time unit per CONGEST fragment");
  app->add_option("--seed", c.seed, "sets graph, protocol and scheduler seeds at once");
  app->add_option("--graph-seed", cfg.graphSeed)->capture_default_str();
  app->add_option("--protocol-seed", cfg.protocolSeed)->capture_default_str();
  app->add_option("--sched-seed", cfg.schedulerSeed)->capture_default_str();
  app->add_option("--stage", c.stage, "forest | fmin | bfs | mst | all")->capture_default_str();
  app->add_option("--final-stage", cfg.finalStage, "final MST protocol (ghs)")->capture_default_str();
  app->add_option("--graph", c.graphFile, "read the graph from a file instead of generating it");
  app->add_option("--trace", c.traceFile, "write the delivery trace to this file");
}

RunConfig finish(Common& c) {
  RunConfig cfg = c.cfg;
  cfg.family = FamilySpec::parse(c.family == "gnp" ? "gnp:0.3" : c.family);
  if (c.p) cfg.family.p = *c.p;
  cfg.policy = SchedulerConfig::parsePolicy(c.sched);
  cfg.stages = parseStageSelect(c.stage);
  if (c.seed) cfg.graphSeed = cfg.protocolSeed = cfg.schedulerSeed = *c.seed;
  cfg.validate();
  return cfg;
}

TrialOutput execute(Common& c, const RunConfig& cfg) {
  TrialOptions opts;
  opts.recordTrace = !c.traceFile.empty();
  std::optional<WeightedGraph> g;
  if (!c.graphFile.empty()) {
    std::ifstream in(c.graphFile);
    if (!in) throw std::runtime_error("cannot open " + c.graphFile);
    g = readGraph(in);
    opts.graph = &*g;
  }
  TrialOutput out = runTrial(cfg, opts);
  if (!c.traceFile.empty()) {
    std::ofstream t(c.traceFile);
    for (const auto& line : out.trace) t << line << '\n';
  }
  return out;
}

void reportFailure(const RunRecord& r) {
  std::cerr << "FAIL";
  if (!r.failure.empty()) std::cerr << " (" << r.failure << ")";
  for (const auto& [name, c] : r.checks.list())
    if (c->applicable && !c->pass) std::cerr << ' ' << name << (c->detail.empty() ? "" : "[" + c->detail + "]");
  std::cerr << "\n  reproduce: " << r.config.reproduceCommand() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous KT1 CONGEST simulator for a sublinear-message MST pipeline"};
  app.require_subcommand(1);

  Common runOpts, bfsOpts, mstOpts;
  auto* run = app.add_subcommand("run", "run one trial and print its record as JSON");
  addRunOptions(run, runOpts);

  auto* bfs = app.add_subcommand("bfs", "build the near-BFS tree and print per-node depth, distance, stretch as CSV");
  addRunOptions(bfs, bfsOpts);

  auto* mst = app.add_subcommand("mst", "run the full pipeline and print the MST edge list with metrics as JSON");
  addRunOptions(mst, mstOpts);

  std::string sweepConfig, sweepOut, sweepCsv;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "run a configuration sweep");
  sweep->add_option("--config", sweepConfig, "sweep description (JSON)")->required();
  sweep->add_option("--out", sweepOut, "append records here as JSON lines");
  sweep->add_option("--csv", sweepCsv, "write the summary CSV here (default: stdout)");
  sweep->add_option("--threads", threads, "concurrent trials")->capture_default_str();

  std::string recordsFile;
  auto* verify = app.add_subcommand("verify", "re-run stored records and check them against the oracles");
  verify->add_option("--records", recordsFile, "JSON-lines record file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const RunConfig cfg = finish(runOpts);
      const TrialOutput out = execute(runOpts, cfg);
      std::cout << toJson(out.record).dump() << '\n';
      if (!out.record.ok()) reportFailure(out.record);
      return out.record.ok() ? 0 : 1;
    }
    if (*bfs) {
      if (bfsOpts.stage == "all") bfsOpts.stage = "bfs";
      const RunConfig cfg = finish(bfsOpts);
      if (!selectsBfs(cfg.stages)) throw std::invalid_argument("bfs needs --stage=bfs or --stage=all");
      const TrialOutput out = execute(bfsOpts, cfg);
      std::cout << "node,depth,distance,stretch\n";
      for (NodeIndex v = 0; v < out.graph.nodeCount(); ++v) {
        const auto d = out.bfsDepth[v];
        const auto o = out.oracleDistance.empty() ? kUnreachable : out.oracleDistance[v];
        std::cout << out.graph.id(v) << ',';
        if (d == kUnreachable) std::cout << ',';
        else std::cout << d << ',';
        std::cout << o << ',';
        if (d != kUnreachable && o != kUnreachable) std::cout << static_cast<long long>(d) - o;
        std::cout << '\n';
      }
      if (!out.record.ok()) reportFailure(out.record);
      return out.record.ok() ? 0 : 1;
    }
    if (*mst) {
      const RunConfig cfg = finish(mstOpts);
      if (!selectsFinal(cfg.stages)) throw std::invalid_argument("mst needs --stage=mst or --stage=all");
      const TrialOutput out = execute(mstOpts, cfg);
      json edges = json::array();
      for (EdgeIndex e : out.mst) {
        const auto& ed = out.graph.edge(e);
        edges.push_back({out.graph.id(ed.a), out.graph.id(ed.b), toString(ed.w)});
      }
      const json j{{"mst", edges},
                   {"match", out.record.checks.mstMatch.applicable && out.record.checks.mstMatch.pass},
                   {"finalStage", cfg.finalStage},
                   {"metrics", toJson(out.record.metrics)}};
      std::cout << j.dump() << '\n';
      if (!out.record.ok()) reportFailure(out.record);
      return out.record.ok() ? 0 : 1;
    }
    if (*sweep) {
      std::ifstream in(sweepConfig);
      if (!in) throw std::runtime_error("cannot open " + sweepConfig);
      const auto configs = expandTrials(expandSweep(json::parse(in)));
      std::ofstream records;
      if (!sweepOut.empty()) records.open(sweepOut, std::ios::app);
      const auto recs = runSweep(configs, threads, sweepOut.empty() ? nullptr : &records);
      const auto rows = summarize(recs);
      if (sweepCsv.empty()) {
        writeSummaryCsv(std::cout, rows);
      } else {
        std::ofstream csv(sweepCsv);
        writeSummaryCsv(csv, rows);
      }
      bool ok = true;
      for (const auto& r : recs) {
        if (r.ok()) continue;
        ok = false;
        reportFailure(r);
      }
      return ok ? 0 : 1;
    }
    if (*verify) {
      std::ifstream in(recordsFile);
      if (!in) throw std::runtime_error("cannot open " + recordsFile);
      bool ok = true;
      std::size_t i = 0;
      for (const auto& rec : readRecords(in)) {
        const VerifyOutcome v = verifyRecord(rec);
        std::cout << "record " << i++ << ": " << (v.pass ? "PASS" : "FAIL")
                  << (v.reproduced ? "" : " (did not reproduce)");
        for (const auto& [name, c] : v.rerun.checks.list())
          if (c->applicable) std::cout << ' ' << name << '=' << (c->pass ? "pass" : "fail");
        std::cout << '\n';
        if (!v.pass) {
          ok = false;
          reportFailure(v.rerun);
        }
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
