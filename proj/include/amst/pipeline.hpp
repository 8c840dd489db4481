#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "amst/graph.hpp"
#include "amst/node.hpp"
#include "amst/roles.hpp"
#include "amst/sim.hpp"

namespace amst {

struct RunConfig {
  std::size_t n = 64;
  FamilySpec family{Family::Gnp, 0.3};
  ProtocolParams params;
  DelayPolicy policy = DelayPolicy::Unit;
  double lagFraction = 0.25;
  bool pipelined = false;
  std::uint64_t graphSeed = 1;
  std::uint64_t protocolSeed = 1;
  std::uint64_t schedulerSeed = 1;
  StageSelect stages = StageSelect::All;
  std::uint32_t trials = 1;
  std::string finalStage = "ghs";

  // Throws std::invalid_argument on an unusable configuration.
  void validate() const;
  // Command line that reproduces this configuration with the CLI.
  std::string reproduceCommand() const;
};

// Outcome of one oracle check; `applicable` is false when the selected
// stages do not produce the checked output.
struct Check {
  bool applicable = false;
  bool pass = true;
  std::string detail;
};

struct Checks {
  Check mstMatch;        // final MST = Kruskal(G)
  Check fminMatch;       // F_min = Kruskal restricted to G'
  Check mstInSmin;    // MST(G) within S_min
  Check forestMaximal;   // F components = G' components
  Check forestInGprime;  // no F edge touches a low-degree node
  Check diameterBound;    // sum of F tree diameters <= 2 * stars
  Check bfsStretch;      // depth <= dist + kappa_b sqrt n
  Check bfsDiameter;     // tree diameter <= 2 (D + kappa_b sqrt n)
  Check partAWindow;     // post-truncation heights within [sqrt n, 5 sqrt n]
  Check acyclic;         // F, F_min, MST are forests
  Check fifo;
  Check kt1;
  Check gate;            // no G' node sends final-stage messages before F_min
  Check sync;
  Check idUpdate;
  Check completed;       // the run reached quiescence with every selected stage done

  template <typename Self>
  static auto listOf(Self& s) {
    using Ptr = std::conditional_t<std::is_const_v<Self>, const Check*, Check*>;
    return std::vector<std::pair<std::string, Ptr>>{
        {"mstMatch", &s.mstMatch},       {"fminMatch", &s.fminMatch},       {"mstInSmin", &s.mstInSmin},
        {"forestMaximal", &s.forestMaximal}, {"forestInGprime", &s.forestInGprime}, {"diameterBound", &s.diameterBound},
        {"bfsStretch", &s.bfsStretch},   {"bfsDiameter", &s.bfsDiameter},   {"partAWindow", &s.partAWindow},
        {"acyclic", &s.acyclic},         {"fifo", &s.fifo},                 {"kt1", &s.kt1},
        {"gate", &s.gate},               {"sync", &s.sync},                 {"idUpdate", &s.idUpdate},
        {"completed", &s.completed}};
  }

  std::vector<std::pair<std::string, const Check*>> list() const { return listOf(*this); }
  std::vector<std::pair<std::string, Check*>> list() { return listOf(*this); }
  bool allPass() const;
};

struct RunRecord {
  RunConfig config;
  Metrics metrics;
  bool quiescent = false;
  std::string failure;
  Checks checks;
  // sizes and structure
  std::size_t nodes = 0;
  std::size_t edges = 0;
  bool repaired = false;
  std::size_t stars = 0;
  std::size_t high = 0;
  std::uint32_t starSalt = 0;
  std::uint32_t roleAttempts = 0;
  std::size_t gprimeEdges = 0;
  std::size_t forestEdges = 0;
  std::size_t fminEdges = 0;
  std::size_t sparseEdges = 0;
  std::size_t sminEdges = 0;
  std::size_t mstEdges = 0;
  std::uint64_t forestDiameterSum = 0;
  std::int64_t bfsStretchMax = 0;
  std::uint32_t bfsTreeDiameter = 0;
  std::uint32_t graphDiameter = 0;
  std::vector<PartALog> partA;
  bool partBRan = false;
  std::uint32_t partBPhases = 0;
  std::uint64_t traceHash = 0;
  double wallSeconds = 0.0;

  double preFinalTime() const;
  bool ok() const { return failure.empty() && checks.allPass(); }
};

struct TrialOutput {
  RunRecord record;
  WeightedGraph graph;
  std::vector<EdgeIndex> mst;
  std::vector<EdgeIndex> fmin;
  std::vector<EdgeIndex> forest;
  std::vector<EdgeIndex> smin;
  std::vector<std::uint32_t> bfsDepth;     // kUnreachable when not joined
  std::vector<std::uint32_t> oracleDistance;
  std::vector<std::string> trace;
};

struct TrialOptions {
  bool recordTrace = false;
  const WeightedGraph* graph = nullptr;  // overrides the generated graph
};

TrialOutput runTrial(const RunConfig& cfg, const TrialOptions& opts = {});

// Re-runs the oracle checks that depend only on recorded output. Used by
// `verify` and by fault-injection tests.
Checks verifyOutputs(const TrialOutput& out);

nlohmann::json toJson(const RunConfig& c);
RunConfig runConfigFromJson(const nlohmann::json& j);
nlohmann::json toJson(const Metrics& m);
Metrics metricsFromJson(const nlohmann::json& j);
nlohmann::json toJson(const RunRecord& r);
RunRecord runRecordFromJson(const nlohmann::json& j);

}  // namespace amst
