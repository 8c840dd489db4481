#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "amst/pipeline.hpp"

namespace amst {

// A sweep file is a JSON object. "base" holds RunConfig fields; the list
// keys "n", "eps", "family", "sched" and "stage" are crossed; "seeds" gives
// the number of seed triples per point (seed i adds i to every base seed).
std::vector<RunConfig> expandSweep(const nlohmann::json& spec);

// Expands RunConfig::trials into one config per trial with shifted seeds.
std::vector<RunConfig> expandTrials(const std::vector<RunConfig>& configs);

// Runs every config, `threads` at a time. Records come back in input order
// and, when `jsonl` is given, are appended to it in that order as they finish.
std::vector<RunRecord> runSweep(const std::vector<RunConfig>& configs, unsigned threads,
                                std::ostream* jsonl = nullptr);

// Least-squares slope of log(y) against log(x); NaN with fewer than two
// distinct x values or a non-positive y.
double logLogSlope(const std::vector<double>& xs, const std::vector<double>& ys);

struct SummaryRow {
  std::string family;
  std::string sched;
  double eps = 0.0;
  std::size_t n = 0;
  std::size_t trials = 0;
  std::size_t passed = 0;
  double messages = 0.0;
  double congest = 0.0;
  double forestMessages = 0.0;
  double fminMessages = 0.0;
  double bfsMessages = 0.0;
  double finalMessages = 0.0;
  double forestTime = 0.0;
  double fminTime = 0.0;
  double preFinalTime = 0.0;
  double simTime = 0.0;
  // per (family, sched, eps) group
  double slopeMessages = 0.0;
  double slopeForestMessages = 0.0;
  double slopeForestTime = 0.0;
  double slopeFminTime = 0.0;
  double slopePreFinalTime = 0.0;
};

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);
void writeSummaryCsv(std::ostream& out, const std::vector<SummaryRow>& rows);

struct VerifyOutcome {
  RunRecord rerun;
  bool reproduced = false;  // trace hash and metrics identical to the stored record
  bool pass = false;
};

// Re-executes the record's configuration and checks that it reproduces the
// stored run and passes every applicable oracle check.
VerifyOutcome verifyRecord(const RunRecord& record);

std::vector<RunRecord> readRecords(std::istream& in);

}  // namespace amst
