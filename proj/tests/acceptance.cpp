// Acceptance batch: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "amst/harness.hpp"
#include "amst/oracles.hpp"
#include "amst/pipeline.hpp"
#include "amst/primitives.hpp"

using namespace amst;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Verdict {
  int id;
  bool pass;
  std::string detail;
};

std::vector<Verdict> verdicts;

void report(int id, bool pass, const std::string& detail) {
  verdicts.push_back({id, pass, detail});
  std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << detail << std::endl;
}

RunConfig base(const std::string& family, std::size_t n, DelayPolicy policy, std::uint64_t seed) {
  RunConfig c;
  c.family = FamilySpec::parse(family);
  c.n = n;
  c.policy = policy;
  c.graphSeed = c.protocolSeed = c.schedulerSeed = seed;
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Median of a per-record quantity per n, in increasing n.
std::pair<std::vector<double>, std::vector<double>> byN(const std::vector<RunRecord>& recs,
                                                        const std::function<double(const RunRecord&)>& f) {
  std::map<std::size_t, std::vector<double>> groups;
  for (const auto& r : recs) groups[r.config.n].push_back(f(r));
  std::vector<double> xs, ys;
  for (const auto& [n, v] : groups) {
    xs.push_back(static_cast<double>(n));
    ys.push_back(median(v));
  }
  return {xs, ys};
}

double fminTime(const RunRecord& r) {
  return std::max(0.0, r.metrics.stage(Stage::Fmin).endTime - r.metrics.stage(Stage::Forest).endTime);
}

struct InvariantTally {
  std::map<std::string, std::size_t> failures;
  std::map<std::string, std::string> example;
  std::size_t runs = 0;

  void add(const RunRecord& r) {
    ++runs;
    const std::pair<const char*, const Check*> checks[] = {{"diameterBound", &r.checks.diameterBound},
                                                           {"partAWindow", &r.checks.partAWindow},
                                                           {"acyclic", &r.checks.acyclic},
                                                           {"fifo", &r.checks.fifo},
                                                           {"kt1", &r.checks.kt1}};
    for (const auto& [name, c] : checks) {
      if (!c->applicable || c->pass) continue;
      if (failures[name]++ == 0) example[name] = c->detail + " | " + r.config.reproduceCommand();
    }
  }
};

InvariantTally invariants;

std::vector<RunRecord> runBatch(const std::vector<RunConfig>& configs, unsigned threads, std::ofstream* out) {
  auto recs = runSweep(configs, threads, out);
  for (const auto& r : recs) invariants.add(r);
  return recs;
}

// ---------------------------------------------------------------- criteria

void endToEnd(unsigned threads, std::ofstream* out) {
  const std::vector<std::string> families{"gnp:0.3", "complete", "barbell"};
  const std::vector<std::size_t> sizes{32, 64, 128, 256, 512};
  const std::vector<DelayPolicy> policies{DelayPolicy::Unit, DelayPolicy::UniformRandom, DelayPolicy::AdversarialLag};
  std::vector<RunConfig> configs;
  for (std::size_t i = 0; i < 500; ++i) {
    const std::size_t combo = i % (families.size() * sizes.size() * policies.size());
    const auto& fam = families[combo % families.size()];
    const auto n = sizes[(combo / families.size()) % sizes.size()];
    const auto pol = policies[combo / (families.size() * sizes.size())];
    configs.push_back(base(fam, n, pol, 1000 + i));
  }
  const auto t0 = Clock::now();
  const auto recs = runBatch(configs, threads, out);
  const double elapsed = secondsSince(t0);

  std::size_t mstOk = 0, fminOk = 0, subsetChecked = 0, subsetOk = 0, reproduced = 0, failed = 0;
  std::string firstFailure;
  for (const auto& r : recs) {
    const bool mst = r.failure.empty() && r.checks.mstMatch.applicable && r.checks.mstMatch.pass;
    mstOk += mst;
    const bool fmin = r.failure.empty() && r.checks.fminMatch.applicable && r.checks.fminMatch.pass;
    fminOk += fmin;
    if (fmin) {
      ++subsetChecked;
      subsetOk += r.checks.mstInSmin.pass;
    }
    if (!mst) {
      ++failed;
      if (firstFailure.empty()) firstFailure = r.config.reproduceCommand();
      const auto again = runTrial(r.config).record;
      reproduced += again.traceHash == r.traceHash && again.failure == r.failure &&
                    again.checks.mstMatch.pass == r.checks.mstMatch.pass;
    }
  }
  const double rate = static_cast<double>(mstOk) / static_cast<double>(recs.size());
  report(1, rate >= 0.99 && reproduced == failed && elapsed <= 600.0,
         fmt("MST = oracle in %zu/%zu runs (%.2f%%), %zu/%zu failures reproduced by seed, %.0fs", mstOk, recs.size(),
             100.0 * rate, reproduced, failed, elapsed) +
             (firstFailure.empty() ? "" : " | e.g. " + firstFailure));

  const double fminRate = static_cast<double>(fminOk) / static_cast<double>(recs.size());
  // slope part of criterion 4 is reported with the scaling batch
  verdicts.push_back({-4, fminRate >= 0.99, fmt("F_min = oracle in %zu/%zu runs (%.2f%%)", fminOk, recs.size(),
                                               100.0 * fminRate)});
  report(5, subsetOk == subsetChecked && subsetChecked > 0,
         fmt("MST within S_min in %zu/%zu runs with a correct F_min", subsetOk, subsetChecked));
}

std::vector<RunRecord> scaling(unsigned threads, std::ofstream* out, double eps, const std::vector<std::size_t>& sizes,
                               std::uint32_t seeds) {
  std::vector<RunConfig> configs;
  for (auto n : sizes)
    for (std::uint32_t s = 0; s < seeds; ++s) {
      auto c = base("complete", n, DelayPolicy::Unit, 7000 + s);
      c.params.eps = eps;
      configs.push_back(c);
    }
  return runBatch(configs, threads, out);
}

void messageAndTimeScaling(const std::vector<RunRecord>& recs) {
  const auto [ns, msgs] = byN(recs, [](const RunRecord& r) { return static_cast<double>(r.metrics.logicalMessages); });
  const double slope = logLogSlope(ns, msgs);
  double m1024 = 0, msg1024 = 0, congest1024 = 0;
  for (const auto& r : recs)
    if (r.config.n == 1024) {
      m1024 = static_cast<double>(r.edges);
      msg1024 = std::max(msg1024, static_cast<double>(r.metrics.logicalMessages));
      congest1024 = std::max(congest1024, static_cast<double>(r.metrics.congestMessages));
    }
  report(2, slope <= 1.6 && msg1024 < m1024,
         fmt("message slope %.3f (<= 1.6); n=1024: max %.0f messages vs m = %.0f (%.0f CONGEST-size messages)", slope,
             msg1024, m1024, congest1024));

  const auto [n3, ft] = byN(recs, [](const RunRecord& r) { return r.metrics.stage(Stage::Forest).endTime; });
  const auto [n3b, fm] =
      byN(recs, [](const RunRecord& r) { return static_cast<double>(r.metrics.stage(Stage::Forest).logicalMessages); });
  const double st = logLogSlope(n3, ft), sm = logLogSlope(n3b, fm);
  report(3, st <= 1.15 && sm <= 1.6, fmt("forest time slope %.3f (<= 1.15), forest message slope %.3f (<= 1.6)", st, sm));

  const auto [n4, fmt4] = byN(recs, fminTime);
  const double s4 = logLogSlope(n4, fmt4);
  const auto it = std::find_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.id == -4; });
  const bool match = it != verdicts.end() && it->pass;
  std::ostringstream times;
  for (std::size_t i = 0; i < n4.size(); ++i) times << (i ? " " : "") << n4[i] << ":" << fmt4[i];
  report(4, match && s4 <= 0.65,
         (it != verdicts.end() ? it->detail : std::string("F_min batch missing")) +
             fmt(", F_min time slope %.3f (<= 0.65) [", s4) + times.str() + "]");
}

void epsTradeoff(unsigned threads, std::ofstream* out, const std::vector<RunRecord>& eps0) {
  const std::vector<std::size_t> sizes{256, 512, 1024};
  std::vector<double> timeSlopes, msgSlopes;
  std::string detail;
  for (double eps : {0.0, 0.125, 0.25}) {
    std::vector<RunRecord> recs;
    if (eps == 0.0) {
      for (const auto& r : eps0)
        if (r.config.n >= 256) recs.push_back(r);
    } else {
      recs = scaling(threads, out, eps, sizes, 3);
    }
    const auto [ns, pre] = byN(recs, [](const RunRecord& r) { return r.preFinalTime(); });
    const auto [ns2, msgs] = byN(recs, [](const RunRecord& r) { return static_cast<double>(r.metrics.logicalMessages); });
    timeSlopes.push_back(logLogSlope(ns, pre));
    msgSlopes.push_back(logLogSlope(ns2, msgs));
    detail += fmt("%seps=%.3f: time slope %.3f, message slope %.3f", detail.empty() ? "" : "; ", eps,
                  timeSlopes.back(), msgSlopes.back());
  }
  const bool timeDecreasing = timeSlopes[0] > timeSlopes[1] && timeSlopes[1] > timeSlopes[2];
  const bool msgIncreasing = msgSlopes[0] < msgSlopes[1] && msgSlopes[1] < msgSlopes[2];
  report(9, timeDecreasing && msgIncreasing, detail);
}

void nearBfs(unsigned threads, std::ofstream* out) {
  const std::vector<std::string> families{"complete", "barbell", "grid"};
  const std::vector<std::size_t> sizes{64, 144, 256, 576, 1024};
  std::vector<RunConfig> configs;
  for (std::size_t i = 0; i < 100; ++i) {
    const auto& fam = families[i % families.size()];
    const auto n = sizes[(i / families.size()) % sizes.size()];
    auto c = base(fam, n, static_cast<DelayPolicy>(i % 3), 3000 + i);
    c.stages = StageSelect::Bfs;
    configs.push_back(c);
  }
  const auto recs = runBatch(configs, threads, out);
  std::size_t ok = 0;
  std::int64_t worstStretch = 0;
  std::string first;
  for (const auto& r : recs) {
    const bool pass = r.failure.empty() && r.checks.bfsStretch.pass && r.checks.bfsDiameter.pass;
    ok += pass;
    worstStretch = std::max(worstStretch, r.bfsStretchMax);
    if (!pass && first.empty()) first = r.config.reproduceCommand();
  }
  report(8, ok == recs.size(),
         fmt("stretch and diameter bounds hold in %zu/%zu runs, worst additive stretch %lld", ok, recs.size(),
             static_cast<long long>(worstStretch)) +
             (first.empty() ? "" : " | e.g. " + first));
}

void findAnyContract() {
  FixtureSpec spec;
  spec.members = {0};
  spec.leader = 0;
  // single node, one outgoing edge
  const WeightedGraph one({1, 2}, {{0, 1, 1}});
  const int trials = 10000;
  int successes = 0, falsePositives = 0;
  for (int t = 0; t < trials; ++t) {
    spec.seed = 0x5eed0000ULL + static_cast<std::uint64_t>(t);
    const auto r = runFixture(one, spec, FixtureOp::FindAny);
    if (r.result.status != XorSketch::Status::Decoded) continue;
    ++successes;
    if (!(r.result.edge->w == 1 && r.result.verified)) ++falsePositives;
  }
  const double p = 1.0 / 16.0;
  const double floor = p - 3.0 * std::sqrt(p * (1 - p) / trials);
  const double rate = static_cast<double>(successes) / trials;

  // single node with three outgoing edges
  const WeightedGraph three({1, 2, 3, 4}, {{0, 1, 5}, {0, 2, 6}, {0, 3, 7}});
  std::map<Weight, int> counts;
  int got = 0, tried = 0;
  while (got < 30000 && tried < 2000000) {
    spec.seed = 0xabc00000ULL + static_cast<std::uint64_t>(tried++);
    const auto r = runFixture(three, spec, FixtureOp::FindAny);
    if (r.result.status != XorSketch::Status::Decoded) continue;
    const Weight w = r.result.edge->w;
    if (w < 5 || w > 7 || !r.result.verified) {
      ++falsePositives;
      continue;
    }
    ++counts[w];
    ++got;
  }
  const double sigma = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / std::max(got, 1));
  double worstZ = 0;
  for (Weight w : {5u, 6u, 7u}) {
    const double f = static_cast<double>(counts[w]) / std::max(got, 1);
    worstZ = std::max(worstZ, std::abs(f - 1.0 / 3.0) / sigma);
  }
  report(6, rate >= floor && falsePositives == 0 && got == 30000 && worstZ <= 5.0,
         fmt("success rate %.4f (floor %.4f), %d false positives, uniformity over %d successes: worst |z| = %.2f "
             "(<= 5)",
             rate, floor, falsePositives, got, worstZ));
}

void approxCutContract() {
  std::string detail;
  bool pass = true;
  for (std::size_t k : {64u, 256u, 1024u}) {
    const auto side = static_cast<NodeIndex>(std::lround(std::sqrt(static_cast<double>(k))));
    std::vector<NodeId> ids;
    for (NodeIndex i = 0; i < 2 * side; ++i) ids.push_back(i + 1);
    std::vector<EdgeInput> es;
    Weight w = 1;
    for (NodeIndex i = 0; i + 1 < side; ++i) es.push_back({i, i + 1, w++});
    for (NodeIndex i = 0; i < side; ++i)
      for (NodeIndex j = side; j < 2 * side; ++j) es.push_back({i, j, w++});
    const WeightedGraph g(ids, es);
    FixtureSpec spec;
    for (NodeIndex i = 0; i < side; ++i) spec.members.push_back(i);
    spec.leader = 0;
    int inRange = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
      spec.seed = 0xa99c0000ULL + k * 7919 + static_cast<std::uint64_t>(t);
      const auto r = runFixture(g, spec, FixtureOp::ApproxCut);
      inRange += r.result.estimate * 32 >= k && r.result.estimate <= k;
    }
    pass &= inRange >= 990;
    detail += fmt("%sk=%zu: %d/%d in [k/32, k]", detail.empty() ? "" : "; ", k, inRange, trials);
  }
  report(7, pass, detail);
}

void determinism() {
  const std::vector<std::string> families{"gnp:0.3", "complete", "barbell", "grid", "path"};
  std::size_t identical = 0;
  std::string first;
  for (std::size_t i = 0; i < 50; ++i) {
    auto c = base(families[i % families.size()], 32 + 16 * (i % 6), static_cast<DelayPolicy>(i % 3), 9000 + i);
    TrialOptions o;
    o.recordTrace = true;
    const auto a = runTrial(c, o);
    const auto b = runTrial(c, o);
    invariants.add(a.record);
    auto ja = toJson(a.record), jb = toJson(b.record);
    ja.erase("wallSeconds");
    jb.erase("wallSeconds");
    const bool same = a.trace == b.trace && ja == jb;
    identical += same;
    if (!same && first.empty()) first = c.reproduceCommand();
  }
  report(10, identical == 50,
         fmt("%zu/50 pairs produced identical traces and records", identical) + (first.empty() ? "" : " | " + first));
}

void invariantSuites() {
  std::string detail = fmt("%zu runs", invariants.runs);
  bool pass = true;
  for (const char* name : {"diameterBound", "partAWindow", "acyclic", "fifo", "kt1"}) {
    const std::size_t f = invariants.failures[name];
    pass &= f == 0;
    detail += fmt("; %s %zu failed", name, f);
  }
  for (const auto& [name, ex] : invariants.example) detail += " | " + name + ": " + ex;
  report(11, pass, detail);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance batch"};
  std::string outDir;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--out", outDir, "write records (JSON lines) here");
  app.add_option("--threads", threads, "concurrent trials")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  std::ofstream records;
  std::ofstream* out = nullptr;
  if (!outDir.empty()) {
    std::filesystem::create_directories(outDir);
    records.open(std::filesystem::path(outDir) / "acceptance_records.jsonl");
    out = &records;
  }

  const auto t0 = Clock::now();
  endToEnd(threads, out);
  const auto eps0 = scaling(threads, out, 0.0, {64, 128, 256, 512, 1024}, 3);
  messageAndTimeScaling(eps0);
  findAnyContract();
  approxCutContract();
  nearBfs(threads, out);
  epsTradeoff(threads, out, eps0);
  determinism();
  invariantSuites();

  std::sort(verdicts.begin(), verdicts.end(), [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
  std::size_t passed = 0, total = 0;
  for (const auto& v : verdicts)
    if (v.id > 0) {
      ++total;
      passed += v.pass;
    }
  std::cout << "summary: " << passed << "/" << total << " criteria passed in " << fmt("%.0f", secondsSince(t0))
            << "s" << std::endl;
  return passed == total ? 0 : 1;
}
