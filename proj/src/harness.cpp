#include "amst/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace amst {

using nlohmann::json;

namespace {

std::vector<json> listOrSingle(const json& spec, const char* key) {
  if (!spec.contains(key)) return {json()};
  const auto& v = spec.at(key);
  if (v.is_array()) return std::vector<json>(v.begin(), v.end());
  return {v};
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

std::vector<RunConfig> expandSweep(const json& spec) {
  const json base = spec.value("base", json::object());
  const auto seeds = spec.value("seeds", 1u);
  std::vector<RunConfig> out;
  for (const auto& family : listOrSingle(spec, "family"))
    for (const auto& sched : listOrSingle(spec, "sched"))
      for (const auto& stage : listOrSingle(spec, "stage"))
        for (const auto& eps : listOrSingle(spec, "eps"))
          for (const auto& n : listOrSingle(spec, "n")) {
            json j = base;
            if (!family.is_null()) j["family"] = family;
            if (!sched.is_null()) j["sched"] = sched;
            if (!stage.is_null()) j["stage"] = stage;
            if (!eps.is_null()) j["eps"] = eps;
            if (!n.is_null()) j["n"] = n;
            const RunConfig c = runConfigFromJson(j);
            for (std::uint32_t i = 0; i < seeds; ++i) {
              RunConfig ci = c;
              ci.graphSeed += i;
              ci.protocolSeed += i;
              ci.schedulerSeed += i;
              ci.validate();
              out.push_back(ci);
            }
          }
  return out;
}

std::vector<RunConfig> expandTrials(const std::vector<RunConfig>& configs) {
  std::vector<RunConfig> out;
  for (const auto& c : configs) {
    for (std::uint32_t i = 0; i < c.trials; ++i) {
      RunConfig ci = c;
      ci.trials = 1;
      ci.graphSeed += i;
      ci.protocolSeed += i;
      ci.schedulerSeed += i;
      out.push_back(ci);
    }
  }
  return out;
}

std::vector<RunRecord> runSweep(const std::vector<RunConfig>& configs, unsigned threads, std::ostream* jsonl) {
  std::vector<RunRecord> records(configs.size());
  std::vector<char> finished(configs.size(), 0);
  std::atomic<std::size_t> next{0};
  std::mutex appender;
  std::size_t written = 0;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      RunRecord r;
      try {
        r = runTrial(configs[i]).record;
      } catch (const std::exception& e) {
        r.config = configs[i];
        r.failure = std::string("exception: ") + e.what();
      }
      std::lock_guard lock(appender);
      records[i] = std::move(r);
      finished[i] = 1;
      while (written < configs.size() && finished[written]) {
        if (jsonl) *jsonl << toJson(records[written]).dump() << '\n' << std::flush;
        ++written;
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, configs.size()))));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return records;
}

double logLogSlope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (xs.size() != ys.size() || xs.size() < 2) return nan;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0) || !(ys[i] > 0)) return nan;
    const double x = std::log(xs[i]), y = std::log(ys[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double k = static_cast<double>(xs.size());
  const double den = k * sxx - sx * sx;
  if (std::abs(den) < 1e-12) return nan;
  return (k * sxy - sx * sy) / den;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
  using Key = std::tuple<std::string, std::string, double, std::size_t>;
  std::map<Key, std::vector<const RunRecord*>> groups;
  for (const auto& r : records)
    groups[{r.config.family.str(), policyName(r.config.policy), r.config.params.eps, r.config.n}].push_back(&r);

  std::vector<SummaryRow> rows;
  for (const auto& [key, recs] : groups) {
    SummaryRow row;
    std::tie(row.family, row.sched, row.eps, row.n) = key;
    row.trials = recs.size();
    std::vector<double> msg, cong, fm, fmn, bm, finm, ft, fmt, pre, sim;
    for (const RunRecord* r : recs) {
      if (r->ok()) ++row.passed;
      const auto& m = r->metrics;
      msg.push_back(static_cast<double>(m.logicalMessages));
      cong.push_back(static_cast<double>(m.congestMessages));
      fm.push_back(static_cast<double>(m.stage(Stage::Forest).logicalMessages));
      fmn.push_back(static_cast<double>(m.stage(Stage::Fmin).logicalMessages));
      bm.push_back(static_cast<double>(m.stage(Stage::Bfs).logicalMessages));
      finm.push_back(static_cast<double>(m.stage(Stage::Final).logicalMessages));
      ft.push_back(m.stage(Stage::Forest).endTime);
      fmt.push_back(std::max(0.0, m.stage(Stage::Fmin).endTime - m.stage(Stage::Forest).endTime));
      pre.push_back(r->preFinalTime());
      sim.push_back(m.simTime);
    }
    row.messages = median(msg);
    row.congest = median(cong);
    row.forestMessages = median(fm);
    row.fminMessages = median(fmn);
    row.bfsMessages = median(bm);
    row.finalMessages = median(finm);
    row.forestTime = median(ft);
    row.fminTime = median(fmt);
    row.preFinalTime = median(pre);
    row.simTime = median(sim);
    rows.push_back(row);
  }

  // slopes per (family, sched, eps)
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].family == rows[i].family && rows[j].sched == rows[i].sched &&
           rows[j].eps == rows[i].eps)
      ++j;
    std::vector<double> ns, a, b, c, d, e;
    for (std::size_t k = i; k < j; ++k) {
      ns.push_back(static_cast<double>(rows[k].n));
      a.push_back(rows[k].messages);
      b.push_back(rows[k].forestMessages);
      c.push_back(rows[k].forestTime);
      d.push_back(rows[k].fminTime);
      e.push_back(rows[k].preFinalTime);
    }
    for (std::size_t k = i; k < j; ++k) {
      rows[k].slopeMessages = logLogSlope(ns, a);
      rows[k].slopeForestMessages = logLogSlope(ns, b);
      rows[k].slopeForestTime = logLogSlope(ns, c);
      rows[k].slopeFminTime = logLogSlope(ns, d);
      rows[k].slopePreFinalTime = logLogSlope(ns, e);
    }
    i = j;
  }
  return rows;
}

void writeSummaryCsv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "family,sched,eps,n,trials,passed,messages,congest_messages,forest_messages,fmin_messages,bfs_messages,"
         "final_messages,forest_time,fmin_time,prefinal_time,sim_time,slope_messages,slope_forest_messages,"
         "slope_forest_time,slope_fmin_time,slope_prefinal_time\n";
  for (const auto& r : rows) {
    out << r.family << ',' << r.sched << ',' << r.eps << ',' << r.n << ',' << r.trials << ',' << r.passed << ','
        << r.messages << ',' << r.congest << ',' << r.forestMessages << ',' << r.fminMessages << ','
        << r.bfsMessages << ',' << r.finalMessages << ',' << r.forestTime << ',' << r.fminTime << ','
        << r.preFinalTime << ',' << r.simTime << ',' << r.slopeMessages << ',' << r.slopeForestMessages << ','
        << r.slopeForestTime << ',' << r.slopeFminTime << ',' << r.slopePreFinalTime << '\n';
  }
}

VerifyOutcome verifyRecord(const RunRecord& record) {
  VerifyOutcome v;
  v.rerun = runTrial(record.config).record;
  v.reproduced = v.rerun.traceHash == record.traceHash && v.rerun.metrics == record.metrics &&
                 v.rerun.failure == record.failure;
  v.pass = v.reproduced && v.rerun.ok();
  return v;
}

std::vector<RunRecord> readRecords(std::istream& in) {
  std::vector<RunRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(runRecordFromJson(json::parse(line)));
  }
  return out;
}

}  // namespace amst
