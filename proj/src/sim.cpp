#include "amst/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace amst {

std::string_view stageName(Stage s) {
  switch (s) {
    case Stage::Forest: return "forest";
    case Stage::Fmin: return "fmin";
    case Stage::Bfs: return "bfs";
    case Stage::Final: return "final";
    case Stage::Test: return "test";
  }
  return "?";
}

std::string_view tagName(Tag t) {
  static constexpr std::array<std::string_view, kTagCount> names = {
      "Star",       "Child",        "NotChild",    "StarNode",     "LowDegree",   "SketchRequest",
      "SketchReply", "VerifyRequest", "VerifyResult", "Verify",      "VerifyReply", "ThresholdStart",
      "CutCount",   "MergeInstr",   "Merge",       "Accept",       "Reject",      "RejectUp",
      "IdFlood",    "ForestDone",   "PhaseStart",  "SearchResult", "StepDone",    "MergeReq",
      "MergeAck",   "MergeOutcome", "Depth",       "HeightReport", "TruncFinal",  "SketchUp",
      "BoundsDown", "EdgeCheck",    "CheckUp",     "IdUpdate",     "FminMark",    "FminDone",
      "Extend",     "Probe",        "Join",        "NoJoin",       "LayerDone",   "BfsDone",
      "Connect",    "Initiate",     "Test",        "GhsAccept",    "GhsReject",   "Report",
      "ChangeRoot", "GhsDone",      "Ping"};
  auto i = static_cast<std::size_t>(t);
  return i < names.size() ? names[i] : "?";
}

BitBudget BitBudget::forNetwork(std::size_t n, std::uint32_t cMsg) {
  BitBudget b;
  b.wordBits = static_cast<std::uint32_t>(std::max(1, bitLength(static_cast<std::uint64_t>(n > 1 ? n - 1 : 1))));
  b.idBits = 3 * b.wordBits;
  b.weightBits = 8 * b.wordBits;
  b.maxBits = std::max<std::uint32_t>(1, cMsg) * b.wordBits;
  return b;
}

std::uint64_t BitBudget::bitsOf(const Message& m) const {
  std::uint64_t bits = 8;  // tag
  bits += std::uint64_t{m.words} * wordBits + std::uint64_t{m.ids} * idBits + std::uint64_t{m.weights} * weightBits;
  if (m.sketch) {
    for (const auto& s : *m.sketch) bits += static_cast<std::uint64_t>(s.levels()) * cellBits() + 64;
  }
  if (m.edges) bits += m.edges->size() * (std::uint64_t{weightBits} + 2ull * idBits);
  return bits;
}

std::uint64_t splitPayload(std::uint64_t bits, std::size_t n, std::uint32_t cMsg) {
  const std::uint64_t maxBits = BitBudget::forNetwork(n, cMsg).maxBits;
  if (bits == 0) return 1;
  return (bits + maxBits - 1) / maxBits;
}

Knowledge::Knowledge(NodeId self, std::size_t nEstimate, std::vector<Neighbor> neighbors,
                     std::shared_ptr<std::uint64_t> violations)
    : self_(self), nEstimate_(nEstimate), neighbors_(std::move(neighbors)), violations_(std::move(violations)) {}

void Knowledge::violate() const {
  if (violations_) ++*violations_;
}

NodeId Knowledge::neighborId(Port p) const {
  if (p >= neighbors_.size()) {
    violate();
    return 0;
  }
  return neighbors_[p].id;
}

Weight Knowledge::weight(Port p) const {
  if (p >= neighbors_.size()) {
    violate();
    return 0;
  }
  return neighbors_[p].weight;
}

std::optional<Port> Knowledge::portOf(NodeId neighbor) const {
  auto it = std::lower_bound(neighbors_.begin(), neighbors_.end(), neighbor,
                             [](const Neighbor& a, NodeId key) { return a.id < key; });
  if (it == neighbors_.end() || it->id != neighbor) return std::nullopt;
  return static_cast<Port>(it - neighbors_.begin());
}

KnowledgeSet knowledgeInit(const WeightedGraph& g, bool doubleN) {
  KnowledgeSet out;
  out.violations = std::make_shared<std::uint64_t>(0);
  out.nodes.reserve(g.nodeCount());
  const std::size_t estimate = doubleN ? 2 * g.nodeCount() : g.nodeCount();
  for (NodeIndex v = 0; v < g.nodeCount(); ++v) {
    std::vector<Knowledge::Neighbor> nb;
    nb.reserve(g.degree(v));
    for (const auto& a : g.neighbors(v)) nb.push_back({g.id(a.nbr), g.edge(a.edge).w});
    out.nodes.emplace_back(g.id(v), estimate, std::move(nb), out.violations);
  }
  return out;
}

DelayPolicy SchedulerConfig::parsePolicy(const std::string& text) {
  if (text == "unit") return DelayPolicy::Unit;
  if (text == "uniform" || text == "uniformRandom") return DelayPolicy::UniformRandom;
  if (text == "adversarial" || text == "adversarialLag") return DelayPolicy::AdversarialLag;
  throw std::invalid_argument("unknown scheduler policy: " + text);
}

std::string policyName(DelayPolicy p) {
  switch (p) {
    case DelayPolicy::Unit: return "unit";
    case DelayPolicy::UniformRandom: return "uniform";
    case DelayPolicy::AdversarialLag: return "adversarial";
  }
  return "?";
}

struct Kernel::Event {
  double time;
  NodeIndex dst;
  NodeIndex src;
  std::uint64_t seq;
  std::uint32_t slot;

  // Min-heap order on (time, dst, src, seq).
  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (dst != o.dst) return dst > o.dst;
    if (src != o.src) return src > o.src;
    return seq > o.seq;
  }
};

struct Kernel::Queue {
  std::priority_queue<Event, std::vector<Event>, std::greater<>> heap;
};

Kernel::Kernel(const WeightedGraph& g, SchedulerConfig sched, KernelConfig cfg)
    : g_(g), sched_(std::move(sched)), cfg_(cfg), queue_(std::make_unique<Queue>()) {
  const std::size_t n = g.nodeCount();
  budget_ = BitBudget::forNetwork(n, cfg_.cMsg);
  portBase_.assign(n + 1, 0);
  for (NodeIndex v = 0; v < n; ++v) portBase_[v + 1] = portBase_[v] + g.degree(v);
  const std::size_t ports = portBase_[n];
  reversePort_.resize(ports);
  for (NodeIndex v = 0; v < n; ++v) {
    auto nb = g.neighbors(v);
    for (Port p = 0; p < nb.size(); ++p) {
      auto far = g.neighbors(nb[p].nbr);
      auto it = std::find_if(far.begin(), far.end(), [&](const Adjacency& a) { return a.edge == nb[p].edge; });
      reversePort_[portBase_[v] + p] = static_cast<Port>(it - far.begin());
    }
  }
  sendSeq_.assign(ports, 0);
  recvSeq_.assign(ports, 0);
  lastDeliver_.assign(ports, 0.0);
  lagged_.assign(n, false);
  if (sched_.policy == DelayPolicy::AdversarialLag) {
    for (NodeIndex v = 0; v < n; ++v)
      lagged_[v] = unitInterval(mix(sched_.seed, 0x6c6167ULL, g.id(v))) < sched_.lagFraction;
  }
}

Kernel::~Kernel() = default;

double Kernel::drawDelay(const Envelope& env, std::uint64_t fragments) {
  double d = 1.0;
  if (sched_.custom) {
    d = sched_.custom(env);
  } else {
    const double u = unitInterval(mix(sched_.seed, g_.id(env.src), g_.id(env.dst), env.seq));
    switch (sched_.policy) {
      case DelayPolicy::Unit: d = 1.0; break;
      case DelayPolicy::UniformRandom: d = 1.0 - u; break;
      case DelayPolicy::AdversarialLag: d = lagged_[env.dst] ? 1.0 - 0.1 * u : 0.1 * (1.0 - u); break;
    }
  }
  if (!(d > 0.0 && d <= 1.0)) throw std::logic_error("delay outside (0, 1]");
  return sched_.pipelined ? d * static_cast<double>(fragments) : d;
}

void Kernel::send(NodeIndex from, Port port, Message msg) {
  if (port >= g_.degree(from)) throw std::logic_error("send on a port the node does not have");
  const std::size_t link = portBase_[from] + port;
  Envelope env;
  env.src = from;
  env.dst = g_.neighbors(from)[port].nbr;
  env.port = port;
  env.seq = ++sendSeq_[link];
  env.sendTime = now_;
  env.bits = budget_.bitsOf(msg);
  env.msg = std::move(msg);
  const std::uint64_t fragments = (env.bits + budget_.maxBits - 1) / budget_.maxBits;
  env.deliverTime = std::max(now_ + drawDelay(env, fragments), lastDeliver_[link]);
  lastDeliver_[link] = env.deliverTime;

  auto& m = result_.metrics;
  const auto stage = static_cast<std::size_t>(env.msg.stage);
  ++m.logicalMessages;
  m.congestMessages += fragments;
  ++m.perStage[stage].logicalMessages;
  m.perStage[stage].congestMessages += fragments;
  ++m.perTag[static_cast<std::size_t>(env.msg.tag)];
  ++result_.sent;

  std::uint32_t slot;
  if (!freeSlots_.empty()) {
    slot = freeSlots_.back();
    freeSlots_.pop_back();
    slab_[slot] = std::move(env);
  } else {
    slot = static_cast<std::uint32_t>(slab_.size());
    slab_.push_back(std::move(env));
  }
  const Envelope& e = slab_[slot];
  queue_->heap.push(Event{e.deliverTime, e.dst, e.src, e.seq, slot});
}

void Context::send(Port to, Message msg) { kernel_.send(self_, to, std::move(msg)); }
double Context::now() const { return kernel_.now_; }

void Context::markStageDone(Stage s) {
  auto& st = kernel_.result_.metrics.perStage[static_cast<std::size_t>(s)];
  st.endTime = std::max(st.endTime, kernel_.now_);
  st.reached = true;
}

void Context::fail(const std::string& why) {
  if (kernel_.result_.failure.empty()) kernel_.result_.failure = why;
}

RunResult Kernel::run(std::span<Process* const> processes, const HaltPredicate& halt) {
  if (processes.size() != g_.nodeCount()) throw std::invalid_argument("one process per node required");
  now_ = 0.0;
  for (NodeIndex v = 0; v < processes.size(); ++v) {
    Context ctx(*this, v);
    processes[v]->onWake(ctx);
  }
  auto& heap = queue_->heap;
  std::uint64_t hash = 0x7472616365ULL;
  while (!heap.empty() && result_.failure.empty()) {
    if (halt && halt(*this)) {
      result_.halted = true;
      break;
    }
    if (result_.metrics.events >= cfg_.maxEvents) {
      result_.failure = "event ceiling exceeded";
      break;
    }
    Event ev = heap.top();
    heap.pop();
    Envelope env = std::move(slab_[ev.slot]);
    slab_[ev.slot].msg.sketch.reset();
    freeSlots_.push_back(ev.slot);

    now_ = ev.time;
    ++result_.metrics.events;
    ++result_.delivered;
    const Port inPort = reversePort_[portBase_[env.src] + env.port];
    auto& expected = recvSeq_[portBase_[env.dst] + inPort];
    if (env.seq != expected + 1) ++result_.fifoViolations;
    expected = env.seq;

    std::uint64_t tbits;
    std::memcpy(&tbits, &now_, sizeof tbits);
    hash = mix(hash, tbits, g_.id(env.src), g_.id(env.dst), env.seq,
               static_cast<std::uint64_t>(env.msg.tag), env.bits);
    if (cfg_.recordTrace) {
      std::ostringstream line;
      line.precision(17);
      line << now_ << ' ' << g_.id(env.src) << ' ' << g_.id(env.dst) << ' ' << env.seq << ' '
           << tagName(env.msg.tag) << ' ' << env.bits;
      result_.trace.push_back(line.str());
    }
    Context ctx(*this, env.dst);
    processes[env.dst]->onMessage(ctx, inPort, env.msg);
  }
  result_.quiescent = heap.empty() && result_.failure.empty() && !result_.halted;
  result_.metrics.simTime = now_;
  result_.traceHash = hash;
  return std::move(result_);
}

}  // namespace amst
