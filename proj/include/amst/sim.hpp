#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amst/graph.hpp"
#include "amst/message.hpp"

namespace amst {

// Local port number: index into the node's neighbour list (sorted by ID).
using Port = std::uint32_t;

// Everything a node may know at wake-up under KT1: its own ID, its
// neighbours' IDs, its incident edge weights and an estimate of n.
// Reads through a port the node does not have are recorded as violations.
class Knowledge {
 public:
  struct Neighbor {
    NodeId id;
    Weight weight;
  };

  Knowledge() = default;
  Knowledge(NodeId self, std::size_t nEstimate, std::vector<Neighbor> neighbors,
            std::shared_ptr<std::uint64_t> violations);

  NodeId self() const { return self_; }
  std::size_t nEstimate() const { return nEstimate_; }
  std::size_t degree() const { return neighbors_.size(); }

  NodeId neighborId(Port p) const;
  Weight weight(Port p) const;
  std::optional<Port> portOf(NodeId neighbor) const;

 private:
  void violate() const;

  NodeId self_ = 0;
  std::size_t nEstimate_ = 0;
  std::vector<Neighbor> neighbors_;
  std::shared_ptr<std::uint64_t> violations_;
};

struct KnowledgeSet {
  std::vector<Knowledge> nodes;
  std::shared_ptr<std::uint64_t> violations;
};

// Seeds per-node knowledge. With doubleN the nodes are told 2n instead of n.
KnowledgeSet knowledgeInit(const WeightedGraph& g, bool doubleN = false);

struct Envelope {
  NodeIndex src = 0;
  NodeIndex dst = 0;
  Port port = 0;  // sender-side port
  std::uint64_t seq = 0;  // per ordered (src, dst) pair, starting at 1
  double sendTime = 0.0;
  double deliverTime = 0.0;
  std::uint64_t bits = 0;
  Message msg;
};

enum class DelayPolicy { Unit, UniformRandom, AdversarialLag };

struct SchedulerConfig {
  DelayPolicy policy = DelayPolicy::Unit;
  std::uint64_t seed = 0;
  // AdversarialLag: fraction of nodes whose incoming messages lag near 1.
  double lagFraction = 0.25;
  // Overrides the policy when set; must return a delay in (0, 1].
  std::function<double(const Envelope&)> custom;
  // Charge one time unit per CONGEST fragment instead of per logical message.
  bool pipelined = false;

  static DelayPolicy parsePolicy(const std::string& text);
};
std::string policyName(DelayPolicy p);

struct StageMetrics {
  std::uint64_t logicalMessages = 0;
  std::uint64_t congestMessages = 0;
  double endTime = 0.0;  // latest markStageDone time
  bool reached = false;
  bool operator==(const StageMetrics&) const = default;
};

struct Metrics {
  std::uint64_t logicalMessages = 0;
  std::uint64_t congestMessages = 0;
  double simTime = 0.0;
  std::uint64_t events = 0;
  std::array<StageMetrics, kStageCount> perStage{};
  std::array<std::uint64_t, kTagCount> perTag{};

  const StageMetrics& stage(Stage s) const { return perStage[static_cast<std::size_t>(s)]; }
  bool operator==(const Metrics&) const = default;
};

class Context;

// A per-node protocol state machine.
class Process {
 public:
  virtual ~Process() = default;
  virtual void onWake(Context& ctx) = 0;
  virtual void onMessage(Context& ctx, Port from, const Message& msg) = 0;
};

struct KernelConfig {
  std::uint32_t cMsg = 4;
  std::uint64_t maxEvents = 400'000'000;
  bool recordTrace = false;
};

struct RunResult {
  Metrics metrics;
  bool quiescent = false;
  bool halted = false;
  std::string failure;  // empty on success
  std::uint64_t traceHash = 0;
  std::vector<std::string> trace;  // "t src dst seq tag bits" when recorded
  std::uint64_t fifoViolations = 0;
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
};

class Kernel;

// Handle a process uses to act on the network during one event.
class Context {
 public:
  Context(Kernel& kernel, NodeIndex self) : kernel_(kernel), self_(self) {}
  void send(Port to, Message msg);
  double now() const;
  void markStageDone(Stage s);
  void fail(const std::string& why);

 private:
  Kernel& kernel_;
  NodeIndex self_;
};

// Deterministic discrete-event simulator of the asynchronous CONGEST model.
class Kernel {
 public:
  Kernel(const WeightedGraph& g, SchedulerConfig sched, KernelConfig cfg = {});
  ~Kernel();
  Kernel(const Kernel&) = delete;
  Kernel& operator=(const Kernel&) = delete;

  using HaltPredicate = std::function<bool(const Kernel&)>;

  // Wakes every node at time 0 and processes events until quiescence, the
  // halt predicate, the event ceiling or a process-reported failure.
  RunResult run(std::span<Process* const> processes, const HaltPredicate& halt = {});

  double now() const { return now_; }
  const Metrics& metrics() const { return result_.metrics; }
  const BitBudget& budget() const { return budget_; }

 private:
  friend class Context;
  struct Event;
  struct Queue;

  void send(NodeIndex from, Port port, Message msg);
  double drawDelay(const Envelope& env, std::uint64_t fragments);

  const WeightedGraph& g_;
  SchedulerConfig sched_;
  KernelConfig cfg_;
  BitBudget budget_;
  std::vector<std::size_t> portBase_;     // offset of node v's ports
  std::vector<Port> reversePort_;         // port at the far end
  std::vector<std::uint64_t> sendSeq_;    // per (node, port)
  std::vector<std::uint64_t> recvSeq_;    // per (node, port)
  std::vector<double> lastDeliver_;       // per (node, port), sender side
  std::vector<bool> lagged_;
  std::vector<Envelope> slab_;
  std::vector<std::uint32_t> freeSlots_;
  std::unique_ptr<Queue> queue_;
  double now_ = 0.0;
  RunResult result_;
};

}  // namespace amst
