#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "amst/roles.hpp"
#include "amst/sim.hpp"
#include "amst/sketch.hpp"

namespace amst {

inline constexpr Port kNoPort = 0xffffffffu;

enum class StageSelect { Forest, Fmin, Bfs, Mst, All };
StageSelect parseStageSelect(const std::string& text);
std::string stageSelectName(StageSelect s);
bool selectsFmin(StageSelect s);
bool selectsBfs(StageSelect s);
bool selectsFinal(StageSelect s);

// Single-primitive fixtures run on a preset fragment tree.
enum class FixtureOp { None, FindAny, FindMin, ApproxCut, Threshold };

struct AgentConfig {
  ProtocolParams params;
  std::uint64_t protocolSeed = 0;
  std::uint32_t starSalt = 0;
  NodeId bfsInitiator = 0;
  StageSelect stages = StageSelect::All;
};

struct PartALog {
  std::uint32_t phase = 0;
  std::uint64_t minHeight = 0;
  std::uint64_t maxHeight = 0;
  std::uint64_t fragments = 0;
};

struct FixtureResult {
  bool done = false;
  XorSketch::Status status = XorSketch::Status::Empty;
  std::optional<SketchEdge> edge;
  bool verified = false;  // the returned edge was confirmed outgoing by a query across it
  std::uint64_t estimate = 0;
  std::uint64_t filteredEdges = 0;
  double triggerTime = -1.0;
  std::uint64_t eventsAtTrigger = 0;
};

// Everything the harness reads back from a node after a run.
struct NodeReport {
  bool star = false;
  bool high = false;
  bool initDone = false;
  NodeId forestId = 0;
  Port forestParent = kNoPort;
  std::vector<Port> forestPorts;
  std::vector<bool> lowHeard;     // per port: <Low-degree> arrived
  std::vector<bool> neighborLow;  // per port: neighbour known to be low-degree
  bool forestDone = false;
  bool fminDone = false;
  bool bfsDone = false;
  bool finalDone = false;
  std::vector<Port> fminPorts;
  std::vector<Port> sparsePorts;
  std::vector<Port> sminPorts;
  bool bfsJoined = false;
  Port bfsParent = kNoPort;
  std::uint32_t bfsDepth = 0;
  std::vector<Port> mstPorts;
  // r of each component only
  std::vector<PartALog> partA;
  bool partBRan = false;
  std::uint32_t partBPhases = 0;
  // audits
  std::uint64_t gateViolations = 0;
  std::uint64_t syncViolations = 0;
  std::uint64_t idUpdateViolations = 0;
  std::string failure;
  FixtureResult fixture;
};

class NodeAgent final : public Process {
 public:
  NodeAgent(Knowledge k, std::shared_ptr<const AgentConfig> cfg);

  void onWake(Context& ctx) override;
  void onMessage(Context& ctx, Port from, const Message& msg) override;

  // Fixture mode: skips initialization and installs a fragment tree. Nodes
  // outside the fragment keep fragId = own ID and only answer queries.
  void presetFixture(NodeId fragId, Port parent, std::vector<Port> children, bool gprime, bool sendLowDegree);
  void presetOp(FixtureOp op, std::uint64_t seed, std::uint64_t thresholdK = 0);

  NodeReport report() const;
  NodeId id() const { return k_.self(); }

 private:
  enum Tree : std::uint8_t { kForestTree = 0, kFragTree = 1, kOldTree = 2, kSyncTree = 3, kBfsTree = 4 };
  enum Filter : std::uint8_t { kFilterForest = 0, kFilterForestAll = 1, kFilterGprime = 2, kFilterAll = 3 };
  enum SyncKind : std::uint8_t { kSearch = 0, kMerge = 1, kTruncate = 2, kPartB = 3 };

  struct Wave {
    bool open = false;
    std::uint32_t session = 0;
    Tag kind = Tag::Ping;
    Port parent = kNoPort;  // kNoPort at the root
    std::uint32_t pending = 0;
    std::uint32_t queries = 0;
    bool localReady = true;
    std::shared_ptr<SketchBundle> bundle;
    std::array<std::uint64_t, 4> acc{};
    std::shared_ptr<const std::vector<SketchEdge>> cands;
    std::vector<Port> owner;      // per candidate: port toward owner, or kSelf
    std::vector<Port> edgePort;   // per candidate: local port of the edge if we own it
  };
  static constexpr Port kSelf = 0xfffffffeu;

  // ---- node.cpp: plumbing, init, gates
  void send(Context& ctx, Port to, Message m);
  Message make(Tag tag, Stage stage, std::uint8_t tree = 0, std::uint32_t session = 0) const;
  std::vector<Port> children(std::uint8_t tree) const;
  bool inGprime() const { return star_ || high_; }
  void failRun(Context& ctx, const std::string& why);
  void onInit(Context& ctx, Port from, const Message& m);
  void finishInit(Context& ctx);
  void onLowDegree(Context& ctx, Port from);
  void openForestGate(Context& ctx);
  void openFinalGate(Context& ctx);
  void dispatch(Context& ctx, Port from, const Message& m);

  // ---- node_waves.cpp: sketch / verify waves, threshold detection
  void startSketchWave(Context& ctx, std::uint8_t tree, std::uint32_t session, std::uint64_t seed,
                       std::uint32_t copies, std::uint8_t filter, bool newPhase, Weight lo, Weight hi,
                       std::optional<SketchEdge> cand);
  void startVerifyWave(Context& ctx, std::uint8_t tree, std::uint32_t session,
                       std::shared_ptr<const std::vector<SketchEdge>> cands);
  void onSketchRequest(Context& ctx, Port from, const Message& m);
  void onSketchReply(Context& ctx, Port from, const Message& m);
  void onVerifyRequest(Context& ctx, Port from, const Message& m);
  void onVerifyResult(Context& ctx, Port from, const Message& m);
  void onVerify(Context& ctx, Port from, const Message& m);
  void onVerifyReply(Context& ctx, Port from, const Message& m);
  void answerVerify(Context& ctx, Port from, const Message& m);
  void tryComplete(Context& ctx, std::uint8_t tree);
  void completeAtRoot(Context& ctx, std::uint8_t tree, Wave& w);
  void localSketch(SketchBundle& out, std::uint64_t seed, std::uint32_t copies, std::uint8_t filter,
                   Weight lo, Weight hi, std::uint64_t* count) const;
  bool edgeAllowed(Port p, std::uint8_t filter) const;
  std::optional<Port> ownEdgePort(const SketchEdge& e) const;
  std::uint64_t sketchSeed(std::uint64_t a, std::uint64_t b, std::uint64_t c) const;
  void startThreshold(Context& ctx, std::uint32_t session, std::uint64_t target);
  void onThresholdStart(Context& ctx, Port from, const Message& m);
  void onCutCount(Context& ctx, Port from, const Message& m);
  void thresholdEvent(Context& ctx, std::uint64_t delta);

  // ---- node_forest.cpp: MaximalTree and merge handshake
  void mtStartPhase(Context& ctx);
  void mtSample(Context& ctx);
  void mtOnSketch(Context& ctx, const SketchBundle& bundle);
  void mtOnVerify(Context& ctx, const Wave& w);
  void mtDecide(Context& ctx);
  void mtOnApprox(Context& ctx, const SketchBundle& bundle, std::uint64_t filtered);
  void mtTrigger(Context& ctx);
  void onMergeInstr(Context& ctx, Port from, const Message& m);
  void onMerge(Context& ctx, Port from, const Message& m);
  void evalMerge(Context& ctx, Port from, NodeId tId, bool& handled);
  void reevaluateDeferred(Context& ctx);
  void onAccept(Context& ctx, Port from, const Message& m);
  void onReject(Context& ctx, Port from, const Message& m);
  void onRejectUp(Context& ctx, Port from, const Message& m);
  void onIdFlood(Context& ctx, Port from, const Message& m);
  void forestTerminate(Context& ctx);
  void onForestDone(Context& ctx, Port from, const Message& m);
  void fixtureStart(Context& ctx);
  void fixtureOnSketch(Context& ctx, const Wave& w);
  void fixtureOnVerify(Context& ctx, const Wave& w);

  // ---- node_fmin.cpp: Part A and Part B
  void fminBegin(Context& ctx);
  void syncBroadcast(Context& ctx, std::uint8_t kind, std::uint32_t phase);
  void onPhaseStart(Context& ctx, Port from, const Message& m);
  void syncLocalDone(Context& ctx);
  void syncTryReport(Context& ctx);
  void onStepDone(Context& ctx, Port from, const Message& m);
  void rootStepComplete(Context& ctx);
  void partAAdvance(Context& ctx, const PartALog& entry);
  bool coinHead(std::uint32_t phase, NodeId fragId) const;
  void searchRound(Context& ctx);
  void searchOnSketch(Context& ctx, const Wave& w);
  void onMergeReq(Context& ctx, Port from, const Message& m);
  void onMergeAck(Context& ctx, Port from, const Message& m);
  void onMergeOutcome(Context& ctx, Port from, const Message& m);
  void onMergeOutcomeReply(Context& ctx, Port from, const Message& m);
  void outcomeTryComplete(Context& ctx);
  void onDepth(Context& ctx, Port from, const Message& m);
  void depthTryComplete(Context& ctx);
  void onHeightReport(Context& ctx, Port from, const Message& m);
  void onTruncFinal(Context& ctx, Port from, const Message& m);
  void partBStart(Context& ctx);
  void partBRound(Context& ctx, std::uint32_t phase, std::uint32_t round, Weight lo, Weight hi,
                  std::optional<SketchEdge> cand);
  void partBOnSketch(Context& ctx, const Wave& w);
  void onSketchUp(Context& ctx, Port from, const Message& m);
  void rootOnSketchUp(Context& ctx, const Message& m);
  void rootProcessFragment(Context& ctx, NodeId cur);
  void rootFinishPhase(Context& ctx);
  void onBoundsDown(Context& ctx, Port from, const Message& m);
  void onEdgeCheck(Context& ctx, Port from, const Message& m);
  void onCheckUp(Context& ctx, Port from, const Message& m);
  void rootOnCheck(Context& ctx, const Message& m);
  void onIdUpdate(Context& ctx, Port from, const Message& m);
  void idUpdateTryComplete(Context& ctx);
  void onFminMark(Context& ctx, Port from, const Message& m);
  void fminFinish(Context& ctx);
  void onFminDone(Context& ctx, Port from, const Message& m);
  void routeUp(Context& ctx, Message m);
  void routeDown(Context& ctx, NodeId oldLeader, Message m);

  // ---- node_bfs.cpp
  void bfsStart(Context& ctx);
  void bfsHandle(Context& ctx, Port from, const Message& m);
  void bfsProbeLayer(Context& ctx, std::uint32_t layer);
  void bfsTryReport(Context& ctx);
  bool isSparsePort(Port p) const;

  // ---- node_ghs.cpp
  void ghsWake(Context& ctx);
  bool ghsHandle(Context& ctx, Port from, const Message& m);  // false = defer
  void ghsTest(Context& ctx);
  void ghsReport(Context& ctx);
  void ghsChangeRoot(Context& ctx);
  void ghsDrain(Context& ctx);
  bool isSminPort(Port p) const;
  void ghsAddPort(Port p);

  // ---- state
  Knowledge k_;
  std::shared_ptr<const AgentConfig> cfg_;
  Thresholds thr_;
  double lnN_ = 1.0;
  std::uint32_t sampleBudget_ = 1;
  double terminalSize_ = 1.0;
  std::uint32_t findBudget_ = 1;
  std::uint32_t approxCopies_ = 1;
  std::uint32_t retryBudget_ = 1;
  int levels_ = 2;
  bool star_ = false;
  bool high_ = false;
  bool fixture_ = false;
  bool fixtureLowSender_ = false;
  std::string failure_;

  // initialization + per-port knowledge
  std::uint32_t starReplies_ = 0;
  bool initDone_ = false;
  std::vector<std::uint8_t> lowHeard_;
  std::vector<std::uint8_t> neighborLow_;
  std::vector<std::uint8_t> nonGprime_;  // learned from query replies
  std::uint64_t lowCount_ = 0;

  // forest F
  NodeId xId_ = 0;
  Port fParent_ = kNoPort;
  std::vector<Port> fNbrs_;
  bool forestDone_ = false;
  std::vector<std::uint8_t> excluded_;  // sampled this phase
  std::uint64_t epochBase_ = 0;
  struct Deferred {
    Port port;
    NodeId tId;
  };
  std::vector<Deferred> deferredMerges_;
  std::vector<std::pair<Port, Message>> deferredVerifies_;
  struct MaximalTreeState {
    enum class Mode { Idle, Sampling, Verifying, Merging, Approx, Waiting, Terminated };
    Mode mode = Mode::Idle;
    std::uint32_t session = 0;
    std::uint32_t phase = 0;
    std::uint32_t counter = 0;
    bool firstWave = true;
    bool sawEmpty = false;
    std::vector<SketchEdge> sampled;  // A
    std::uint64_t thresholdTarget = 0;
    std::uint64_t thresholdCount = 0;
  } mt_;
  std::uint32_t waveSession_ = 0;
  struct ThresholdState {
    bool active = false;
    bool leader = false;
    std::uint32_t session = 0;
    Port parent = kNoPort;
  } th_;

  std::array<Wave, 5> waves_{};

  // F_min
  bool fminStarted_ = false;
  bool fminDone_ = false;
  NodeId fragId_ = 0;
  NodeId coinFragId_ = 0;
  Port fragParent_ = kNoPort;
  std::vector<Port> fragNbrs_;
  std::vector<std::uint8_t> fminPort_;
  std::uint64_t fragHeight_ = 0;  // leader only
  struct SyncState {
    bool open = false;
    std::uint8_t kind = 0;
    std::uint32_t phase = 0;
    Port parent = kNoPort;
    std::uint32_t pending = 0;
    bool localDone = false;
    std::uint64_t minH = ~0ull, maxH = 0, frags = 0;
    std::uint32_t lastPhase = 0;  // highest phase announced to this node
  } sync_;
  struct SearchState {
    bool running = false;
    bool found = false;
    Weight lo = 1, hi = 0;
    std::optional<SketchEdge> cand;
    std::uint32_t round = 0;
    std::uint32_t failures = 0;
    std::uint32_t session = 0;
  } search_;
  // A leader whose fragment did not change since its last completed search
  // reuses that result: the cut, and hence its minimum edge, is the same.
  bool searchCached_ = false;
  bool cachedFound_ = false;
  bool fragChanged_ = false;  // accepted a merge request this phase
  bool mergedAway_ = false;   // leader: our merge request was accepted this phase
  Port searchOwner_ = kNoPort;     // toward owner of the last candidate (kSelf if we own it)
  Port searchEdgePort_ = kNoPort;  // the candidate edge's local port when owned
  struct MergeState {
    bool pendingBusiness = false;
    bool accepted = false;
    NodeId newId = 0;
    Port newParent = kNoPort;  // owner: port to the head fragment
  } merge_;
  struct OutcomeWave {
    bool open = false;
    Port parent = kNoPort;
    std::uint32_t pending = 0;
    NodeId newId = 0;
  } outcome_;
  struct TruncState {
    bool open = false;
    Port parent = kNoPort;
    std::uint64_t depth = 0;
    std::uint32_t pending = 0;
    std::uint64_t remH = 0;
    std::vector<Port> cutChildren;
    bool cut = false;
    bool changed = false;
    bool finalOpen = false;
    std::uint32_t finalPending = 0;
    Port finalParent = kNoPort;
    bool processedFinal = false;
  } trunc_;
  std::vector<PartALog> partALog_;
  std::uint64_t expectedOld_ = 0;

  // Part B
  bool partB_ = false;
  bool oldLeader_ = false;
  NodeId oldLeaderId_ = 0;
  NodeId curFragId_ = 0;
  Port oldParent_ = kNoPort;
  std::vector<Port> oldNbrs_;
  std::uint32_t pbPhase_ = 0;
  std::uint32_t pbRound_ = 0;
  std::unordered_map<NodeId, Port> pbRoutes_;
  Port pbOwner_ = kNoPort;
  Port pbEdgePort_ = kNoPort;
  struct IdWave {
    bool open = false;
    Port parent = kNoPort;
    std::uint32_t pending = 0;
    std::uint32_t marks = 0;
    std::uint32_t phase = 0;
  } idw_;
  bool lastFinal_ = false;  // the ID wave in progress is the last one
  struct RootFrag {
    std::vector<NodeId> olds;
    std::uint32_t received = 0;
    std::shared_ptr<SketchBundle> bundle;
    Weight lo = 1, hi = 0;
    std::optional<SketchEdge> cand;
    NodeId candOwner = 0;
    std::uint32_t round = 0;
    std::uint32_t failures = 0;
    bool done = false;
    NodeId remote = 0;
    bool checked = false;
  };
  struct RootB {
    std::uint32_t phase = 0;
    std::unordered_map<NodeId, NodeId> curOf;  // old leader -> current fragment
    std::unordered_map<NodeId, RootFrag> frags;
    std::uint64_t reported = 0;
    std::uint32_t fragsDone = 0;
    std::uint32_t checksPending = 0;
    std::unordered_map<NodeId, std::uint32_t> groupSize;  // current fragment -> old fragments in it
    std::uint64_t groups = 0;  // current fragments this phase
    bool ready = false;        // every node has frozen its old fragment
    bool finishing = false;    // one group left; waiting for the last ID waves
    std::uint64_t finalAcks = 0;
    std::vector<Message> buffered;
  } rb_;

  // BFS
  bool bfsJoined_ = false;
  Port bfsParent_ = kNoPort;
  std::uint32_t bfsDepth_ = 0;
  std::vector<Port> bfsChildren_;
  std::vector<std::uint8_t> bfsLive_;
  bool bfsDone_ = false;
  struct BfsWave {
    bool open = false;
    std::uint32_t layer = 0;
    std::uint32_t pending = 0;
    std::uint64_t added = 0;
  } bw_;
  std::vector<std::pair<Port, Message>> bfsHeld_;

  // final stage (GHS)
  enum class GhsNode : std::uint8_t { Sleeping, Find, Found };
  enum class GhsEdge : std::uint8_t { None, Basic, Branch, Rejected };
  bool finalOpen_ = false;
  bool finalDone_ = false;
  std::vector<std::pair<Port, Message>> ghsHeld_;
  std::deque<std::pair<Port, Message>> ghsDeferred_;
  GhsNode sn_ = GhsNode::Sleeping;
  std::vector<GhsEdge> se_;
  std::uint32_t ln_ = 0;
  Weight fn_ = 0;
  Port inBranch_ = kNoPort;
  Port bestEdge_ = kNoPort;
  Weight bestWt_ = kWeightMax;
  Port testEdge_ = kNoPort;
  std::uint32_t findCount_ = 0;

  // fixtures
  FixtureOp fxOp_ = FixtureOp::None;
  std::uint64_t fxSeed_ = 0;
  std::uint64_t fxK_ = 0;
  FixtureResult fx_;
  std::optional<SketchEdge> fxCandidate_;

  std::uint64_t gateViolations_ = 0;
  std::uint64_t syncViolations_ = 0;
  std::uint64_t idUpdateViolations_ = 0;
};

}  // namespace amst
