#include "amst/node.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace amst {

StageSelect parseStageSelect(const std::string& text) {
  if (text == "forest") return StageSelect::Forest;
  if (text == "fmin") return StageSelect::Fmin;
  if (text == "bfs") return StageSelect::Bfs;
  if (text == "mst") return StageSelect::Mst;
  if (text == "all") return StageSelect::All;
  throw std::invalid_argument("unknown stage: " + text);
}

std::string stageSelectName(StageSelect s) {
  switch (s) {
    case StageSelect::Forest: return "forest";
    case StageSelect::Fmin: return "fmin";
    case StageSelect::Bfs: return "bfs";
    case StageSelect::Mst: return "mst";
    case StageSelect::All: return "all";
  }
  return "?";
}

bool selectsFmin(StageSelect s) { return s == StageSelect::Fmin || s == StageSelect::Mst || s == StageSelect::All; }
bool selectsBfs(StageSelect s) { return s == StageSelect::Bfs || s == StageSelect::All; }
bool selectsFinal(StageSelect s) { return s == StageSelect::Mst || s == StageSelect::All; }

NodeAgent::NodeAgent(Knowledge k, std::shared_ptr<const AgentConfig> cfg) : k_(std::move(k)), cfg_(std::move(cfg)) {
  const auto& p = cfg_->params;
  const std::size_t n = k_.nEstimate();
  thr_ = computeThresholds(n, p);
  lnN_ = std::log(static_cast<double>(std::max<std::size_t>(n, 2)));
  sampleBudget_ = static_cast<std::uint32_t>(std::ceil(16.0 * p.cTree * lnN_));
  terminalSize_ = 2.0 * lnN_;
  findBudget_ = static_cast<std::uint32_t>(std::ceil(16.0 * p.cFind * lnN_));
  approxCopies_ = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::ceil(p.cApprox * lnN_)));
  retryBudget_ = static_cast<std::uint32_t>(std::ceil(32.0 * lnN_));
  const std::uint64_t nn = n;
  levels_ = XorSketch::levelsFor(std::max<std::uint64_t>(1, nn * (nn - 1) / 2));

  const std::size_t d = k_.degree();
  high_ = static_cast<double>(d) >= thr_.highDegree;
  star_ = drawStar(cfg_->protocolSeed, cfg_->starSalt, k_.self(), thr_.starProbability);
  lowHeard_.assign(d, 0);
  neighborLow_.assign(d, 0);
  nonGprime_.assign(d, 0);
  excluded_.assign(d, 0);
  fminPort_.assign(d, 0);
  bfsLive_.assign(d, 0);
  se_.assign(d, GhsEdge::None);
  fragId_ = coinFragId_ = curFragId_ = k_.self();
}

void NodeAgent::presetFixture(NodeId fragId, Port parent, std::vector<Port> children, bool gprime,
                              bool sendLowDegree) {
  fixture_ = true;
  fixtureLowSender_ = sendLowDegree;
  star_ = false;
  high_ = gprime;
  initDone_ = true;
  xId_ = fragId;
  fParent_ = parent;
  fNbrs_ = std::move(children);
  if (parent != kNoPort) fNbrs_.push_back(parent);
}

void NodeAgent::presetOp(FixtureOp op, std::uint64_t seed, std::uint64_t thresholdK) {
  fxOp_ = op;
  fxSeed_ = seed;
  fxK_ = thresholdK;
}

Message NodeAgent::make(Tag tag, Stage stage, std::uint8_t tree, std::uint32_t session) const {
  Message m;
  m.tag = tag;
  m.stage = fixture_ ? Stage::Test : stage;
  m.tree = tree;
  m.session = session;
  return m;
}

void NodeAgent::send(Context& ctx, Port to, Message m) {
  if (m.stage == Stage::Final && inGprime() && !fminDone_) ++gateViolations_;
  ctx.send(to, std::move(m));
}

std::vector<Port> NodeAgent::children(std::uint8_t tree) const {
  const std::vector<Port>* nbrs = nullptr;
  Port parent = kNoPort;
  switch (tree) {
    case kForestTree:
    case kSyncTree:
      nbrs = &fNbrs_;
      parent = fParent_;
      break;
    case kFragTree:
      nbrs = &fragNbrs_;
      parent = fragParent_;
      break;
    case kOldTree:
      nbrs = &oldNbrs_;
      parent = oldParent_;
      break;
    default:
      return bfsChildren_;
  }
  std::vector<Port> out;
  out.reserve(nbrs->size());
  for (Port p : *nbrs)
    if (p != parent) out.push_back(p);
  return out;
}

void NodeAgent::failRun(Context& ctx, const std::string& why) {
  if (failure_.empty()) failure_ = why;
  ctx.fail("node " + std::to_string(k_.self()) + ": " + why);
}

void NodeAgent::onWake(Context& ctx) {
  const Port d = static_cast<Port>(k_.degree());
  if (fixture_) {
    if (fixtureLowSender_)
      for (Port p = 0; p < d; ++p) send(ctx, p, make(Tag::LowDegree, Stage::Test));
    if (fxOp_ != FixtureOp::None) fixtureStart(ctx);
    return;
  }
  if (star_) {
    starReplies_ = d;
    for (Port p = 0; p < d; ++p) {
      Message m = make(Tag::Star, Stage::Forest);
      m.arg[0] = high_ ? 1 : 0;
      m.words = 1;
      send(ctx, p, std::move(m));
    }
    if (d == 0) finishInit(ctx);
  } else if (!high_) {
    for (Port p = 0; p < d; ++p) send(ctx, p, make(Tag::LowDegree, Stage::Forest));
    initDone_ = true;
    openForestGate(ctx);
    fminDone_ = true;
    if (selectsFmin(cfg_->stages)) ctx.markStageDone(Stage::Fmin);
    if (selectsFinal(cfg_->stages)) openFinalGate(ctx);
  }
}

void NodeAgent::onInit(Context& ctx, Port from, const Message& m) {
  switch (m.tag) {
    case Tag::Star: {
      if (m.arg[0] == 0) neighborLow_[from] = 1;
      Message r = make(Tag::NotChild, Stage::Forest);
      bool becameChild = false;
      if (star_) {
        r.tag = Tag::StarNode;
        r.arg[0] = high_ ? 1 : 0;
        r.words = 1;
      } else if (high_ && !initDone_) {
        r.tag = Tag::Child;
        xId_ = k_.neighborId(from);
        fParent_ = from;
        fNbrs_.push_back(from);
        becameChild = true;
      }
      send(ctx, from, std::move(r));
      if (becameChild) finishInit(ctx);
      break;
    }
    case Tag::Child:
      fNbrs_.push_back(from);
      [[fallthrough]];
    case Tag::NotChild:
    case Tag::StarNode:
      if (m.tag == Tag::StarNode && m.arg[0] == 0) neighborLow_[from] = 1;
      if (starReplies_ > 0 && --starReplies_ == 0) finishInit(ctx);
      break;
    default:
      break;
  }
}

void NodeAgent::finishInit(Context& ctx) {
  if (initDone_) return;
  initDone_ = true;
  if (star_) {
    xId_ = k_.self();
    mtStartPhase(ctx);
  }
  reevaluateDeferred(ctx);
}

void NodeAgent::onLowDegree(Context& ctx, Port from) {
  if (lowHeard_[from]) return;
  lowHeard_[from] = 1;
  neighborLow_[from] = 1;
  ++lowCount_;
  if (th_.active) thresholdEvent(ctx, 1);
  if (finalOpen_) ghsAddPort(from);
}

void NodeAgent::openForestGate(Context& ctx) {
  if (forestDone_) return;
  forestDone_ = true;
  ctx.markStageDone(Stage::Forest);
  if (!selectsBfs(cfg_->stages)) return;
  if (k_.self() == cfg_->bfsInitiator) bfsStart(ctx);
  auto held = std::move(bfsHeld_);
  bfsHeld_.clear();
  for (auto& [p, m] : held) bfsHandle(ctx, p, m);
}

void NodeAgent::openFinalGate(Context& ctx) {
  if (finalOpen_) return;
  finalOpen_ = true;
  ghsWake(ctx);
  auto held = std::move(ghsHeld_);
  ghsHeld_.clear();
  for (auto& [p, m] : held) {
    if (!ghsHandle(ctx, p, m)) ghsDeferred_.emplace_back(p, m);
    ghsDrain(ctx);
  }
}

void NodeAgent::onMessage(Context& ctx, Port from, const Message& m) { dispatch(ctx, from, m); }

void NodeAgent::dispatch(Context& ctx, Port from, const Message& m) {
  switch (m.tag) {
    case Tag::Star:
    case Tag::Child:
    case Tag::NotChild:
    case Tag::StarNode:
      onInit(ctx, from, m);
      break;
    case Tag::LowDegree:
      onLowDegree(ctx, from);
      break;
    case Tag::SketchRequest:
      onSketchRequest(ctx, from, m);
      break;
    case Tag::SketchReply:
      onSketchReply(ctx, from, m);
      break;
    case Tag::VerifyRequest:
      onVerifyRequest(ctx, from, m);
      break;
    case Tag::VerifyResult:
      onVerifyResult(ctx, from, m);
      break;
    case Tag::Verify:
      onVerify(ctx, from, m);
      break;
    case Tag::VerifyReply:
      onVerifyReply(ctx, from, m);
      break;
    case Tag::ThresholdStart:
      onThresholdStart(ctx, from, m);
      break;
    case Tag::CutCount:
      onCutCount(ctx, from, m);
      break;
    case Tag::MergeInstr:
      onMergeInstr(ctx, from, m);
      break;
    case Tag::Merge:
      onMerge(ctx, from, m);
      break;
    case Tag::Accept:
      onAccept(ctx, from, m);
      break;
    case Tag::Reject:
      onReject(ctx, from, m);
      break;
    case Tag::RejectUp:
      onRejectUp(ctx, from, m);
      break;
    case Tag::IdFlood:
      onIdFlood(ctx, from, m);
      break;
    case Tag::ForestDone:
      onForestDone(ctx, from, m);
      break;
    case Tag::PhaseStart:
      onPhaseStart(ctx, from, m);
      break;
    case Tag::StepDone:
      onStepDone(ctx, from, m);
      break;
    case Tag::MergeReq:
      onMergeReq(ctx, from, m);
      break;
    case Tag::SearchResult:
    case Tag::MergeAck:
      onMergeAck(ctx, from, m);
      break;
    case Tag::MergeOutcome:
      if (m.arg[3] == 0)
        onMergeOutcome(ctx, from, m);
      else
        onMergeOutcomeReply(ctx, from, m);
      break;
    case Tag::Depth:
      onDepth(ctx, from, m);
      break;
    case Tag::HeightReport:
      onHeightReport(ctx, from, m);
      break;
    case Tag::TruncFinal:
      onTruncFinal(ctx, from, m);
      break;
    case Tag::SketchUp:
      onSketchUp(ctx, from, m);
      break;
    case Tag::BoundsDown:
      onBoundsDown(ctx, from, m);
      break;
    case Tag::EdgeCheck:
      onEdgeCheck(ctx, from, m);
      break;
    case Tag::CheckUp:
      onCheckUp(ctx, from, m);
      break;
    case Tag::IdUpdate:
      onIdUpdate(ctx, from, m);
      break;
    case Tag::FminMark:
      onFminMark(ctx, from, m);
      break;
    case Tag::FminDone:
      onFminDone(ctx, from, m);
      break;
    case Tag::Extend:
    case Tag::Probe:
    case Tag::Join:
    case Tag::NoJoin:
    case Tag::LayerDone:
    case Tag::BfsDone:
      if (!forestDone_)
        bfsHeld_.emplace_back(from, m);
      else
        bfsHandle(ctx, from, m);
      break;
    case Tag::Connect:
    case Tag::Initiate:
    case Tag::Test:
    case Tag::GhsAccept:
    case Tag::GhsReject:
    case Tag::Report:
    case Tag::ChangeRoot:
    case Tag::GhsDone:
      if (!finalOpen_) {
        ghsHeld_.emplace_back(from, m);
      } else {
        if (!ghsHandle(ctx, from, m)) ghsDeferred_.emplace_back(from, m);
        ghsDrain(ctx);
      }
      break;
    default:
      break;
  }
}

NodeReport NodeAgent::report() const {
  NodeReport r;
  r.star = star_;
  r.high = high_;
  r.initDone = initDone_;
  r.forestId = xId_;
  r.forestParent = fParent_;
  r.forestPorts = fNbrs_;
  std::sort(r.forestPorts.begin(), r.forestPorts.end());
  const Port d = static_cast<Port>(k_.degree());
  r.lowHeard.resize(d);
  r.neighborLow.resize(d);
  for (Port p = 0; p < d; ++p) {
    r.lowHeard[p] = lowHeard_[p] != 0;
    r.neighborLow[p] = neighborLow_[p] != 0;
    if (fminPort_[p]) r.fminPorts.push_back(p);
    if (isSparsePort(p)) r.sparsePorts.push_back(p);
    if (isSminPort(p)) r.sminPorts.push_back(p);
    if (se_[p] == GhsEdge::Branch) r.mstPorts.push_back(p);
  }
  r.forestDone = forestDone_;
  r.fminDone = fminDone_;
  r.bfsDone = bfsDone_;
  r.finalDone = finalDone_;
  r.bfsJoined = bfsJoined_;
  r.bfsParent = bfsParent_;
  r.bfsDepth = bfsDepth_;
  r.partA = partALog_;
  r.partBRan = partB_ && rb_.phase > 0;
  r.partBPhases = rb_.phase > 0 ? rb_.phase - 1 : 0;
  r.gateViolations = gateViolations_;
  r.syncViolations = syncViolations_;
  r.idUpdateViolations = idUpdateViolations_;
  r.failure = failure_;
  r.fixture = fx_;
  return r;
}

}  // namespace amst
