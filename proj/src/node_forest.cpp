#include <algorithm>
#include <cmath>

#include "amst/node.hpp"
#include "amst/primitives.hpp"

namespace amst {


void NodeAgent::mtStartPhase(Context& ctx) {
  if (mt_.mode == MaximalTreeState::Mode::Terminated) return;
  ++mt_.phase;
  mt_.counter = 0;
  mt_.sampled.clear();
  mt_.firstWave = true;
  mt_.sawEmpty = false;
  th_.active = false;
  th_.leader = false;
  mtSample(ctx);
}

void NodeAgent::mtSample(Context& ctx) {
  mt_.mode = MaximalTreeState::Mode::Sampling;
  const std::uint32_t copies = std::min(cfg_->params.searchCopies, sampleBudget_ - mt_.counter);
  const std::uint32_t session = ++waveSession_;
  const bool first = mt_.firstWave;
  mt_.firstWave = false;
  startSketchWave(ctx, kForestTree, session, sketchSeed(k_.self(), mt_.phase, session), copies, kFilterForest,
                  first, 0, kWeightMax, std::nullopt);
}

void NodeAgent::mtOnSketch(Context& ctx, const SketchBundle& bundle) {
  mt_.counter += static_cast<std::uint32_t>(bundle.size());
  auto cands = std::make_shared<std::vector<SketchEdge>>();
  for (const auto& s : bundle) {
    auto r = s.decode();
    if (r.status == XorSketch::Status::Empty) mt_.sawEmpty = true;
    if (r.status != XorSketch::Status::Decoded) continue;
    if (std::find(mt_.sampled.begin(), mt_.sampled.end(), r.edge) != mt_.sampled.end()) continue;
    if (std::find(cands->begin(), cands->end(), r.edge) != cands->end()) continue;
    cands->push_back(r.edge);
  }
  if (!cands->empty()) {
    mt_.mode = MaximalTreeState::Mode::Verifying;
    startVerifyWave(ctx, kForestTree, ++waveSession_, std::move(cands));
    return;
  }
  if (mt_.sawEmpty || mt_.counter >= sampleBudget_)
    mtDecide(ctx);
  else
    mtSample(ctx);
}

void NodeAgent::mtOnVerify(Context& ctx, const Wave& w) {
  const auto& cands = *w.cands;
  std::size_t best = cands.size();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (!((w.acc[1] >> i) & 1)) continue;
    mt_.sampled.push_back(cands[i]);
    if (((w.acc[2] >> i) & 1) && (best == cands.size() || cands[i].w < cands[best].w)) best = i;
  }
  if (best < cands.size()) {
    mt_.mode = MaximalTreeState::Mode::Merging;
    Message instr = make(Tag::MergeInstr, Stage::Forest, kForestTree, w.session);
    instr.arg[0] = best;
    instr.words = 1;
    onMergeInstr(ctx, kNoPort, instr);
    return;
  }
  if (mt_.sawEmpty || mt_.counter >= sampleBudget_)
    mtDecide(ctx);
  else
    mtSample(ctx);
}

void NodeAgent::mtDecide(Context& ctx) {
  if (static_cast<double>(mt_.sampled.size()) < terminalSize_) {
    forestTerminate(ctx);
    return;
  }
  mt_.mode = MaximalTreeState::Mode::Approx;
  const std::uint32_t session = ++waveSession_;
  startSketchWave(ctx, kForestTree, session, sketchSeed(k_.self(), mt_.phase, session), approxCopies_,
                  kFilterForestAll, false, 0, kWeightMax, std::nullopt);
}

void NodeAgent::mtOnApprox(Context& ctx, const SketchBundle& bundle, std::uint64_t filtered) {
  const std::uint64_t est = approxEstimate(bundle, filtered);
  const double r = static_cast<double>(est) / 2.0;
  const auto target = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(r / 4.0)));
  mt_.mode = MaximalTreeState::Mode::Waiting;
  startThreshold(ctx, ++waveSession_, target);
}

void NodeAgent::mtTrigger(Context& ctx) {
  if (mt_.mode != MaximalTreeState::Mode::Waiting) return;
  mtStartPhase(ctx);
}

void NodeAgent::onMergeInstr(Context& ctx, Port, const Message& m) {
  const Wave& w = waves_[kForestTree];
  const auto i = static_cast<std::size_t>(m.arg[0]);
  if (w.session != m.session || i >= w.owner.size()) return;
  if (w.owner[i] == kSelf) {
    Message req = make(Tag::Merge, Stage::Forest);
    req.arg[0] = xId_;
    req.ids = 1;
    send(ctx, w.edgePort[i], std::move(req));
  } else if (w.owner[i] != kNoPort) {
    send(ctx, w.owner[i], m);
  }
}

void NodeAgent::evalMerge(Context& ctx, Port from, NodeId tId, bool& handled) {
  handled = false;
  if (!initDone_) return;
  if (tId < xId_) {
    Message a = make(Tag::Accept, Stage::Forest);
    a.arg[0] = xId_;
    a.ids = 1;
    send(ctx, from, std::move(a));
    fNbrs_.push_back(from);
    handled = true;
  } else if (tId == xId_) {
    send(ctx, from, make(Tag::Reject, Stage::Forest));
    handled = true;
  }
}

void NodeAgent::onMerge(Context& ctx, Port from, const Message& m) {
  bool handled = false;
  evalMerge(ctx, from, m.arg[0], handled);
  if (!handled) deferredMerges_.push_back({from, m.arg[0]});
}

void NodeAgent::reevaluateDeferred(Context& ctx) {
  if (!initDone_) return;
  auto pending = std::move(deferredMerges_);
  deferredMerges_.clear();
  for (const auto& d : pending) {
    bool handled = false;
    evalMerge(ctx, d.port, d.tId, handled);
    if (!handled) deferredMerges_.push_back(d);
  }
  auto verifies = std::move(deferredVerifies_);
  deferredVerifies_.clear();
  for (auto& [p, m] : verifies) answerVerify(ctx, p, m);
}

void NodeAgent::onAccept(Context& ctx, Port from, const Message& m) {
  fParent_ = from;
  fNbrs_.push_back(from);
  xId_ = m.arg[0];
  Message f = make(Tag::IdFlood, Stage::Forest, kForestTree);
  f.arg[0] = xId_;
  f.ids = 1;
  for (Port c : children(kForestTree)) send(ctx, c, f);
  if (mt_.mode != MaximalTreeState::Mode::Terminated) mt_.mode = MaximalTreeState::Mode::Idle;
  th_ = ThresholdState{};
  reevaluateDeferred(ctx);
}

void NodeAgent::onReject(Context& ctx, Port, const Message&) {
  Message up = make(Tag::RejectUp, Stage::Forest, kForestTree);
  onRejectUp(ctx, kNoPort, up);
}

void NodeAgent::onRejectUp(Context& ctx, Port, const Message& m) {
  if (fParent_ == kNoPort) {
    if (xId_ == k_.self() && mt_.mode == MaximalTreeState::Mode::Merging) mtStartPhase(ctx);
    return;
  }
  send(ctx, fParent_, m);
}

void NodeAgent::onIdFlood(Context& ctx, Port from, const Message& m) {
  fParent_ = from;
  xId_ = m.arg[0];
  for (Port c : children(kForestTree)) send(ctx, c, m);
  if (mt_.mode != MaximalTreeState::Mode::Terminated) mt_.mode = MaximalTreeState::Mode::Idle;
  th_ = ThresholdState{};
  reevaluateDeferred(ctx);
}

void NodeAgent::forestTerminate(Context& ctx) {
  mt_.mode = MaximalTreeState::Mode::Terminated;
  Message done = make(Tag::ForestDone, Stage::Forest, kForestTree);
  for (Port c : children(kForestTree)) send(ctx, c, done);
  openForestGate(ctx);
  if (selectsFmin(cfg_->stages)) fminBegin(ctx);
}

void NodeAgent::onForestDone(Context& ctx, Port, const Message& m) {
  for (Port c : children(kForestTree)) send(ctx, c, m);
  openForestGate(ctx);
}

void NodeAgent::fixtureStart(Context& ctx) {
  switch (fxOp_) {
    case FixtureOp::FindAny:
      startSketchWave(ctx, kForestTree, ++waveSession_, fxSeed_, 1, kFilterForestAll, false, 0, kWeightMax,
                      std::nullopt);
      break;
    case FixtureOp::FindMin:
      search_ = SearchState{};
      search_.running = true;
      search_.lo = 0;
      search_.hi = kWeightMax;
      startSketchWave(ctx, kForestTree, ++waveSession_, mix(fxSeed_, 0), cfg_->params.searchCopies,
                      kFilterForestAll, false, search_.lo, search_.hi, std::nullopt);
      break;
    case FixtureOp::ApproxCut:
      startSketchWave(ctx, kForestTree, ++waveSession_, fxSeed_, approxCopies_, kFilterForestAll, false, 0,
                      kWeightMax, std::nullopt);
      break;
    case FixtureOp::Threshold:
      epochBase_ = 0;
      startThreshold(ctx, ++waveSession_, (fxK_ + 3) / 4);
      break;
    case FixtureOp::None:
      break;
  }
}

void NodeAgent::fixtureOnSketch(Context& ctx, const Wave& w) {
  switch (fxOp_) {
    case FixtureOp::FindAny: {
      auto r = w.bundle->front().decode();
      fx_.status = r.status;
      if (r.status != XorSketch::Status::Decoded) {
        fx_.done = true;
        return;
      }
      fx_.edge = r.edge;
      startVerifyWave(ctx, kForestTree, ++waveSession_, std::make_shared<const std::vector<SketchEdge>>(1, r.edge));
      return;
    }
    case FixtureOp::ApproxCut:
      fx_.estimate = approxEstimate(*w.bundle, w.acc[1]);
      fx_.filteredEdges = w.acc[1];
      fx_.done = true;
      return;
    case FixtureOp::FindMin: {
      auto step = descend(*w.bundle);
      if (step.action == DescentStep::Action::Done) {
        fx_.done = true;
        fx_.status = search_.cand ? XorSketch::Status::Decoded : XorSketch::Status::Empty;
        fx_.edge = search_.cand;
        fx_.verified = search_.cand && !w.owner.empty() && w.owner[0] != kNoPort;
        return;
      }
      if (step.action == DescentStep::Action::Narrow) {
        search_.cand = step.edge;
        search_.hi = step.edge->w;
      } else if (++search_.failures > findBudget_) {
        fx_.done = true;
        fx_.status = XorSketch::Status::Failed;
        return;
      }
      ++search_.round;
      startSketchWave(ctx, kForestTree, ++waveSession_, mix(fxSeed_, search_.round), cfg_->params.searchCopies,
                      kFilterForestAll, false, search_.lo, search_.hi, search_.cand);
      return;
    }
    default:
      return;
  }
}

void NodeAgent::fixtureOnVerify(Context&, const Wave& w) {
  fx_.verified = (w.acc[1] & 1) != 0;
  fx_.done = true;
}

}  // namespace amst
