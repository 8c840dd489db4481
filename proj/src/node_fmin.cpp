#include <algorithm>
#include <cmath>
#include <map>

#include "amst/node.hpp"
#include "amst/primitives.hpp"

namespace amst {

namespace {
constexpr std::uint64_t kUp = 1;    // arg[3]: message travels toward a root
constexpr std::uint32_t kPhaseCapBase = 24;
}  // namespace

bool NodeAgent::coinHead(std::uint32_t phase, NodeId fragId) const {
  return (mix(cfg_->protocolSeed, 0x636f696eULL, phase, fragId) & 1) != 0;
}

void NodeAgent::routeUp(Context& ctx, Message m) {
  if (fParent_ != kNoPort) {
    send(ctx, fParent_, std::move(m));
    return;
  }
  if (m.tag == Tag::SketchUp)
    rootOnSketchUp(ctx, m);
  else if (m.tag == Tag::CheckUp)
    rootOnCheck(ctx, m);
}

void NodeAgent::routeDown(Context& ctx, NodeId oldLeader, Message m) {
  m.tree = kSyncTree;
  if (oldLeader == k_.self()) {
    dispatch(ctx, kNoPort, m);
    return;
  }
  auto it = pbRoutes_.find(oldLeader);
  if (it == pbRoutes_.end()) {
    failRun(ctx, "no route to old leader " + std::to_string(oldLeader));
    return;
  }
  send(ctx, it->second, std::move(m));
}

// ---------------------------------------------------------------- Part A

void NodeAgent::fminBegin(Context& ctx) {
  if (fminStarted_) return;
  fminStarted_ = true;
  syncBroadcast(ctx, kSearch, 1);
}

void NodeAgent::syncBroadcast(Context& ctx, std::uint8_t kind, std::uint32_t phase) {
  Message m = make(Tag::PhaseStart, Stage::Fmin, kSyncTree);
  m.arg[0] = kind;
  m.arg[1] = phase;
  m.words = 2;
  onPhaseStart(ctx, kNoPort, m);
}

void NodeAgent::onPhaseStart(Context& ctx, Port from, const Message& m) {
  fminStarted_ = true;
  sync_.open = true;
  sync_.kind = static_cast<std::uint8_t>(m.arg[0]);
  sync_.phase = static_cast<std::uint32_t>(m.arg[1]);
  sync_.lastPhase = std::max(sync_.lastPhase, sync_.phase);
  sync_.parent = from;
  sync_.pending = 0;
  sync_.localDone = false;
  sync_.minH = ~0ull;
  sync_.maxH = 0;
  sync_.frags = 0;
  for (Port c : children(kSyncTree)) {
    send(ctx, c, m);
    ++sync_.pending;
  }
  const bool leader = fragParent_ == kNoPort;
  switch (sync_.kind) {
    case kSearch:
      coinFragId_ = fragId_;
      search_ = SearchState{};
      if (leader && fragHeight_ < thr_.sqrtN && !coinHead(sync_.phase, fragId_)) {
        if (searchCached_) {
          search_.found = cachedFound_;
          syncLocalDone(ctx);
          return;
        }
        search_.running = true;
        search_.lo = 0;
        search_.hi = kWeightMax;
        searchRound(ctx);
        return;
      }
      syncLocalDone(ctx);
      return;
    case kMerge:
      trunc_.processedFinal = false;
      mergedAway_ = false;
      if (leader && search_.found) {
        merge_ = MergeState{};
        merge_.pendingBusiness = true;
        Message r = make(Tag::SearchResult, Stage::Fmin, kFragTree);
        r.arg[1] = sync_.phase;
        onMergeAck(ctx, kNoPort, r);
        return;
      }
      syncLocalDone(ctx);
      return;
    case kTruncate:
      if (leader) {
        Message d = make(Tag::Depth, Stage::Fmin, kFragTree);
        d.arg[0] = 0;
        d.words = 1;
        onDepth(ctx, kNoPort, d);
      }
      if (trunc_.processedFinal) syncLocalDone(ctx);
      return;
    case kPartB:
      partBStart(ctx);
      syncLocalDone(ctx);
      return;
    default:
      syncLocalDone(ctx);
  }
}

void NodeAgent::syncLocalDone(Context& ctx) {
  if (!sync_.open || sync_.localDone) return;
  sync_.localDone = true;
  if (sync_.kind == kTruncate && fragParent_ == kNoPort) {
    sync_.minH = std::min(sync_.minH, fragHeight_);
    sync_.maxH = std::max(sync_.maxH, fragHeight_);
    ++sync_.frags;
  } else if (sync_.kind == kPartB && oldLeader_) {
    ++sync_.frags;
  } else if (sync_.kind == kMerge && mergedAway_) {
    ++sync_.frags;
  }
  syncTryReport(ctx);
}

void NodeAgent::syncTryReport(Context& ctx) {
  if (!sync_.open || !sync_.localDone || sync_.pending > 0) return;
  sync_.open = false;
  if (sync_.parent == kNoPort) {
    rootStepComplete(ctx);
    return;
  }
  Message r = make(Tag::StepDone, Stage::Fmin, kSyncTree);
  r.arg[0] = sync_.minH;
  r.arg[1] = sync_.maxH;
  r.arg[2] = sync_.frags;
  r.arg[3] = sync_.phase;
  r.words = 4;
  send(ctx, sync_.parent, std::move(r));
}

void NodeAgent::onStepDone(Context& ctx, Port, const Message& m) {
  if (!sync_.open || m.arg[3] != sync_.phase) {
    ++syncViolations_;
    return;
  }
  sync_.minH = std::min(sync_.minH, m.arg[0]);
  sync_.maxH = std::max(sync_.maxH, m.arg[1]);
  sync_.frags += m.arg[2];
  --sync_.pending;
  syncTryReport(ctx);
}

void NodeAgent::rootStepComplete(Context& ctx) {
  const std::uint32_t phase = sync_.phase;
  switch (sync_.kind) {
    case kSearch:
      syncBroadcast(ctx, kMerge, phase);
      return;
    case kMerge:
      // without a merge anywhere, truncation would leave every fragment as it is
      if (sync_.frags == 0 && !partALog_.empty()) {
        PartALog same = partALog_.back();
        same.phase = phase;
        partAAdvance(ctx, same);
      } else {
        syncBroadcast(ctx, kTruncate, phase);
      }
      return;
    case kTruncate:
      partAAdvance(ctx, {phase, sync_.minH, sync_.maxH, sync_.frags});
      return;
    case kPartB:
      expectedOld_ = sync_.frags;
      rb_.ready = true;
      rb_.groups = expectedOld_;
      {
        auto buffered = std::move(rb_.buffered);
        rb_.buffered.clear();
        for (const auto& b : buffered) rootOnSketchUp(ctx, b);
      }
      return;
    default:
      return;
  }
}

void NodeAgent::partAAdvance(Context& ctx, const PartALog& entry) {
  partALog_.push_back(entry);
  const auto cap = kPhaseCapBase + 8 * static_cast<std::uint32_t>(std::ceil(lnN_ / std::log(2.0)));
  if (entry.fragments <= 1) {
    fminFinish(ctx);
  } else if (entry.minHeight >= thr_.sqrtN || entry.phase >= cap) {
    syncBroadcast(ctx, kPartB, entry.phase);
  } else {
    syncBroadcast(ctx, kSearch, entry.phase + 1);
  }
}

void NodeAgent::searchRound(Context& ctx) {
  if (!sync_.open || sync_.kind != kSearch) ++syncViolations_;
  search_.session = ++waveSession_;
  startSketchWave(ctx, kFragTree, search_.session, sketchSeed(fragId_, sync_.phase, search_.round),
                  cfg_->params.searchCopies, kFilterGprime, false, search_.lo, search_.hi, search_.cand);
}

void NodeAgent::searchOnSketch(Context& ctx, const Wave& w) {
  if (!search_.running || w.session != search_.session) return;
  const auto step = descend(*w.bundle);
  switch (step.action) {
    case DescentStep::Action::Done:
      search_.running = false;
      search_.found = search_.cand.has_value() && searchOwner_ != kNoPort;
      searchCached_ = true;
      cachedFound_ = search_.found;
      syncLocalDone(ctx);
      return;
    case DescentStep::Action::Narrow:
      search_.cand = step.edge;
      search_.hi = step.edge->w;
      break;
    case DescentStep::Action::Retry:
      if (++search_.failures > findBudget_) {
        search_.running = false;
        search_.found = false;
        syncLocalDone(ctx);
        return;
      }
      break;
  }
  ++search_.round;
  searchRound(ctx);
}

// SearchResult travels down the owner path (arg[3] = 0) and its outcome back
// up the old parent chain (arg[3] = 1). MergeAck crosses the chosen edge.
void NodeAgent::onMergeAck(Context& ctx, Port from, const Message& m) {
  if (m.tag == Tag::SearchResult && m.arg[3] == 0) {
    if (searchOwner_ == kSelf) {
      Message q = make(Tag::MergeReq, Stage::Fmin);
      q.arg[0] = coinFragId_;
      q.arg[1] = m.arg[1];
      q.words = 1;
      q.ids = 1;
      send(ctx, searchEdgePort_, std::move(q));
    } else if (searchOwner_ != kNoPort) {
      send(ctx, searchOwner_, m);
    }
    return;
  }
  if (m.tag == Tag::MergeAck) {
    // at the owner u
    const bool accepted = m.arg[0] == 1;
    if (m.arg[2] == 1) nonGprime_[from] = 1;
    if (accepted) {
      fminPort_[from] = 1;
      merge_.accepted = true;
      merge_.newId = m.arg[1];
      merge_.newParent = from;
    }
    Message up = make(Tag::SearchResult, Stage::Fmin, kFragTree);
    up.arg[0] = accepted ? 1 : 0;
    up.arg[1] = m.arg[1];
    up.arg[2] = m.arg[2];
    up.arg[3] = kUp;
    up.words = 2;
    up.ids = 1;
    onMergeAck(ctx, kNoPort, up);
    return;
  }
  // SearchResult on its way up
  if (fragParent_ != kNoPort) {
    send(ctx, fragParent_, m);
    return;
  }
  if (m.arg[0] == 1 || m.arg[2] == 1) searchCached_ = false;
  if (m.arg[0] == 1) {
    mergedAway_ = true;
    Message o = make(Tag::MergeOutcome, Stage::Fmin, kFragTree);
    o.arg[0] = m.arg[1];
    o.arg[3] = 0;
    o.ids = 1;
    onMergeOutcome(ctx, kNoPort, o);
  } else {
    merge_.pendingBusiness = false;
    syncLocalDone(ctx);
  }
}

void NodeAgent::onMergeReq(Context& ctx, Port from, const Message& m) {
  Message r = make(Tag::MergeAck, Stage::Fmin);
  r.words = 2;
  if (!inGprime()) {
    r.arg[2] = 1;
  } else if (coinHead(static_cast<std::uint32_t>(m.arg[1]), coinFragId_) && coinFragId_ != m.arg[0] &&
             fragId_ == coinFragId_) {
    r.arg[0] = 1;
    r.arg[1] = fragId_;
    r.ids = 1;
    fminPort_[from] = 1;
    fragNbrs_.push_back(from);
    fragChanged_ = true;
  }
  send(ctx, from, std::move(r));
}

void NodeAgent::onMergeOutcome(Context& ctx, Port from, const Message& m) {
  outcome_ = OutcomeWave{};
  outcome_.open = true;
  outcome_.parent = from;
  outcome_.newId = m.arg[0];
  for (Port c : children(kFragTree)) {
    send(ctx, c, m);
    ++outcome_.pending;
  }
  outcomeTryComplete(ctx);
}

void NodeAgent::onMergeOutcomeReply(Context& ctx, Port, const Message&) {
  if (!outcome_.open) return;
  --outcome_.pending;
  outcomeTryComplete(ctx);
}

void NodeAgent::outcomeTryComplete(Context& ctx) {
  if (!outcome_.open || outcome_.pending > 0) return;
  outcome_.open = false;
  fragId_ = outcome_.newId;
  if (searchOwner_ == kSelf) {
    fragParent_ = merge_.newParent;
    if (std::find(fragNbrs_.begin(), fragNbrs_.end(), fragParent_) == fragNbrs_.end())
      fragNbrs_.push_back(fragParent_);
  } else if (searchOwner_ != kNoPort) {
    fragParent_ = searchOwner_;
  }
  if (outcome_.parent == kNoPort) {
    merge_.pendingBusiness = false;
    syncLocalDone(ctx);
    return;
  }
  Message r = make(Tag::MergeOutcome, Stage::Fmin, kFragTree);
  r.arg[3] = 1;
  send(ctx, outcome_.parent, std::move(r));
}

void NodeAgent::onDepth(Context& ctx, Port from, const Message& m) {
  trunc_ = TruncState{};
  trunc_.open = true;
  trunc_.parent = from;
  trunc_.depth = m.arg[0];
  trunc_.changed = fragChanged_;
  fragChanged_ = false;
  Message d = m;
  d.arg[0] = m.arg[0] + 1;
  for (Port c : children(kFragTree)) {
    send(ctx, c, d);
    ++trunc_.pending;
  }
  depthTryComplete(ctx);
}

void NodeAgent::depthTryComplete(Context& ctx) {
  if (!trunc_.open || trunc_.pending > 0) return;
  trunc_.open = false;
  const std::uint64_t s = thr_.sqrtN;
  trunc_.cut = trunc_.depth > 0 && trunc_.depth % (s + 1) == 0 && trunc_.remH >= s;
  if (!trunc_.cutChildren.empty()) trunc_.changed = true;
  if (trunc_.parent == kNoPort) {
    if (trunc_.changed) searchCached_ = false;
    Message f = make(Tag::TruncFinal, Stage::Fmin, kFragTree);
    f.arg[0] = fragId_;
    f.ids = 1;
    onTruncFinal(ctx, kNoPort, f);
    return;
  }
  Message r = make(Tag::HeightReport, Stage::Fmin, kFragTree);
  r.arg[0] = trunc_.remH;
  r.arg[1] = trunc_.cut ? 1 : 0;
  r.arg[2] = trunc_.changed ? 1 : 0;
  r.words = 3;
  send(ctx, trunc_.parent, std::move(r));
}

void NodeAgent::onHeightReport(Context& ctx, Port from, const Message& m) {
  if (!trunc_.open) return;
  if (m.arg[1] == 1)
    trunc_.cutChildren.push_back(from);
  else
    trunc_.remH = std::max(trunc_.remH, m.arg[0] + 1);
  if (m.arg[2] == 1) trunc_.changed = true;
  --trunc_.pending;
  depthTryComplete(ctx);
}

void NodeAgent::onTruncFinal(Context& ctx, Port from, const Message& m) {
  const auto kids = children(kFragTree);
  NodeId id = m.arg[0];
  if (trunc_.cut) {
    std::erase(fragNbrs_, from);
    fragParent_ = kNoPort;
    id = k_.self();
    searchCached_ = false;
  }
  for (Port c : trunc_.cutChildren) std::erase(fragNbrs_, c);
  fragId_ = id;
  if (fragParent_ == kNoPort) fragHeight_ = trunc_.remH;
  Message f = m;
  f.arg[0] = id;
  for (Port c : kids) send(ctx, c, f);
  trunc_.processedFinal = true;
  if (sync_.open && sync_.kind == kTruncate) syncLocalDone(ctx);
}

// ---------------------------------------------------------------- Part B

void NodeAgent::partBStart(Context& ctx) {
  if (partB_) return;
  partB_ = true;
  oldLeader_ = fragParent_ == kNoPort;
  oldLeaderId_ = fragId_;
  oldParent_ = fragParent_;
  oldNbrs_ = fragNbrs_;
  curFragId_ = fragId_;
  if (oldLeader_) partBRound(ctx, 1, 0, 0, kWeightMax, std::nullopt);
}

void NodeAgent::partBRound(Context& ctx, std::uint32_t phase, std::uint32_t round, Weight lo, Weight hi,
                           std::optional<SketchEdge> cand) {
  pbPhase_ = phase;
  pbRound_ = round;
  startSketchWave(ctx, kOldTree, ++waveSession_, mix(cfg_->protocolSeed, curFragId_, phase, round),
                  cfg_->params.searchCopies, kFilterGprime, false, lo, hi, cand);
}

void NodeAgent::partBOnSketch(Context& ctx, const Wave& w) {
  Message up = make(Tag::SketchUp, Stage::Fmin, kSyncTree);
  up.arg[0] = oldLeaderId_;
  up.arg[1] = curFragId_;
  up.arg[2] = (std::uint64_t{pbPhase_} << 32) | pbRound_;
  up.arg[3] = (!w.owner.empty() && w.owner[0] != kNoPort) ? 1 : 0;
  up.sketch = w.bundle;
  up.words = 3;
  up.ids = 2;
  routeUp(ctx, std::move(up));
}

void NodeAgent::onSketchUp(Context& ctx, Port from, const Message& m) {
  pbRoutes_[m.arg[0]] = from;
  routeUp(ctx, m);
}

void NodeAgent::rootOnSketchUp(Context& ctx, const Message& m) {
  if (!rb_.ready) {
    rb_.buffered.push_back(m);
    return;
  }
  const NodeId old = m.arg[0];
  const NodeId cur = m.arg[1];
  if (rb_.phase == 0) rb_.phase = 1;
  if (rb_.finishing) {
    if (++rb_.finalAcks == expectedOld_) fminFinish(ctx);
    return;
  }
  rb_.curOf[old] = cur;
  RootFrag& f = rb_.frags[cur];
  if (std::find(f.olds.begin(), f.olds.end(), old) == f.olds.end()) f.olds.push_back(old);
  if (m.arg[3] == 1) f.candOwner = old;
  if (m.sketch) {
    if (!f.bundle) {
      f.bundle = std::make_shared<SketchBundle>(*m.sketch);
    } else {
      for (std::size_t i = 0; i < f.bundle->size() && i < m.sketch->size(); ++i)
        (*f.bundle)[i].combine((*m.sketch)[i]);
    }
  }
  ++f.received;
  const std::uint32_t size = rb_.phase == 1 ? 1 : rb_.groupSize[cur];
  if (f.received == size) rootProcessFragment(ctx, cur);
}

void NodeAgent::rootProcessFragment(Context& ctx, NodeId cur) {
  RootFrag& f = rb_.frags[cur];
  const auto step = descend(*f.bundle);
  bool finished = false;
  switch (step.action) {
    case DescentStep::Action::Done:
      if (f.cand && f.candOwner == 0) f.cand.reset();
      finished = true;
      break;
    case DescentStep::Action::Narrow:
      f.cand = step.edge;
      f.hi = step.edge->w;
      break;
    case DescentStep::Action::Retry:
      if (++f.failures > retryBudget_) {
        f.cand.reset();
        finished = true;
      }
      break;
  }
  if (finished) {
    f.done = true;
    if (++rb_.fragsDone == rb_.groups) rootFinishPhase(ctx);
    return;
  }
  ++f.round;
  f.received = 0;
  f.bundle.reset();
  f.candOwner = 0;
  for (NodeId old : f.olds) {
    Message b = make(Tag::BoundsDown, Stage::Fmin, kSyncTree);
    b.arg[0] = old;
    b.arg[1] = rb_.phase;
    b.arg[2] = f.round;
    b.w = f.lo;
    b.w2 = f.hi;
    if (f.cand) b.edges = std::make_shared<const std::vector<SketchEdge>>(1, *f.cand);
    b.words = 2;
    b.ids = 1;
    b.weights = 2;
    routeDown(ctx, old, std::move(b));
  }
}

void NodeAgent::onBoundsDown(Context& ctx, Port, const Message& m) {
  if (m.arg[0] != k_.self() || !oldLeader_) {
    routeDown(ctx, static_cast<NodeId>(m.arg[0]), m);
    return;
  }
  std::optional<SketchEdge> cand;
  if (m.edges && !m.edges->empty()) cand = m.edges->front();
  partBRound(ctx, static_cast<std::uint32_t>(m.arg[1]), static_cast<std::uint32_t>(m.arg[2]), m.w, m.w2, cand);
}

void NodeAgent::rootFinishPhase(Context& ctx) {
  rb_.checksPending = 0;
  for (auto& [cur, f] : rb_.frags) {
    if (!f.cand) continue;
    ++rb_.checksPending;
    Message c = make(Tag::EdgeCheck, Stage::Fmin, kSyncTree);
    c.arg[0] = f.candOwner;
    c.arg[1] = cur;
    c.arg[3] = 0;
    c.words = 1;
    c.ids = 2;
    routeDown(ctx, f.candOwner, std::move(c));
  }
  if (rb_.checksPending == 0) {
    Message none = make(Tag::CheckUp, Stage::Fmin);
    none.arg[3] = 1;  // nothing to check
    rootOnCheck(ctx, none);
  }
}

// EdgeCheck modes in arg[3]: 0 routing toward the owner, 1 query across the
// edge, 2 reply across the edge.
void NodeAgent::onEdgeCheck(Context& ctx, Port from, const Message& m) {
  switch (m.arg[3]) {
    case 0: {
      if (m.tree == kSyncTree && (m.arg[0] != k_.self() || !oldLeader_)) {
        routeDown(ctx, static_cast<NodeId>(m.arg[0]), m);
        return;
      }
      if (pbOwner_ == kSelf) {
        Message q = make(Tag::EdgeCheck, Stage::Fmin);
        q.arg[1] = m.arg[1];
        q.arg[3] = 1;
        q.words = 1;
        q.ids = 1;
        send(ctx, pbEdgePort_, std::move(q));
      } else if (pbOwner_ != kNoPort) {
        Message d = m;
        d.tree = kOldTree;
        send(ctx, pbOwner_, std::move(d));
      } else {
        failRun(ctx, "edge check lost its owner");
      }
      return;
    }
    case 1: {
      Message r = make(Tag::EdgeCheck, Stage::Fmin);
      r.arg[0] = curFragId_;
      r.arg[1] = m.arg[1];
      r.arg[2] = (inGprime() && partB_) ? 1 : 0;
      r.arg[3] = 2;
      r.words = 2;
      r.ids = 2;
      send(ctx, from, std::move(r));
      return;
    }
    default: {
      if (m.arg[2] == 0) nonGprime_[from] = 1;
      Message up = make(Tag::CheckUp, Stage::Fmin, kSyncTree);
      up.arg[0] = m.arg[1];
      up.arg[1] = m.arg[0];
      up.arg[2] = m.arg[2];
      up.words = 1;
      up.ids = 2;
      routeUp(ctx, std::move(up));
    }
  }
}

void NodeAgent::onCheckUp(Context& ctx, Port, const Message& m) { routeUp(ctx, m); }

void NodeAgent::rootOnCheck(Context& ctx, const Message& m) {
  if (m.arg[3] != 1) {
    RootFrag& f = rb_.frags[m.arg[0]];
    f.checked = true;
    f.remote = m.arg[2] == 1 ? m.arg[1] : 0;
    if (f.remote == 0 || f.remote == m.arg[0]) f.cand.reset();
    if (--rb_.checksPending > 0) return;
  }
  // union the current fragments along the verified edges
  std::map<NodeId, NodeId> parent;
  for (const auto& [cur, f] : rb_.frags) parent[cur] = cur;
  auto find = [&](NodeId x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [cur, f] : rb_.frags) {
    if (!f.cand) continue;
    if (!parent.count(f.remote)) {
      failRun(ctx, "edge check named an unknown fragment");
      return;
    }
    const NodeId a = find(cur), b = find(f.remote);
    if (a != b) parent[std::min(a, b)] = std::max(a, b);
  }
  std::unordered_map<NodeId, std::uint32_t> sizes;
  std::unordered_map<NodeId, NodeId> newOf;
  for (const auto& [cur, f] : rb_.frags) {
    const NodeId root = find(cur);
    newOf[cur] = root;
    sizes[root] += static_cast<std::uint32_t>(f.olds.size());
  }
  const bool last = sizes.size() == 1;
  for (const auto& [cur, f] : rb_.frags) {
    for (NodeId old : f.olds) {
      Message u = make(Tag::IdUpdate, Stage::Fmin, kSyncTree);
      u.arg[0] = old;
      u.arg[1] = newOf[cur];
      u.arg[2] = (f.cand && f.candOwner == old ? 1 : 0) | (last ? 2 : 0);
      u.arg[3] = rb_.phase;
      u.words = 2;
      u.ids = 2;
      routeDown(ctx, old, std::move(u));
    }
  }
  const auto prevFrags = std::move(rb_.frags);
  rb_.frags.clear();
  rb_.groupSize = std::move(sizes);
  rb_.groups = rb_.groupSize.size();
  rb_.fragsDone = 0;
  ++rb_.phase;
  if (rb_.phase > kPhaseCapBase + 8 * static_cast<std::uint32_t>(std::ceil(lnN_ / std::log(2.0)))) {
    failRun(ctx, "group merging did not converge");
    return;
  }
  if (last) {
    rb_.finishing = true;
    rb_.finalAcks = 0;
  }
}

void NodeAgent::onIdUpdate(Context& ctx, Port from, const Message& m) {
  if (m.tree == kSyncTree) {
    if (m.arg[0] != k_.self() || !oldLeader_) {
      routeDown(ctx, static_cast<NodeId>(m.arg[0]), m);
      return;
    }
  } else if (m.arg[2] & 4) {
    // reply on the old tree
    if (!idw_.open) return;
    --idw_.pending;
    idUpdateTryComplete(ctx);
    return;
  } else if (from != oldParent_) {
    ++idUpdateViolations_;
  }
  idw_ = IdWave{};
  idw_.open = true;
  idw_.parent = m.tree == kSyncTree ? kNoPort : from;
  idw_.phase = static_cast<std::uint32_t>(m.arg[3]);
  curFragId_ = m.arg[1];
  lastFinal_ = (m.arg[2] & 2) != 0;
  Message f = m;
  f.tree = kOldTree;
  for (Port c : children(kOldTree)) {
    send(ctx, c, f);
    ++idw_.pending;
  }
  if ((m.arg[2] & 1) && pbOwner_ == kSelf) {
    fminPort_[pbEdgePort_] = 1;
    Message mk = make(Tag::FminMark, Stage::Fmin);
    send(ctx, pbEdgePort_, std::move(mk));
    ++idw_.marks;
  }
  idUpdateTryComplete(ctx);
}

void NodeAgent::idUpdateTryComplete(Context& ctx) {
  if (!idw_.open || idw_.pending > 0 || idw_.marks > 0) return;
  idw_.open = false;
  if (idw_.parent != kNoPort) {
    Message r = make(Tag::IdUpdate, Stage::Fmin, kOldTree);
    r.arg[2] = 4;
    send(ctx, idw_.parent, std::move(r));
    return;
  }
  if (lastFinal_) {
    Message up = make(Tag::SketchUp, Stage::Fmin, kSyncTree);
    up.arg[0] = oldLeaderId_;
    up.arg[1] = curFragId_;
    up.ids = 2;
    routeUp(ctx, std::move(up));
    return;
  }
  partBRound(ctx, idw_.phase + 1, 0, 0, kWeightMax, std::nullopt);
}

void NodeAgent::onFminMark(Context& ctx, Port from, const Message& m) {
  if (m.arg[3] == 0) {
    fminPort_[from] = 1;
    Message r = make(Tag::FminMark, Stage::Fmin);
    r.arg[3] = 1;
    send(ctx, from, std::move(r));
    return;
  }
  if (idw_.marks > 0) --idw_.marks;
  idUpdateTryComplete(ctx);
}

void NodeAgent::fminFinish(Context& ctx) {
  Message d = make(Tag::FminDone, Stage::Fmin, kSyncTree);
  onFminDone(ctx, kNoPort, d);
}

void NodeAgent::onFminDone(Context& ctx, Port, const Message& m) {
  if (fminDone_) return;
  for (Port c : children(kSyncTree)) send(ctx, c, m);
  fminDone_ = true;
  ctx.markStageDone(Stage::Fmin);
  if (selectsFinal(cfg_->stages)) openFinalGate(ctx);
}

}  // namespace amst
