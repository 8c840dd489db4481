#include <algorithm>

#include "amst/node.hpp"
#include "amst/primitives.hpp"

namespace amst {

std::uint64_t approxEstimate(const SketchBundle& bundle, std::uint64_t filteredEdges) {
  if (bundle.empty() || filteredEdges == 0) return 0;
  const int copies = static_cast<int>(bundle.size());
  std::vector<int> deepest;
  deepest.reserve(bundle.size());
  for (const auto& s : bundle) deepest.push_back(s.deepestLevel());
  int best = -1;
  for (int l = 0; l < bundle.front().levels(); ++l) {
    const auto hits = std::count_if(deepest.begin(), deepest.end(), [l](int d) { return d >= l; });
    if (2 * hits > copies) best = l;
  }
  if (best < 0) return 0;
  const std::uint64_t est = best >= 3 ? (std::uint64_t{1} << (best - 3)) : 1;
  return std::clamp<std::uint64_t>(est, 1, filteredEdges);
}

DescentStep descend(const SketchBundle& bundle) {
  DescentStep step;
  if (bundle.empty() || bundle.front().empty()) {
    step.action = DescentStep::Action::Done;
    return step;
  }
  for (const auto& s : bundle) {
    auto r = s.decode();
    if (r.status != XorSketch::Status::Decoded) continue;
    if (!step.edge || r.edge.w < step.edge->w) step.edge = r.edge;
  }
  step.action = step.edge ? DescentStep::Action::Narrow : DescentStep::Action::Retry;
  return step;
}

std::uint64_t NodeAgent::sketchSeed(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  return mix(cfg_->protocolSeed, 0x736b65746368ULL, a, b, c);
}

bool NodeAgent::edgeAllowed(Port p, std::uint8_t filter) const {
  switch (filter) {
    case kFilterForest: return !lowHeard_[p] && !excluded_[p];
    case kFilterForestAll: return !lowHeard_[p];
    case kFilterGprime: return !lowHeard_[p] && !nonGprime_[p];
    default: return true;
  }
}

std::optional<Port> NodeAgent::ownEdgePort(const SketchEdge& e) const {
  NodeId other = 0;
  if (e.x == k_.self())
    other = e.y;
  else if (e.y == k_.self())
    other = e.x;
  else
    return std::nullopt;
  auto p = k_.portOf(other);
  if (!p || k_.weight(*p) != e.w) return std::nullopt;
  return p;
}

void NodeAgent::localSketch(SketchBundle& out, std::uint64_t seed, std::uint32_t copies, std::uint8_t filter,
                            Weight lo, Weight hi, std::uint64_t* count) const {
  out.clear();
  out.reserve(copies);
  for (std::uint32_t i = 0; i < copies; ++i) out.emplace_back(mix(seed, i), levels_);
  const Port d = static_cast<Port>(k_.degree());
  for (Port p = 0; p < d; ++p) {
    if (!edgeAllowed(p, filter)) continue;
    const Weight w = k_.weight(p);
    if (w < lo || w >= hi) continue;
    const SketchEdge e = XorSketch::canonical(w, k_.self(), k_.neighborId(p));
    for (auto& s : out) s.add(e);
    if (count) ++*count;
  }
}

void NodeAgent::startSketchWave(Context& ctx, std::uint8_t tree, std::uint32_t session, std::uint64_t seed,
                                std::uint32_t copies, std::uint8_t filter, bool newPhase, Weight lo, Weight hi,
                                std::optional<SketchEdge> cand) {
  Message m = make(Tag::SketchRequest, tree == kForestTree ? Stage::Forest : Stage::Fmin, tree, session);
  m.arg[0] = seed;
  m.arg[1] = copies | (std::uint64_t{filter} << 16) | (std::uint64_t{newPhase} << 24);
  m.w = lo;
  m.w2 = hi;
  m.words = 2;
  m.weights = 2;
  if (cand) m.edges = std::make_shared<const std::vector<SketchEdge>>(1, *cand);
  onSketchRequest(ctx, kNoPort, m);
}

void NodeAgent::onSketchRequest(Context& ctx, Port from, const Message& m) {
  const std::uint8_t tree = m.tree;
  Wave& w = waves_[tree];
  w = Wave{};
  w.open = true;
  w.session = m.session;
  w.kind = Tag::SketchRequest;
  w.parent = from;
  const auto copies = static_cast<std::uint32_t>(m.arg[1] & 0xffff);
  const auto filter = static_cast<std::uint8_t>((m.arg[1] >> 16) & 0xff);
  const bool newPhase = ((m.arg[1] >> 24) & 1) != 0;
  if (newPhase) {
    std::fill(excluded_.begin(), excluded_.end(), 0);
    epochBase_ = lowCount_;
    if (!th_.leader) th_.active = false;
  }
  w.bundle = std::make_shared<SketchBundle>();
  localSketch(*w.bundle, m.arg[0], copies, filter, m.w, m.w2, &w.acc[1]);
  if (m.edges && !m.edges->empty()) {
    w.cands = m.edges;
    w.owner.assign(m.edges->size(), kNoPort);
    w.edgePort.assign(m.edges->size(), kNoPort);
    for (std::size_t i = 0; i < m.edges->size(); ++i) {
      if (auto p = ownEdgePort((*m.edges)[i])) {
        w.owner[i] = kSelf;
        w.edgePort[i] = *p;
      }
    }
  }
  for (Port c : children(tree)) {
    send(ctx, c, m);
    ++w.pending;
  }
  tryComplete(ctx, tree);
}

void NodeAgent::onSketchReply(Context& ctx, Port from, const Message& m) {
  Wave& w = waves_[m.tree];
  if (!w.open || w.session != m.session || w.kind != Tag::SketchRequest) return;
  if (m.sketch) {
    for (std::size_t i = 0; i < w.bundle->size() && i < m.sketch->size(); ++i) (*w.bundle)[i].combine((*m.sketch)[i]);
  }
  w.acc[1] += m.arg[1];
  for (std::size_t i = 0; i < w.owner.size(); ++i)
    if (((m.arg[0] >> i) & 1) && w.owner[i] == kNoPort) w.owner[i] = from;
  --w.pending;
  tryComplete(ctx, m.tree);
}

void NodeAgent::startVerifyWave(Context& ctx, std::uint8_t tree, std::uint32_t session,
                                std::shared_ptr<const std::vector<SketchEdge>> cands) {
  Message m = make(Tag::VerifyRequest, Stage::Forest, tree, session);
  m.edges = std::move(cands);
  onVerifyRequest(ctx, kNoPort, m);
}

void NodeAgent::onVerifyRequest(Context& ctx, Port from, const Message& m) {
  const std::uint8_t tree = m.tree;
  Wave& w = waves_[tree];
  w = Wave{};
  w.open = true;
  w.session = m.session;
  w.kind = Tag::VerifyRequest;
  w.parent = from;
  w.cands = m.edges;
  const std::size_t nc = m.edges ? m.edges->size() : 0;
  w.owner.assign(nc, kNoPort);
  w.edgePort.assign(nc, kNoPort);
  for (Port c : children(tree)) {
    send(ctx, c, m);
    ++w.pending;
  }
  for (std::size_t i = 0; i < nc; ++i) {
    if (auto p = ownEdgePort((*m.edges)[i])) {
      w.edgePort[i] = *p;
      Message q = make(Tag::Verify, Stage::Forest, tree, m.session);
      q.arg[0] = i;
      q.words = 1;
      send(ctx, *p, std::move(q));
      ++w.queries;
    }
  }
  tryComplete(ctx, tree);
}

void NodeAgent::onVerify(Context& ctx, Port from, const Message& m) {
  if (inGprime() && !initDone_) {
    deferredVerifies_.emplace_back(from, m);
    return;
  }
  answerVerify(ctx, from, m);
}

void NodeAgent::answerVerify(Context& ctx, Port from, const Message& m) {
  Message r = make(Tag::VerifyReply, Stage::Forest, m.tree, m.session);
  r.arg[0] = m.arg[0];
  r.arg[1] = inGprime() ? xId_ : 0;
  r.arg[2] = inGprime() ? 1 : 0;
  r.words = 2;
  r.ids = 1;
  send(ctx, from, std::move(r));
}

void NodeAgent::onVerifyReply(Context& ctx, Port from, const Message& m) {
  Wave& w = waves_[m.tree];
  if (!w.open || w.session != m.session || w.kind != Tag::VerifyRequest) return;
  const auto i = static_cast<std::size_t>(m.arg[0]);
  const bool remoteG = m.arg[2] != 0;
  const bool outgoing = !remoteG || m.arg[1] != xId_;
  if (!remoteG) nonGprime_[from] = 1;
  if (i < 64) {
    w.acc[0] |= std::uint64_t{1} << i;
    if (outgoing) w.acc[1] |= std::uint64_t{1} << i;
    if (outgoing && remoteG) w.acc[2] |= std::uint64_t{1} << i;
  }
  if (i < w.owner.size() && w.owner[i] == kNoPort) w.owner[i] = kSelf;
  if (outgoing && m.tree == kForestTree) excluded_[from] = 1;
  --w.queries;
  tryComplete(ctx, m.tree);
}

void NodeAgent::onVerifyResult(Context& ctx, Port from, const Message& m) {
  Wave& w = waves_[m.tree];
  if (!w.open || w.session != m.session || w.kind != Tag::VerifyRequest) return;
  w.acc[0] |= m.arg[0];
  w.acc[1] |= m.arg[1];
  w.acc[2] |= m.arg[2];
  for (std::size_t i = 0; i < w.owner.size(); ++i)
    if (((m.arg[0] >> i) & 1) && w.owner[i] == kNoPort) w.owner[i] = from;
  --w.pending;
  tryComplete(ctx, m.tree);
}

void NodeAgent::tryComplete(Context& ctx, std::uint8_t tree) {
  Wave& w = waves_[tree];
  if (!w.open || w.pending > 0 || w.queries > 0) return;
  w.open = false;
  if (w.kind == Tag::SketchRequest && !w.owner.empty()) {
    if (tree == kFragTree) {
      searchOwner_ = w.owner[0];
      searchEdgePort_ = w.edgePort[0];
    } else if (tree == kOldTree) {
      pbOwner_ = w.owner[0];
      pbEdgePort_ = w.edgePort[0];
    }
  } else if (w.kind == Tag::SketchRequest) {
    if (tree == kFragTree) searchOwner_ = searchEdgePort_ = kNoPort;
    if (tree == kOldTree) pbOwner_ = pbEdgePort_ = kNoPort;
  }
  if (w.parent == kNoPort) {
    completeAtRoot(ctx, tree, w);
    return;
  }
  Message r;
  if (w.kind == Tag::SketchRequest) {
    r = make(Tag::SketchReply, tree == kForestTree ? Stage::Forest : Stage::Fmin, tree, w.session);
    r.sketch = w.bundle;
    std::uint64_t mask = 0;
    for (std::size_t i = 0; i < w.owner.size() && i < 64; ++i)
      if (w.owner[i] != kNoPort) mask |= std::uint64_t{1} << i;
    r.arg[0] = mask;
    r.arg[1] = w.acc[1];
    r.words = 2;
  } else {
    r = make(Tag::VerifyResult, Stage::Forest, tree, w.session);
    r.arg[0] = w.acc[0];
    r.arg[1] = w.acc[1];
    r.arg[2] = w.acc[2];
    r.words = 3;
  }
  send(ctx, w.parent, std::move(r));
}

void NodeAgent::completeAtRoot(Context& ctx, std::uint8_t tree, Wave& w) {
  if (tree == kForestTree) {
    if (fixture_) {
      if (w.kind == Tag::SketchRequest)
        fixtureOnSketch(ctx, w);
      else
        fixtureOnVerify(ctx, w);
      return;
    }
    if (w.kind == Tag::VerifyRequest) {
      mtOnVerify(ctx, w);
    } else if (mt_.mode == MaximalTreeState::Mode::Approx) {
      mtOnApprox(ctx, *w.bundle, w.acc[1]);
    } else {
      mtOnSketch(ctx, *w.bundle);
    }
  } else if (tree == kFragTree) {
    searchOnSketch(ctx, w);
  } else if (tree == kOldTree) {
    partBOnSketch(ctx, w);
  }
}

void NodeAgent::startThreshold(Context& ctx, std::uint32_t session, std::uint64_t target) {
  th_.active = true;
  th_.leader = true;
  th_.session = session;
  th_.parent = kNoPort;
  mt_.thresholdTarget = target;
  mt_.thresholdCount = 0;
  Message m = make(Tag::ThresholdStart, Stage::Forest, kForestTree, session);
  m.words = 1;
  for (Port c : children(kForestTree)) send(ctx, c, m);
  thresholdEvent(ctx, lowCount_ - epochBase_);
}

void NodeAgent::onThresholdStart(Context& ctx, Port from, const Message& m) {
  th_.active = true;
  th_.leader = false;
  th_.session = m.session;
  th_.parent = from;
  for (Port c : children(kForestTree)) send(ctx, c, m);
  const std::uint64_t seen = lowCount_ - epochBase_;
  if (seen > 0) thresholdEvent(ctx, seen);
}

void NodeAgent::thresholdEvent(Context& ctx, std::uint64_t delta) {
  if (!th_.active) return;
  if (!th_.leader) {
    if (delta == 0) return;
    Message c = make(Tag::CutCount, Stage::Forest, kForestTree, th_.session);
    c.arg[0] = delta;
    c.words = 1;
    send(ctx, th_.parent, std::move(c));
    return;
  }
  mt_.thresholdCount += delta;
  if (mt_.thresholdCount < mt_.thresholdTarget) return;
  th_.active = false;
  th_.leader = false;
  if (fixture_) {
    fx_.done = true;
    fx_.triggerTime = ctx.now();
    fx_.eventsAtTrigger = mt_.thresholdCount;
    return;
  }
  mtTrigger(ctx);
}

void NodeAgent::onCutCount(Context& ctx, Port, const Message& m) {
  if (!th_.active || m.session != th_.session) return;
  thresholdEvent(ctx, m.arg[0]);
}

}  // namespace amst
