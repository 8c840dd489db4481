#include <algorithm>

#include "amst/node.hpp"

namespace amst {

bool NodeAgent::isSminPort(Port p) const { return !high_ || neighborLow_[p] || fminPort_[p]; }

void NodeAgent::ghsAddPort(Port p) {
  if (sn_ != GhsNode::Sleeping && se_[p] == GhsEdge::None) se_[p] = GhsEdge::Basic;
}

void NodeAgent::ghsWake(Context& ctx) {
  if (sn_ != GhsNode::Sleeping) return;
  const Port d = static_cast<Port>(k_.degree());
  Port best = kNoPort;
  for (Port p = 0; p < d; ++p) {
    if (!isSminPort(p)) continue;
    se_[p] = GhsEdge::Basic;
    if (best == kNoPort || k_.weight(p) < k_.weight(best)) best = p;
  }
  ln_ = 0;
  sn_ = GhsNode::Found;
  findCount_ = 0;
  if (best == kNoPort) {
    finalDone_ = true;
    ctx.markStageDone(Stage::Final);
    return;
  }
  se_[best] = GhsEdge::Branch;
  Message c = make(Tag::Connect, Stage::Final);
  c.arg[0] = 0;
  c.words = 1;
  send(ctx, best, std::move(c));
}

void NodeAgent::ghsTest(Context& ctx) {
  Port best = kNoPort;
  for (Port p = 0; p < se_.size(); ++p)
    if (se_[p] == GhsEdge::Basic && (best == kNoPort || k_.weight(p) < k_.weight(best))) best = p;
  testEdge_ = best;
  if (best == kNoPort) {
    ghsReport(ctx);
    return;
  }
  Message t = make(Tag::Test, Stage::Final);
  t.arg[0] = ln_;
  t.w = fn_;
  t.words = 1;
  t.weights = 1;
  send(ctx, best, std::move(t));
}

void NodeAgent::ghsReport(Context& ctx) {
  if (findCount_ != 0 || testEdge_ != kNoPort) return;
  sn_ = GhsNode::Found;
  Message r = make(Tag::Report, Stage::Final);
  r.w = bestWt_;
  r.weights = 1;
  send(ctx, inBranch_, std::move(r));
}

void NodeAgent::ghsChangeRoot(Context& ctx) {
  if (se_[bestEdge_] == GhsEdge::Branch) {
    send(ctx, bestEdge_, make(Tag::ChangeRoot, Stage::Final));
    return;
  }
  Message c = make(Tag::Connect, Stage::Final);
  c.arg[0] = ln_;
  c.words = 1;
  send(ctx, bestEdge_, std::move(c));
  se_[bestEdge_] = GhsEdge::Branch;
}

bool NodeAgent::ghsHandle(Context& ctx, Port from, const Message& m) {
  if (se_[from] == GhsEdge::None) se_[from] = GhsEdge::Basic;
  switch (m.tag) {
    case Tag::Connect: {
      const auto level = static_cast<std::uint32_t>(m.arg[0]);
      if (level < ln_) {
        se_[from] = GhsEdge::Branch;
        Message i = make(Tag::Initiate, Stage::Final);
        i.arg[0] = ln_;
        i.arg[1] = static_cast<std::uint64_t>(sn_);
        i.w = fn_;
        i.words = 2;
        i.weights = 1;
        send(ctx, from, std::move(i));
        if (sn_ == GhsNode::Find) ++findCount_;
        return true;
      }
      if (se_[from] == GhsEdge::Basic) return false;
      Message i = make(Tag::Initiate, Stage::Final);
      i.arg[0] = ln_ + 1;
      i.arg[1] = static_cast<std::uint64_t>(GhsNode::Find);
      i.w = k_.weight(from);
      i.words = 2;
      i.weights = 1;
      send(ctx, from, std::move(i));
      return true;
    }
    case Tag::Initiate: {
      ln_ = static_cast<std::uint32_t>(m.arg[0]);
      fn_ = m.w;
      sn_ = static_cast<GhsNode>(m.arg[1]);
      inBranch_ = from;
      bestEdge_ = kNoPort;
      bestWt_ = kWeightMax;
      for (Port p = 0; p < se_.size(); ++p) {
        if (p == from || se_[p] != GhsEdge::Branch) continue;
        send(ctx, p, m);
        if (sn_ == GhsNode::Find) ++findCount_;
      }
      if (sn_ == GhsNode::Find) ghsTest(ctx);
      return true;
    }
    case Tag::Test: {
      if (m.arg[0] > ln_) return false;
      if (m.w != fn_) {
        send(ctx, from, make(Tag::GhsAccept, Stage::Final));
        return true;
      }
      if (se_[from] == GhsEdge::Basic) se_[from] = GhsEdge::Rejected;
      if (testEdge_ != from)
        send(ctx, from, make(Tag::GhsReject, Stage::Final));
      else
        ghsTest(ctx);
      return true;
    }
    case Tag::GhsAccept:
      testEdge_ = kNoPort;
      if (k_.weight(from) < bestWt_) {
        bestEdge_ = from;
        bestWt_ = k_.weight(from);
      }
      ghsReport(ctx);
      return true;
    case Tag::GhsReject:
      if (se_[from] == GhsEdge::Basic) se_[from] = GhsEdge::Rejected;
      ghsTest(ctx);
      return true;
    case Tag::Report: {
      if (from != inBranch_) {
        if (findCount_ > 0) --findCount_;
        if (m.w < bestWt_) {
          bestWt_ = m.w;
          bestEdge_ = from;
        }
        ghsReport(ctx);
        return true;
      }
      if (sn_ == GhsNode::Find) return false;
      if (m.w > bestWt_) {
        ghsChangeRoot(ctx);
      } else if (m.w == kWeightMax && bestWt_ == kWeightMax && !finalDone_) {
        finalDone_ = true;
        ctx.markStageDone(Stage::Final);
        Message done = make(Tag::GhsDone, Stage::Final);
        for (Port p = 0; p < se_.size(); ++p)
          if (p != inBranch_ && se_[p] == GhsEdge::Branch) send(ctx, p, done);
      }
      return true;
    }
    case Tag::ChangeRoot:
      ghsChangeRoot(ctx);
      return true;
    case Tag::GhsDone:
      if (finalDone_) return true;
      finalDone_ = true;
      ctx.markStageDone(Stage::Final);
      for (Port p = 0; p < se_.size(); ++p)
        if (p != from && se_[p] == GhsEdge::Branch) send(ctx, p, m);
      return true;
    default:
      return true;
  }
}

void NodeAgent::ghsDrain(Context& ctx) {
  bool progress = true;
  while (progress && !ghsDeferred_.empty()) {
    progress = false;
    const std::size_t rounds = ghsDeferred_.size();
    for (std::size_t i = 0; i < rounds; ++i) {
      auto [p, m] = std::move(ghsDeferred_.front());
      ghsDeferred_.pop_front();
      if (ghsHandle(ctx, p, m))
        progress = true;
      else
        ghsDeferred_.emplace_back(p, std::move(m));
    }
  }
}

}  // namespace amst
