#include <algorithm>

#include "amst/node.hpp"

namespace amst {

bool NodeAgent::isSparsePort(Port p) const {
  if (!high_ || neighborLow_[p]) return true;
  return std::find(fNbrs_.begin(), fNbrs_.end(), p) != fNbrs_.end();
}

void NodeAgent::bfsStart(Context& ctx) {
  bfsJoined_ = true;
  bfsParent_ = kNoPort;
  bfsDepth_ = 0;
  Message e = make(Tag::Extend, Stage::Bfs, kBfsTree);
  e.arg[0] = 1;
  e.words = 1;
  bfsHandle(ctx, kNoPort, e);
}

void NodeAgent::bfsProbeLayer(Context& ctx, std::uint32_t layer) {
  const Port d = static_cast<Port>(k_.degree());
  for (Port p = 0; p < d; ++p) {
    if (p == bfsParent_ || !isSparsePort(p)) continue;
    Message q = make(Tag::Probe, Stage::Bfs, kBfsTree);
    q.arg[0] = layer;
    q.words = 1;
    send(ctx, p, std::move(q));
    ++bw_.pending;
  }
}

void NodeAgent::bfsHandle(Context& ctx, Port from, const Message& m) {
  switch (m.tag) {
    case Tag::Extend: {
      const auto layer = static_cast<std::uint32_t>(m.arg[0]);
      bw_ = BfsWave{};
      bw_.open = true;
      bw_.layer = layer;
      if (bfsDepth_ + 1 == layer) {
        bfsProbeLayer(ctx, layer);
      } else {
        for (Port c : bfsChildren_) {
          if (!bfsLive_[c]) continue;
          send(ctx, c, m);
          ++bw_.pending;
        }
      }
      bfsTryReport(ctx);
      return;
    }
    case Tag::Probe: {
      Message r = make(Tag::NoJoin, Stage::Bfs, kBfsTree);
      if (!bfsJoined_) {
        bfsJoined_ = true;
        bfsParent_ = from;
        bfsDepth_ = static_cast<std::uint32_t>(m.arg[0]);
        r.tag = Tag::Join;
      }
      send(ctx, from, std::move(r));
      return;
    }
    case Tag::Join:
      bfsChildren_.push_back(from);
      bfsLive_[from] = 1;
      ++bw_.added;
      [[fallthrough]];
    case Tag::NoJoin:
      if (bw_.pending > 0) --bw_.pending;
      bfsTryReport(ctx);
      return;
    case Tag::LayerDone:
      bw_.added += m.arg[0];
      if (m.arg[0] == 0) bfsLive_[from] = 0;
      if (bw_.pending > 0) --bw_.pending;
      bfsTryReport(ctx);
      return;
    case Tag::BfsDone:
      if (bfsDone_) return;
      bfsDone_ = true;
      for (Port c : bfsChildren_) send(ctx, c, m);
      ctx.markStageDone(Stage::Bfs);
      return;
    default:
      return;
  }
}

void NodeAgent::bfsTryReport(Context& ctx) {
  if (!bw_.open || bw_.pending > 0) return;
  bw_.open = false;
  if (bfsParent_ != kNoPort) {
    Message r = make(Tag::LayerDone, Stage::Bfs, kBfsTree);
    r.arg[0] = bw_.added;
    r.words = 1;
    send(ctx, bfsParent_, std::move(r));
    return;
  }
  if (bw_.added == 0) {
    bfsHandle(ctx, kNoPort, make(Tag::BfsDone, Stage::Bfs, kBfsTree));
    return;
  }
  Message e = make(Tag::Extend, Stage::Bfs, kBfsTree);
  e.arg[0] = bw_.layer + 1;
  e.words = 1;
  bfsHandle(ctx, kNoPort, e);
}

}  // namespace amst
