#include "amst/sketch.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace amst {

namespace {

std::uint64_t edgeHash(std::uint64_t seed, const SketchEdge& e) {
  return mixWeight(mix(seed, e.x, e.y), e.w);
}

}  // namespace

XorSketch::XorSketch(std::uint64_t seed, int levels) : seed_(seed), cells_(static_cast<std::size_t>(levels)) {
  if (levels < 1) throw std::invalid_argument("sketch needs at least one level");
}

int XorSketch::levelsFor(std::uint64_t maxEdges) {
  int bits = maxEdges <= 1 ? 0 : bitLength(maxEdges - 1);
  return bits + 2;
}

int XorSketch::levelOf(std::uint64_t seed, const SketchEdge& e, int levels) {
  std::uint64_t h = edgeHash(seed, e);
  int tz = h == 0 ? 64 : std::countr_zero(h);
  return std::min(tz, levels - 1);
}

std::uint64_t XorSketch::fingerprintOf(std::uint64_t seed, const SketchEdge& e) {
  std::uint64_t f = mix(edgeHash(seed, e), 0x66696e6765727072ULL);
  return f == 0 ? 1 : f;
}

SketchEdge XorSketch::canonical(Weight w, NodeId u, NodeId v) {
  return u > v ? SketchEdge{w, u, v} : SketchEdge{w, v, u};
}

void XorSketch::add(const SketchEdge& e) {
  SketchCell c{e.w, e.x, e.y, fingerprintOf(seed_, e)};
  const int top = levelOf(seed_, e, levels());
  for (int l = 0; l <= top; ++l) cells_[static_cast<std::size_t>(l)].absorb(c);
}

void XorSketch::combine(const XorSketch& other) {
  if (cells_.empty()) {
    *this = other;
    return;
  }
  if (other.seed_ != seed_ || other.cells_.size() != cells_.size())
    throw std::invalid_argument("combining incompatible sketches");
  for (std::size_t l = 0; l < cells_.size(); ++l) cells_[l].absorb(other.cells_[l]);
}

bool XorSketch::empty() const { return cells_.empty() || cells_.front().zero(); }

int XorSketch::deepestLevel() const {
  for (int l = levels() - 1; l >= 0; --l)
    if (!cells_[static_cast<std::size_t>(l)].zero()) return l;
  return -1;
}

XorSketch::Result XorSketch::decode() const {
  const int l = deepestLevel();
  if (l < 0) return {Status::Empty, {}};
  const SketchCell& c = cells_[static_cast<std::size_t>(l)];
  SketchEdge e{c.w, c.x, c.y};
  if (e.x <= e.y || e.y == 0 || e.w == 0) return {Status::Failed, {}};
  if (c.fingerprint != fingerprintOf(seed_, e)) return {Status::Failed, {}};
  if (levelOf(seed_, e, levels()) != l) return {Status::Failed, {}};
  return {Status::Decoded, e};
}

}  // namespace amst
