#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "amst/types.hpp"

namespace amst {

// Encoded edge identity. XOR-combinable; an edge added twice cancels.
struct SketchCell {
  Weight w = 0;
  NodeId x = 0;  // larger endpoint ID
  NodeId y = 0;  // smaller endpoint ID
  std::uint64_t fingerprint = 0;

  bool zero() const { return w == 0 && x == 0 && y == 0 && fingerprint == 0; }
  void absorb(const SketchCell& o) {
    w ^= o.w;
    x ^= o.x;
    y ^= o.y;
    fingerprint ^= o.fingerprint;
  }
  bool operator==(const SketchCell&) const = default;
};

struct SketchEdge {
  Weight w = 0;
  NodeId x = 0;
  NodeId y = 0;
  bool operator==(const SketchEdge&) const = default;
};

// Level-sampled linear sketch over a set of edges. Level l holds the XOR of
// all edges whose seeded hash has at least l trailing zero bits, so each edge
// survives to level l with probability 2^-l. Every node that shares the seed
// samples identically, so edges reported by both endpoints cancel.
class XorSketch {
 public:
  enum class Status { Empty, Failed, Decoded };
  struct Result {
    Status status = Status::Empty;
    SketchEdge edge{};
  };

  XorSketch() = default;
  XorSketch(std::uint64_t seed, int levels);

  // ceil(log2(maxEdges)) + 2
  static int levelsFor(std::uint64_t maxEdges);
  static int levelOf(std::uint64_t seed, const SketchEdge& e, int levels);
  static std::uint64_t fingerprintOf(std::uint64_t seed, const SketchEdge& e);
  static SketchEdge canonical(Weight w, NodeId u, NodeId v);

  void add(const SketchEdge& e);
  void combine(const XorSketch& other);

  std::uint64_t seed() const { return seed_; }
  int levels() const { return static_cast<int>(cells_.size()); }
  const SketchCell& cell(int level) const { return cells_[static_cast<std::size_t>(level)]; }

  // True iff the sketched set is empty, up to a 2^-64 fingerprint collision.
  bool empty() const;
  // Deepest non-zero level, or -1 when empty.
  int deepestLevel() const;
  // Decodes the deepest non-zero level and validates it against the seed.
  Result decode() const;

  bool operator==(const XorSketch&) const = default;

 private:
  std::uint64_t seed_ = 0;
  std::vector<SketchCell> cells_;
};

using SketchBundle = std::vector<XorSketch>;

}  // namespace amst
