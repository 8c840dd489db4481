#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "amst/sketch.hpp"
#include "amst/types.hpp"

namespace amst {

// Pipeline stage a message is accounted to.
enum class Stage : std::uint8_t { Forest, Fmin, Bfs, Final, Test };
inline constexpr std::size_t kStageCount = 5;
std::string_view stageName(Stage s);

enum class Tag : std::uint8_t {
  // initialization
  Star,
  Child,
  NotChild,
  StarNode,
  LowDegree,
  // fragment primitives (tree waves)
  SketchRequest,
  SketchReply,
  VerifyRequest,
  VerifyResult,
  Verify,
  VerifyReply,
  ThresholdStart,
  CutCount,
  // maximal tree
  MergeInstr,
  Merge,
  Accept,
  Reject,
  RejectUp,
  IdFlood,
  ForestDone,
  // minimum spanning forest of G'
  PhaseStart,
  SearchResult,
  StepDone,
  MergeReq,
  MergeAck,
  MergeOutcome,
  Depth,
  HeightReport,
  TruncFinal,
  SketchUp,
  BoundsDown,
  EdgeCheck,
  CheckUp,
  IdUpdate,
  FminMark,
  FminDone,
  // layered BFS
  Extend,
  Probe,
  Join,
  NoJoin,
  LayerDone,
  BfsDone,
  // final-stage GHS
  Connect,
  Initiate,
  Test,
  GhsAccept,
  GhsReject,
  Report,
  ChangeRoot,
  GhsDone,
  // kernel tests
  Ping,
  Count_
};
inline constexpr std::size_t kTagCount = static_cast<std::size_t>(Tag::Count_);
std::string_view tagName(Tag t);

// One logical protocol message. Field meaning is per tag; the accounting
// counters state how many O(log n)-bit words, IDs and weights it carries so
// the kernel can charge CONGEST messages.
struct Message {
  Tag tag = Tag::Ping;
  Stage stage = Stage::Test;
  std::uint8_t tree = 0;  // which rooted tree a wave travels on
  std::uint32_t session = 0;
  std::array<std::uint64_t, 4> arg{};
  Weight w = 0;
  Weight w2 = 0;
  std::shared_ptr<const SketchBundle> sketch;
  std::shared_ptr<const std::vector<SketchEdge>> edges;  // candidate edges

  std::uint8_t words = 0;
  std::uint8_t ids = 0;
  std::uint8_t weights = 0;
};

// Bit widths derived from the known network size.
struct BitBudget {
  std::uint32_t wordBits = 1;    // ceil(log2 n)
  std::uint32_t idBits = 3;      // IDs are drawn from [1, n^3]
  std::uint32_t weightBits = 8;  // w' <= n^2 * 2^(2|ID|) + ...
  std::uint32_t maxBits = 4;     // one CONGEST message: c_msg words

  static BitBudget forNetwork(std::size_t n, std::uint32_t cMsg);
  std::uint64_t bitsOf(const Message& m) const;
  std::uint64_t cellBits() const { return weightBits + 2ull * idBits + 64; }
};

// Number of CONGEST messages needed for a payload of the given size:
// ceil(bits / (c_msg * ceil(log2 n))).
std::uint64_t splitPayload(std::uint64_t bits, std::size_t n, std::uint32_t cMsg);

}  // namespace amst
