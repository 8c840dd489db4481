#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "amst/graph.hpp"

namespace amst {

// Tunable constants of the protocol stack. Defaults are the desk-scale
// calibration used by the acceptance suite.
struct ProtocolParams {
  double eps = 0.0;     // trade-off parameter in [0, 1/4]
  double alpha = 0.1;   // high-degree threshold scale
  double beta = 5.0;    // star probability scale
  double cTree = 1.0;   // MaximalTree sampling budget: ceil(16 c ln n) FindAny calls
  double cFind = 1.0;   // findMinOutgoing retry budget: ceil(16 c_f ln n)
  double cApprox = 2.0; // ApproxCut repetitions: ceil(c_a ln n)
  double kappaB = 4.0;  // near-BFS additive stretch constant
  std::uint32_t cMsg = 4;
  std::uint32_t searchCopies = 4;  // independent sketches per minimum-edge search round
  bool doubleN = false;            // nodes are told 2n instead of n

  // Throws std::invalid_argument when eps is outside [0, 1/4] or a constant is not positive.
  void validate() const;
};

struct Thresholds {
  double highDegree = 0.0;  // alpha * n^(1/2+eps) * ln^2 n
  double starProbability = 0.0;  // beta / (n^(1/2+eps) * ln n), capped at 1
  std::uint32_t sqrtN = 1;  // ceil(sqrt(n))
};

Thresholds computeThresholds(std::size_t nEstimate, const ProtocolParams& p);

// The coin a node flips at wake-up to decide whether it is a star.
bool drawStar(std::uint64_t protocolSeed, std::uint32_t salt, NodeId id, double probability);

struct Roles {
  std::vector<bool> star;
  std::vector<bool> high;
  std::uint32_t salt = 0;      // star-draw salt that satisfied the coverage check
  std::uint32_t attempts = 0;  // draws tried
  bool covered = false;        // every high-degree node has a star neighbour

  bool inGprime(NodeIndex v) const { return star[v] || high[v]; }
  bool low(NodeIndex v) const { return !high[v]; }
  std::size_t starCount() const;
};

// Draws stars until every high-degree node has a star neighbour, trying at
// most maxAttempts salts. The result reports coverage failure rather than throwing.
Roles assignRoles(const WeightedGraph& g, const ProtocolParams& p, std::uint64_t protocolSeed,
                  std::uint32_t maxAttempts = 50);

// Derived subgraphs as edge masks.
std::vector<bool> gprimeMask(const WeightedGraph& g, const Roles& r);
std::vector<bool> lowEndpointMask(const WeightedGraph& g, const Roles& r);
std::vector<bool> unionMask(const std::vector<bool>& base, std::span<const EdgeIndex> extra);

}  // namespace amst
