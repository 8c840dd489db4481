#include "amst/roles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace amst {

void ProtocolParams::validate() const {
  if (!(eps >= 0.0 && eps <= 0.25)) throw std::invalid_argument("eps must lie in [0, 1/4]");
  if (!(alpha > 0 && beta > 0 && cTree > 0 && cFind > 0 && cApprox > 0 && kappaB > 0))
    throw std::invalid_argument("protocol constants must be positive");
  if (cMsg == 0 || searchCopies == 0) throw std::invalid_argument("cMsg and searchCopies must be positive");
}

Thresholds computeThresholds(std::size_t nEstimate, const ProtocolParams& p) {
  Thresholds t;
  const double n = static_cast<double>(std::max<std::size_t>(nEstimate, 2));
  const double ln = std::log(n);
  t.highDegree = p.alpha * std::pow(n, 0.5 + p.eps) * ln * ln;
  t.starProbability = std::min(1.0, p.beta / (std::pow(n, 0.5 + p.eps) * ln));
  t.sqrtN = static_cast<std::uint32_t>(std::ceil(std::sqrt(static_cast<double>(nEstimate)) - 1e-9));
  t.sqrtN = std::max<std::uint32_t>(t.sqrtN, 1);
  return t;
}

bool drawStar(std::uint64_t protocolSeed, std::uint32_t salt, NodeId id, double probability) {
  return unitInterval(mix(protocolSeed, 0x73746172ULL, salt, id)) < probability;
}

std::size_t Roles::starCount() const { return static_cast<std::size_t>(std::count(star.begin(), star.end(), true)); }

Roles assignRoles(const WeightedGraph& g, const ProtocolParams& p, std::uint64_t protocolSeed,
                  std::uint32_t maxAttempts) {
  const auto t = computeThresholds(p.doubleN ? 2 * g.nodeCount() : g.nodeCount(), p);
  const std::size_t n = g.nodeCount();
  Roles r;
  r.high.resize(n);
  for (NodeIndex v = 0; v < n; ++v) r.high[v] = static_cast<double>(g.degree(v)) >= t.highDegree;
  for (std::uint32_t salt = 0; salt < maxAttempts; ++salt) {
    r.salt = salt;
    r.attempts = salt + 1;
    r.star.assign(n, false);
    for (NodeIndex v = 0; v < n; ++v) r.star[v] = drawStar(protocolSeed, salt, g.id(v), t.starProbability);
    bool ok = true;
    for (NodeIndex v = 0; v < n && ok; ++v) {
      if (!r.high[v] || r.star[v]) continue;
      auto nb = g.neighbors(v);
      ok = std::any_of(nb.begin(), nb.end(), [&](const Adjacency& a) { return r.star[a.nbr]; });
    }
    if (ok) {
      r.covered = true;
      return r;
    }
  }
  return r;
}

std::vector<bool> gprimeMask(const WeightedGraph& g, const Roles& r) {
  std::vector<bool> mask(g.edgeCount());
  for (EdgeIndex e = 0; e < g.edgeCount(); ++e) mask[e] = r.inGprime(g.edge(e).a) && r.inGprime(g.edge(e).b);
  return mask;
}

std::vector<bool> lowEndpointMask(const WeightedGraph& g, const Roles& r) {
  std::vector<bool> mask(g.edgeCount());
  for (EdgeIndex e = 0; e < g.edgeCount(); ++e) mask[e] = r.low(g.edge(e).a) || r.low(g.edge(e).b);
  return mask;
}

std::vector<bool> unionMask(const std::vector<bool>& base, std::span<const EdgeIndex> extra) {
  std::vector<bool> out = base;
  for (EdgeIndex e : extra) out[e] = true;
  return out;
}

}  // namespace amst
