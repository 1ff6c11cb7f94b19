#pragma once

#include <limits>

#include "noveltest/cdg.hpp"
#include "noveltest/vm.hpp"

namespace noveltest {

// Flat distance used for strict comparisons and gradient-free guards.
constexpr double kBranchDistanceK = 1.0;

// Normalization mapping [0,inf) to [0,1); keeps the approach level
// strictly dominant over the branch distance.
inline double omega(double branch_distance) { return branch_distance / (branch_distance + 1.0); }

struct ObjectiveResult {
  int approach_level = 0;
  double branch_distance = 0.0;
  double fitness = 0.0;  // approach_level + omega(branch_distance); 0 iff covered
  bool covered = false;
};

// 0 if the target executed; otherwise the number of control-dependence
// levels between the deepest executed controlling ancestor and the
// target, minus one (distance is measured at the divergence node).
inline int approach_level(const EpisodeResult& episode, int target,
                          const ControlDependenceGraph& cdg) {
  if (episode.covered.count(target)) return 0;
  std::vector<int> chain = cdg.ancestors(target);  // deepest first
  for (std::size_t k = 0; k < chain.size(); ++k) {
    if (episode.covered.count(chain[k])) return static_cast<int>(k);
  }
  return static_cast<int>(chain.size());  // divergence at the root (trigger never fired)
}

inline ObjectiveResult statement_fitness(const EpisodeResult& episode, int target,
                                         const ControlDependenceGraph& cdg) {
  ObjectiveResult res;
  if (episode.covered.count(target)) {
    res.covered = true;
    return res;
  }

  std::vector<int> chain = cdg.ancestors(target);
  // Divergence node: deepest executed controlling ancestor; falls back to
  // the shallowest uncovered ancestor (the entry whose trigger never
  // fired) when nothing on the chain executed.
  int divergence = chain.empty() ? kCdgRoot : chain.back();
  int below = target;  // node on the chain directly controlled by the divergence node
  std::size_t k = chain.size();
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (episode.covered.count(chain[i])) {
      divergence = chain[i];
      below = i == 0 ? target : chain[i - 1];
      k = i;
      break;
    }
  }
  res.approach_level = static_cast<int>(k == chain.size() ? chain.size() : k);

  double best = kBranchDistanceK;
  if (divergence != kCdgRoot && cdg.node(divergence).is_if) {
    // Best branch distance toward the required branch over every trace
    // step that evaluated this predicate.
    bool want = cdg.node(below).branch_label;
    best = std::numeric_limits<double>::infinity();
    for (const auto& ev : episode.trace) {
      if (ev.statement_id != divergence) continue;
      best = std::min(best, want ? ev.dist_true : ev.dist_false);
    }
    if (!std::isfinite(best)) best = kBranchDistanceK;  // covered via a stale covered set only
  }
  res.branch_distance = best;
  res.fitness = res.approach_level + omega(res.branch_distance);
  return res;
}

}  // namespace noveltest
