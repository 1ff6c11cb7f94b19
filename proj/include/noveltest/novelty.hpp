#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "noveltest/rng.hpp"

namespace noveltest {

using BehaviorVector = std::vector<double>;

struct NoveltyParams {
  int k = 15;
  double archive_probability = 0.1;
};

// d_cos = 1 - ((cos(s1, s2) + 1) / 2). Zero-magnitude vectors get a
// cosine of 0, hence a distance of 0.5.
inline double behavior_distance(const BehaviorVector& s1, const BehaviorVector& s2) {
  if (s1.size() != s2.size()) throw std::invalid_argument("behavior dimension mismatch");
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < s1.size(); ++i) {
    dot += s1[i] * s2[i];
    n1 += s1[i] * s1[i];
    n2 += s2[i] * s2[i];
  }
  double cosine = 0.0;
  if (n1 > 0.0 && n2 > 0.0) cosine = dot / (std::sqrt(n1) * std::sqrt(n2));
  cosine = std::clamp(cosine, -1.0, 1.0);
  return 1.0 - (cosine + 1.0) / 2.0;
}

// Mean distance to the k nearest neighbours; fewer than k neighbours use
// all of them, an empty neighbour set scores 1 (maximally novel). The
// candidate itself must not be part of `neighbours`.
inline double novelty_score(const BehaviorVector& b,
                            const std::vector<const BehaviorVector*>& neighbours,
                            const NoveltyParams& params) {
  if (neighbours.empty()) return 1.0;
  std::vector<double> dists;
  dists.reserve(neighbours.size());
  for (const auto* n : neighbours) dists.push_back(behavior_distance(b, *n));
  std::size_t k = std::min<std::size_t>(params.k, dists.size());
  std::partial_sort(dists.begin(), dists.begin() + k, dists.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += dists[i];
  return sum / k;
}

// Append-only store of observed behaviours with its own rng stream for
// the probabilistic insertions.
struct BehaviorArchive {
  std::vector<BehaviorVector> entries;
  Rng rng;

  explicit BehaviorArchive(std::uint64_t seed = 0) : rng(seed) {}
};

// Appends with probability p, independent of the novelty score; one draw
// is consumed per candidate either way.
inline void update_archive(BehaviorArchive& archive, const BehaviorVector& b,
                           const NoveltyParams& params) {
  if (!archive.entries.empty() && archive.entries.front().size() != b.size())
    throw std::invalid_argument("behavior dimension mismatch");
  if (archive.rng.chance(params.archive_probability)) archive.entries.push_back(b);
}

}  // namespace noveltest
