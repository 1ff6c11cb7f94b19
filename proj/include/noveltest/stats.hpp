#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace noveltest {

// A12 = (#{x > y} + 0.5 * #{x = y}) / (|xs| * |ys|).
inline double vargha_delaney_a12(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("empty sample");
  double wins = 0.0;
  for (double x : xs)
    for (double y : ys) {
      if (x > y)
        wins += 1.0;
      else if (x == y)
        wins += 0.5;
    }
  return wins / (static_cast<double>(xs.size()) * static_cast<double>(ys.size()));
}

struct MannWhitneyResult {
  double u;  // U statistic of the first sample
  double p;  // two-sided
};

namespace detail {

inline double u_statistic(const std::vector<double>& pooled, const std::vector<bool>& is_x,
                          std::size_t n_x) {
  // average ranks for ties
  std::vector<std::size_t> idx(pooled.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  std::vector<double> rank(pooled.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && pooled[idx[j + 1]] == pooled[idx[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = avg;
    i = j + 1;
  }
  double rx = 0.0;
  for (std::size_t t = 0; t < pooled.size(); ++t)
    if (is_x[t]) rx += rank[t];
  return rx - static_cast<double>(n_x) * (n_x + 1) / 2.0;
}

}  // namespace detail

// U from rank sums with average ranks for ties. Exact permutation
// distribution when both samples have at most 8 observations, otherwise
// the normal approximation with tie-corrected variance and continuity
// correction.
inline MannWhitneyResult mann_whitney_u(const std::vector<double>& xs,
                                        const std::vector<double>& ys) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("empty sample");
  std::size_t n = xs.size(), m = ys.size();
  std::vector<double> pooled(xs);
  pooled.insert(pooled.end(), ys.begin(), ys.end());
  std::vector<bool> is_x(n + m, false);
  for (std::size_t i = 0; i < n; ++i) is_x[i] = true;

  double u = detail::u_statistic(pooled, is_x, n);
  double nm = static_cast<double>(n) * static_cast<double>(m);

  bool degenerate = true;
  for (double v : pooled)
    if (v != pooled[0]) degenerate = false;
  if (degenerate) return {u, 1.0};

  if (n <= 8 && m <= 8) {
    // enumerate all C(n+m, n) label assignments
    double observed = std::min(u, nm - u);
    long long count = 0, total = 0;
    std::vector<bool> mask(n + m, false);
    std::fill(mask.begin(), mask.begin() + n, true);
    std::sort(mask.begin(), mask.end());  // start from the lexicographically first permutation
    do {
      double u2 = detail::u_statistic(pooled, mask, n);
      if (std::min(u2, nm - u2) <= observed + 1e-12) ++count;
      ++total;
    } while (std::next_permutation(mask.begin(), mask.end()));
    return {u, static_cast<double>(count) / static_cast<double>(total)};
  }

  double big_n = static_cast<double>(n + m);
  // tie correction: sum over tie groups of (t^3 - t)
  std::vector<double> sorted(pooled);
  std::sort(sorted.begin(), sorted.end());
  double tie_sum = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    double t = static_cast<double>(j - i + 1);
    tie_sum += t * t * t - t;
    i = j + 1;
  }
  double variance = nm / 12.0 * (big_n + 1.0 - tie_sum / (big_n * (big_n - 1.0)));
  if (variance <= 0.0) return {u, 1.0};
  double mean = nm / 2.0;
  double z = 0.0;
  if (u > mean)
    z = (u - mean - 0.5) / std::sqrt(variance);
  else if (u < mean)
    z = (u - mean + 0.5) / std::sqrt(variance);
  double p = std::erfc(std::abs(z) / std::sqrt(2.0));
  return {u, std::min(p, 1.0)};
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2.0;
}

inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  double pos = q * (v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = pos - lo;
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace noveltest
