#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "normsim/env/world.hpp"

namespace normsim {

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// Precision and recall of the norms believed at or above `theta` against
/// the active norms. Empty sets score 0.
inline PrecisionRecall precision_recall(const NormMask& learned, const NormMask& active) {
  const double hit = static_cast<double>((learned & active).count());
  PrecisionRecall r;
  if (learned.any()) r.precision = hit / static_cast<double>(learned.count());
  if (active.any()) r.recall = hit / static_cast<double>(active.count());
  return r;
}

inline PrecisionRecall precision_recall(const std::vector<double>& beliefs, const NormMask& active, double theta) {
  NormMask learned;
  for (std::size_t b = 0; b < beliefs.size(); ++b)
    if (beliefs[b] >= theta) learned.set(b);
  return precision_recall(learned, active);
}

inline double arithmetic_mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Geometric mean; any zero makes it zero.
inline double geometric_mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) {
    if (x <= 0.0) return 0.0;
    s += std::log(x);
  }
  return std::exp(s / static_cast<double>(xs.size()));
}

/// Per-norm population means of a belief matrix indexed [agent][norm].
struct PopulationMeans {
  std::vector<double> arithmetic;
  std::vector<double> geometric;
};

inline PopulationMeans population_means(const std::vector<std::vector<double>>& beliefs) {
  PopulationMeans m;
  if (beliefs.empty()) return m;
  const std::size_t n = beliefs.front().size();
  std::vector<double> column(beliefs.size());
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t i = 0; i < beliefs.size(); ++i) column[i] = beliefs[i][b];
    m.arithmetic.push_back(arithmetic_mean(column));
    m.geometric.push_back(geometric_mean(column));
  }
  return m;
}

/// Mean of the `k` largest values.
inline double top_k_mean(std::vector<double> xs, std::size_t k = 5) {
  k = std::min(k, xs.size());
  if (k == 0) return 0.0;
  std::partial_sort(xs.begin(), xs.begin() + static_cast<long>(k), xs.end(), std::greater<>());
  return std::accumulate(xs.begin(), xs.begin() + static_cast<long>(k), 0.0) / static_cast<double>(k);
}

}  // namespace normsim
