#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "color/random.hpp"

namespace color {

// Inclusion probabilities proportional to weight for a fixed-size sample:
// pi_j = min(1, c * w_j) with sum pi_j = budget. Heavy entries are capped at 1
// and the remaining mass is redistributed over the rest.
inline std::vector<double> inclusion_probabilities(std::span<const double> weights, std::size_t budget) {
  const auto n = weights.size();
  std::vector<double> pi(n, 0.0);
  if (budget >= n) {
    for (std::size_t j = 0; j < n; ++j) pi[j] = weights[j] > 0 ? 1.0 : 0.0;
    return pi;
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return weights[a] > weights[b]; });
  double rest = 0;
  for (auto w : weights) rest += w;
  std::size_t certain = 0;
  while (certain < budget && certain < n) {
    const double remaining = static_cast<double>(budget - certain);
    if (rest <= 0 || weights[idx[certain]] * remaining < rest) break;
    rest -= weights[idx[certain]];
    pi[idx[certain]] = 1.0;
    ++certain;
  }
  const double remaining = static_cast<double>(budget - certain);
  for (std::size_t k = certain; k < n; ++k) {
    const auto j = idx[k];
    pi[j] = rest > 0 ? std::min(1.0, weights[j] * remaining / rest) : 0.0;
  }
  return pi;
}

struct WeightedSample {
  std::vector<std::size_t> indices;  // ascending
  std::vector<double> inclusion;     // inclusion probability of each selected index
};

// Systematic probability-proportional-to-size sampling without replacement.
// Selects `budget` distinct indices (fewer only if fewer have positive weight);
// index j is included with probability exactly inclusion_probabilities()[j].
inline WeightedSample sample_without_replacement(std::span<const double> weights, std::size_t budget,
                                                 Rng& rng) {
  const auto pi = inclusion_probabilities(weights, budget);
  WeightedSample s;
  const double u = rng.uniform01();
  double cum = 0;
  double point = u;
  for (std::size_t j = 0; j < pi.size(); ++j) {
    if (pi[j] <= 0) continue;
    const double lo = cum;
    cum += pi[j];
    // Certain entries must not be lost to rounding in the running sum.
    if (pi[j] >= 1.0 || (point >= lo && point < cum)) {
      s.indices.push_back(j);
      s.inclusion.push_back(pi[j]);
      while (point < cum) point += 1.0;
    }
  }
  return s;
}

}  // namespace color
