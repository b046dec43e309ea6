#pragma once

// Independent reimplementations used to cross-check the eval module: string-keyed
// hash counts and explicit loops, nothing shared with the library code.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqprobe/eval/metrics.hpp"

namespace seqprobe::testing {

inline double reference_bleu(const eval::Tokens& cand, const std::vector<eval::Tokens>& refs) {
  if (cand.empty()) return 0.0;
  auto grams = [](const eval::Tokens& t, std::size_t n) {
    std::unordered_map<std::string, int> m;
    for (std::size_t i = 0; i + n <= t.size(); ++i) {
      std::string key;
      for (std::size_t k = 0; k < n; ++k) key += t[i + k] + '\x1f';
      ++m[key];
    }
    return m;
  };
  double prod = 1.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    auto c = grams(cand, n);
    std::unordered_map<std::string, int> best;
    for (const auto& r : refs)
      for (const auto& [g, k] : grams(r, n)) best[g] = std::max(best[g], k);
    double hit = 0, all = 0;
    for (const auto& [g, k] : c) {
      all += k;
      hit += std::min(k, best.count(g) ? best[g] : 0);
    }
    if (cand.size() < 4 && n >= 2) {
      hit += 1;
      all += 1;
    }
    if (hit == 0) return 0.0;
    prod *= hit / all;
  }
  std::size_t r = refs[0].size();
  for (const auto& ref : refs) {
    const long dr = std::labs(static_cast<long>(ref.size()) - static_cast<long>(cand.size()));
    const long db = std::labs(static_cast<long>(r) - static_cast<long>(cand.size()));
    if (dr < db || (dr == db && ref.size() < r)) r = ref.size();
  }
  const double bp = cand.size() > r ? 1.0 : std::exp(1.0 - double(r) / double(cand.size()));
  return bp * std::pow(prod, 0.25);
}

// Fraction of (positive, negative) pairs ordered correctly, ties counting half.
inline double pairwise_auc(const std::vector<eval::ScoredLabel>& d) {
  double num = 0, pairs = 0;
  for (const auto& p : d)
    for (const auto& n : d)
      if (p.positive && !n.positive) {
        pairs += 1;
        num += p.score > n.score ? 1.0 : p.score == n.score ? 0.5 : 0.0;
      }
  return num / pairs;
}

}  // namespace seqprobe::testing
