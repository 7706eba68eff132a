#pragma once

// Independent reference implementations used by unit and acceptance tests.
// Each one is deliberately naive: no sorting tricks, no shared helpers with
// the library code it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "oe/evaluation.h"
#include "oe/numerics.h"
#include "oe/taxonomy.h"

namespace oe::oracle {

// Warshall reachability on a dense boolean matrix.
inline PairSet closure(std::size_t n, std::span<const ConceptPair> edges) {
  std::vector<std::vector<char>> r(n, std::vector<char>(n, 0));
  for (const auto& e : edges) r[e.child][e.parent] = 1;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!r[i][k]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (r[k][j]) r[i][j] = 1;
      }
    }
  }
  std::vector<ConceptPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (r[i][j]) out.push_back({static_cast<ConceptId>(i), static_cast<ConceptId>(j)});
    }
  }
  return PairSet(std::move(out));
}

// Full stable sort of candidates per query, then the first ground-truth hit.
inline std::vector<std::size_t> ranks(const Matrix& scores,
                                      std::span<const std::vector<std::size_t>> gt) {
  std::vector<std::size_t> out;
  for (std::size_t q = 0; q < scores.rows(); ++q) {
    std::vector<std::size_t> order(scores.cols());
    for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores(q, a) > scores(q, b); });
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      if (std::find(gt[q].begin(), gt[q].end(), order[pos]) != gt[q].end()) {
        out.push_back(pos + 1);
        break;
      }
    }
  }
  return out;
}

inline double accuracy_at(std::span<const ScoredPair> pairs, double threshold) {
  std::size_t correct = 0;
  for (const auto& p : pairs) correct += (p.penalty <= threshold) == p.label;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(pairs.size());
}

// Tries -inf and every observed penalty. A cut at penalty p classifies the
// same as any threshold up to the next distinct penalty, so the equivalent
// midpoint (or +inf after the last value) is what gets reported.
inline ThresholdResult threshold(std::span<const ScoredPair> pairs) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> values;
  for (const auto& p : pairs) values.push_back(p.penalty);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  ThresholdResult best{-kInf, accuracy_at(pairs, -kInf)};
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double acc = accuracy_at(pairs, values[k]);
    if (acc > best.accuracy) {
      best.accuracy = acc;
      best.threshold = k + 1 < values.size() ? 0.5 * (values[k] + values[k + 1]) : kInf;
    }
  }
  return best;
}

}  // namespace oe::oracle
