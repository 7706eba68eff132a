#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oe/numerics.h"

namespace oe {

using ConceptId = std::uint32_t;

// (child, parent): child is the hyponym, parent the hypernym.
struct ConceptPair {
  ConceptId child = 0;
  ConceptId parent = 0;

  auto operator<=>(const ConceptPair&) const = default;
};

// Sorted, duplicate-free set of concept pairs.
class PairSet {
 public:
  PairSet() = default;
  explicit PairSet(std::vector<ConceptPair> pairs);

  bool contains(ConceptPair p) const;
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const ConceptPair& operator[](std::size_t i) const { return pairs_[i]; }
  auto begin() const { return pairs_.begin(); }
  auto end() const { return pairs_.end(); }
  const std::vector<ConceptPair>& pairs() const { return pairs_; }

  PairSet merged(const PairSet& other) const;
  PairSet minus(const PairSet& other) const;

  bool operator==(const PairSet&) const = default;

 private:
  std::vector<ConceptPair> pairs_;
};

struct LabeledPair {
  ConceptId child = 0;
  ConceptId parent = 0;
  bool label = false;

  bool operator==(const LabeledPair&) const = default;
};

using NamedEdge = std::pair<std::string, std::string>;

// Transitive closure (paths of length >= 1) of a DAG over concepts 0..n-1.
// Throws CycleError naming the concept ids of one cycle.
PairSet transitive_closure(std::size_t n_concepts, std::span<const ConceptPair> edges);

class Taxonomy {
 public:
  // Concepts are indexed in sorted-name order so the result does not depend on
  // input order. Duplicate edges are dropped.
  static Taxonomy build(std::span<const NamedEdge> edges);

  std::size_t size() const { return concepts_.size(); }
  const std::vector<std::string>& concepts() const { return concepts_; }
  const std::string& name(ConceptId id) const { return concepts_.at(id); }
  std::optional<ConceptId> find(std::string_view name) const;

  const std::vector<ConceptPair>& direct_edges() const { return direct_edges_; }

  // Materialized on first use; safe to call concurrently.
  const PairSet& closure() const;

 private:
  struct ClosureCache;

  std::vector<std::string> concepts_;
  std::vector<ConceptPair> direct_edges_;
  std::shared_ptr<ClosureCache> cache_;
};

struct EdgeSplit {
  PairSet train;
  PairSet dev;
  PairSet test;
  std::uint64_t seed = 0;
};

// Uniformly samples disjoint dev and test sets from `closure`; the rest is train.
EdgeSplit split(const PairSet& closure, std::size_t n_dev, std::size_t n_test,
                std::uint64_t seed);

// Replaces one side of `pair` (chosen uniformly) with a uniformly random
// concept. The result never equals the input, is never a self-pair and, when
// `forbidden` is given, is not in it. Gives up with SamplingError after 100
// rejected draws.
LabeledPair sample_negative(ConceptPair pair, std::size_t n_concepts, Rng& rng,
                            const PairSet* forbidden = nullptr);

// Each positive followed by one corrupted negative filtered against
// `full_closure`.
std::vector<LabeledPair> make_eval_pairs(const PairSet& positives, std::size_t n_concepts,
                                         const PairSet& full_closure, Rng& rng);

// Closure of the known (train + dev) pairs, used by the no-learning baseline.
PairSet known_closure(std::size_t n_concepts, const PairSet& train, const PairSet& dev);

inline bool closure_baseline_classify(const PairSet& known, ConceptPair query) {
  return known.contains(query);
}

}  // namespace oe
