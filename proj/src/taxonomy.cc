#include "oe/taxonomy.h"

#include <fmt/format.h>

#include <algorithm>
#include <mutex>
#include <queue>

#include "oe/errors.h"

namespace oe {

PairSet::PairSet(std::vector<ConceptPair> pairs) : pairs_(std::move(pairs)) {
  std::sort(pairs_.begin(), pairs_.end());
  pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
}

bool PairSet::contains(ConceptPair p) const {
  return std::binary_search(pairs_.begin(), pairs_.end(), p);
}

PairSet PairSet::merged(const PairSet& other) const {
  std::vector<ConceptPair> out;
  out.reserve(size() + other.size());
  std::set_union(begin(), end(), other.begin(), other.end(), std::back_inserter(out));
  PairSet result;
  result.pairs_ = std::move(out);
  return result;
}

PairSet PairSet::minus(const PairSet& other) const {
  std::vector<ConceptPair> out;
  out.reserve(size());
  std::set_difference(begin(), end(), other.begin(), other.end(), std::back_inserter(out));
  PairSet result;
  result.pairs_ = std::move(out);
  return result;
}

namespace {

// Returns the node ids of one cycle among the nodes Kahn's algorithm could not
// resolve. Every such node has at least one unresolved parent.
std::vector<ConceptId> find_cycle(const std::vector<std::vector<ConceptId>>& parents,
                                  const std::vector<bool>& resolved) {
  ConceptId start = 0;
  while (resolved[start]) ++start;
  std::vector<int> seen_at(parents.size(), -1);
  std::vector<ConceptId> walk;
  ConceptId u = start;
  while (seen_at[u] < 0) {
    seen_at[u] = static_cast<int>(walk.size());
    walk.push_back(u);
    for (ConceptId p : parents[u]) {
      if (!resolved[p]) {
        u = p;
        break;
      }
    }
  }
  return {walk.begin() + seen_at[u], walk.end()};
}

// Either the closure or, for a cyclic graph, the ids along one cycle.
struct ClosureOutcome {
  PairSet closure;
  std::vector<ConceptId> cycle;
};

ClosureOutcome compute_closure(std::size_t n_concepts, std::span<const ConceptPair> edges) {
  std::vector<std::vector<ConceptId>> parents(n_concepts);
  std::vector<std::vector<ConceptId>> children(n_concepts);
  std::vector<std::size_t> pending(n_concepts, 0);
  for (const auto& e : edges) {
    require(e.child < n_concepts && e.parent < n_concepts, "transitive_closure: id out of range");
    if (e.child == e.parent) return {{}, {e.child}};
    parents[e.child].push_back(e.parent);
    children[e.parent].push_back(e.child);
    ++pending[e.child];
  }

  // Roots first, so every node's parents have their ancestor sets ready.
  std::queue<ConceptId> ready;
  for (ConceptId u = 0; u < n_concepts; ++u) {
    if (pending[u] == 0) ready.push(u);
  }
  std::vector<std::vector<ConceptId>> ancestors(n_concepts);
  std::vector<bool> resolved(n_concepts, false);
  std::size_t n_resolved = 0;
  std::vector<ConceptId> scratch;
  while (!ready.empty()) {
    const ConceptId u = ready.front();
    ready.pop();
    resolved[u] = true;
    ++n_resolved;
    auto& anc = ancestors[u];
    for (ConceptId p : parents[u]) {
      scratch.clear();
      const auto& pa = ancestors[p];
      std::set_union(anc.begin(), anc.end(), pa.begin(), pa.end(), std::back_inserter(scratch));
      auto it = std::lower_bound(scratch.begin(), scratch.end(), p);
      if (it == scratch.end() || *it != p) scratch.insert(it, p);
      anc.swap(scratch);
    }
    for (ConceptId c : children[u]) {
      if (--pending[c] == 0) ready.push(c);
    }
  }

  if (n_resolved != n_concepts) return {{}, find_cycle(parents, resolved)};

  std::vector<ConceptPair> pairs;
  std::size_t total = 0;
  for (const auto& a : ancestors) total += a.size();
  pairs.reserve(total);
  for (ConceptId u = 0; u < n_concepts; ++u) {
    for (ConceptId p : ancestors[u]) pairs.push_back({u, p});
  }
  return {PairSet(std::move(pairs)), {}};
}

template <typename Label>
std::string describe_cycle(const std::vector<ConceptId>& cycle, Label label) {
  std::string text = "cycle:";
  for (ConceptId id : cycle) text += " " + label(id) + " ->";
  return text + " " + label(cycle.front());
}

}  // namespace

PairSet transitive_closure(std::size_t n_concepts, std::span<const ConceptPair> edges) {
  auto outcome = compute_closure(n_concepts, edges);
  if (!outcome.cycle.empty()) {
    throw CycleError(describe_cycle(outcome.cycle, [](ConceptId id) { return std::to_string(id); }));
  }
  return std::move(outcome.closure);
}

struct Taxonomy::ClosureCache {
  std::once_flag once;
  PairSet closure;
};

Taxonomy Taxonomy::build(std::span<const NamedEdge> edges) {
  require(!edges.empty(), "taxonomy build: edge list is empty");

  std::vector<std::string> names;
  names.reserve(edges.size() * 2);
  for (const auto& [child, parent] : edges) {
    names.push_back(child);
    names.push_back(parent);
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());

  Taxonomy t;
  t.concepts_ = std::move(names);
  std::vector<ConceptPair> direct;
  direct.reserve(edges.size());
  for (const auto& [child, parent] : edges) {
    direct.push_back({*t.find(child), *t.find(parent)});
  }
  std::sort(direct.begin(), direct.end());
  direct.erase(std::unique(direct.begin(), direct.end()), direct.end());
  t.direct_edges_ = std::move(direct);
  t.cache_ = std::make_shared<ClosureCache>();

  // Cycle check up front; the result doubles as the closure cache.
  auto outcome = compute_closure(t.size(), t.direct_edges_);
  if (!outcome.cycle.empty()) {
    throw CycleError(
        describe_cycle(outcome.cycle, [&t](ConceptId id) { return t.concepts_[id]; }));
  }
  std::call_once(t.cache_->once, [&] { t.cache_->closure = std::move(outcome.closure); });
  return t;
}

std::optional<ConceptId> Taxonomy::find(std::string_view name) const {
  const auto it = std::lower_bound(concepts_.begin(), concepts_.end(), name);
  if (it == concepts_.end() || *it != name) return std::nullopt;
  return static_cast<ConceptId>(it - concepts_.begin());
}

const PairSet& Taxonomy::closure() const {
  std::call_once(cache_->once,
                 [this] { cache_->closure = transitive_closure(size(), direct_edges_); });
  return cache_->closure;
}

EdgeSplit split(const PairSet& closure, std::size_t n_dev, std::size_t n_test,
                std::uint64_t seed) {
  if (n_dev + n_test > 0 && n_dev + n_test >= closure.size()) {
    throw ContractViolation(fmt::format("split: dev ({}) + test ({}) must be smaller than the "
                                        "closure ({} pairs)",
                                        n_dev, n_test, closure.size()));
  }
  Rng rng(seed);
  std::vector<std::size_t> order(closure.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Partial Fisher-Yates: the first n_test + n_dev slots are a uniform sample.
  const std::size_t take = n_dev + n_test;
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng.choice(order.size() - i);
    std::swap(order[i], order[j]);
  }
  std::vector<ConceptPair> test;
  std::vector<ConceptPair> dev;
  for (std::size_t i = 0; i < n_test; ++i) test.push_back(closure[order[i]]);
  for (std::size_t i = n_test; i < take; ++i) dev.push_back(closure[order[i]]);

  EdgeSplit out;
  out.test = PairSet(std::move(test));
  out.dev = PairSet(std::move(dev));
  out.train = closure.minus(out.test).minus(out.dev);
  out.seed = seed;
  return out;
}

LabeledPair sample_negative(ConceptPair pair, std::size_t n_concepts, Rng& rng,
                            const PairSet* forbidden) {
  require(n_concepts >= 2, "sample_negative: need at least two concepts");
  constexpr int kMaxTries = 100;
  for (int attempt = 0; attempt < kMaxTries; ++attempt) {
    ConceptPair candidate = pair;
    const auto replacement = static_cast<ConceptId>(rng.choice(n_concepts));
    if (rng.bernoulli(0.5)) {
      candidate.child = replacement;
    } else {
      candidate.parent = replacement;
    }
    if (candidate == pair || candidate.child == candidate.parent) continue;
    if (forbidden != nullptr && forbidden->contains(candidate)) continue;
    return {candidate.child, candidate.parent, false};
  }
  throw SamplingError(fmt::format("sample_negative: no valid corruption of ({}, {}) after {} "
                                  "tries",
                                  pair.child, pair.parent, kMaxTries));
}

std::vector<LabeledPair> make_eval_pairs(const PairSet& positives, std::size_t n_concepts,
                                         const PairSet& full_closure, Rng& rng) {
  std::vector<LabeledPair> out;
  out.reserve(positives.size() * 2);
  for (const auto& p : positives) {
    out.push_back({p.child, p.parent, true});
    out.push_back(sample_negative(p, n_concepts, rng, &full_closure));
  }
  return out;
}

PairSet known_closure(std::size_t n_concepts, const PairSet& train, const PairSet& dev) {
  const PairSet known = train.merged(dev);
  return transitive_closure(n_concepts, known.pairs());
}

}  // namespace oe
