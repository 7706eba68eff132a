#pragma once

// Desk-scale surrogate datasets. Every generator is a pure function of its
// arguments, seed included.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "oe/io.h"
#include "oe/taxonomy.h"

namespace oe {

// Layered random DAG. Node k sits on level k * n_levels / n_nodes; every
// pair of nodes on adjacent levels is an edge (deeper node is the child) with
// probability edge_prob. Nodes left without a parent (below the top level) or
// a child (above the bottom level) get one uniformly at random, so all nodes
// appear in the edge list.
std::vector<NamedEdge> gen_dag(std::size_t n_nodes, std::size_t n_levels, double edge_prob,
                               std::uint64_t seed);

struct TwoLevelOptions {
  std::size_t vocab_size = 200;
  std::size_t feat_dim = 64;
  std::size_t min_len = 6;
  std::size_t max_len = 12;
  double noise = 0.1;  // weight of the random part of each feature vector, in [0, 1)
};

struct TwoLevelCorpus {
  std::vector<std::string> vocab;      // exactly vocab_size tokens
  FeatureMatrix features;              // one row per image
  std::vector<CaptionText> captions;   // image-major, long caption first
  std::vector<std::size_t> caption_image;
  std::vector<std::size_t> caption_level;  // 0 for the long caption
};

// Each image gets one long caption of distinct random tokens and
// captions_per_image - 1 prefixes of it; a prefix at level l (drawn from
// 1..abstraction_levels) keeps max(1, long_length >> l) tokens. Features are
// (1 - noise) * unit(sum of the long caption's token vectors) + noise * a unit
// random vector, where every token has a fixed random unit vector.
TwoLevelCorpus gen_two_level(std::size_t n_images, std::size_t captions_per_image,
                             std::size_t abstraction_levels, std::uint64_t seed,
                             const TwoLevelOptions& options = {});

// Pair k is positive for even k: the hypothesis is an order-preserving
// subsequence of the premise. Odd k is negative: the same construction with
// one hypothesis token replaced by a token absent from the premise.
std::vector<EntailText> gen_entailment(std::size_t n_pairs, std::size_t max_len,
                                       std::uint64_t seed, std::size_t vocab_size = 100);

}  // namespace oe
