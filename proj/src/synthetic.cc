#include "oe/synthetic.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "oe/errors.h"

namespace oe {

namespace {

std::string padded(char prefix, std::size_t k, std::size_t n) {
  const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
  return fmt::format("{}{:0{}}", prefix, k, width);
}

Vector unit_gaussian(Rng& rng, std::size_t dim) {
  Vector v(dim);
  double n = 0.0;
  while (n < 1e-12) {
    for (double& x : v) x = rng.normal();
    n = norm(v);
  }
  for (double& x : v) x /= n;
  return v;
}

// Sorted random subset of {0..n-1} of size k.
std::vector<std::size_t> sample_positions(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.choice(n - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::vector<NamedEdge> gen_dag(std::size_t n_nodes, std::size_t n_levels, double edge_prob,
                               std::uint64_t seed) {
  require(n_nodes >= 2, "gen_dag: need at least two nodes");
  require(n_levels >= 2 && n_levels <= n_nodes, "gen_dag: need 2 <= levels <= nodes");
  require(edge_prob >= 0.0 && edge_prob <= 1.0, "gen_dag: edge_prob must be in [0, 1]");
  Rng rng(seed);

  std::vector<std::vector<std::size_t>> levels(n_levels);
  for (std::size_t k = 0; k < n_nodes; ++k) levels[k * n_levels / n_nodes].push_back(k);

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<bool> has_parent(n_nodes, false), has_child(n_nodes, false);
  for (std::size_t l = 0; l + 1 < n_levels; ++l) {
    for (const std::size_t child : levels[l + 1]) {
      for (const std::size_t parent : levels[l]) {
        if (rng.bernoulli(edge_prob)) {
          edges.emplace_back(child, parent);
          has_parent[child] = has_child[parent] = true;
        }
      }
    }
  }
  for (std::size_t l = 0; l + 1 < n_levels; ++l) {
    for (const std::size_t child : levels[l + 1]) {
      if (!has_parent[child]) {
        const std::size_t parent = levels[l][rng.choice(levels[l].size())];
        edges.emplace_back(child, parent);
        has_parent[child] = has_child[parent] = true;
      }
    }
    for (const std::size_t parent : levels[l]) {
      if (!has_child[parent]) {
        const std::size_t child = levels[l + 1][rng.choice(levels[l + 1].size())];
        edges.emplace_back(child, parent);
        has_parent[child] = has_child[parent] = true;
      }
    }
  }

  std::vector<NamedEdge> out;
  out.reserve(edges.size());
  for (const auto& [c, p] : edges) {
    out.emplace_back(padded('n', c, n_nodes), padded('n', p, n_nodes));
  }
  return out;
}

TwoLevelCorpus gen_two_level(std::size_t n_images, std::size_t captions_per_image,
                             std::size_t abstraction_levels, std::uint64_t seed,
                             const TwoLevelOptions& options) {
  require(n_images >= 1, "gen_two_level: need at least one image");
  require(captions_per_image >= 2, "gen_two_level: need at least two captions per image");
  require(abstraction_levels >= 1, "gen_two_level: need at least one abstraction level");
  require(options.min_len >= 1 && options.min_len <= options.max_len,
          "gen_two_level: need 1 <= min_len <= max_len");
  require(options.max_len <= options.vocab_size, "gen_two_level: max_len exceeds vocab_size");
  require(options.feat_dim >= 1, "gen_two_level: feat_dim must be positive");
  require(options.noise >= 0.0 && options.noise < 1.0, "gen_two_level: noise must be in [0, 1)");

  Rng rng(seed);
  TwoLevelCorpus out;
  out.vocab.reserve(options.vocab_size);
  for (std::size_t k = 0; k < options.vocab_size; ++k) {
    out.vocab.push_back(padded('w', k, options.vocab_size));
  }
  std::vector<Vector> token_vec;
  token_vec.reserve(options.vocab_size);
  for (std::size_t k = 0; k < options.vocab_size; ++k) {
    token_vec.push_back(unit_gaussian(rng, options.feat_dim));
  }

  out.features.data = Matrix(n_images, options.feat_dim);
  for (std::size_t i = 0; i < n_images; ++i) {
    const std::string image_id = padded('i', i, n_images);
    out.features.ids.push_back(image_id);

    const std::size_t len = options.min_len + rng.choice(options.max_len - options.min_len + 1);
    // Distinct tokens: a partial shuffle of the vocabulary, kept in draw order.
    std::vector<std::size_t> pool(options.vocab_size);
    for (std::size_t k = 0; k < pool.size(); ++k) pool[k] = k;
    for (std::size_t k = 0; k < len; ++k) std::swap(pool[k], pool[k + rng.choice(pool.size() - k)]);
    pool.resize(len);

    Vector signal(options.feat_dim, 0.0);
    for (const std::size_t t : pool) axpy(1.0, token_vec[t], signal);
    const double sn = norm(signal);
    const Vector noise = unit_gaussian(rng, options.feat_dim);
    auto row = out.features.data.row(i);
    for (std::size_t d = 0; d < options.feat_dim; ++d) {
      row[d] = (1.0 - options.noise) * signal[d] / sn + options.noise * noise[d];
    }

    for (std::size_t c = 0; c < captions_per_image; ++c) {
      const std::size_t level = c == 0 ? 0 : 1 + rng.choice(abstraction_levels);
      const std::size_t keep = std::max<std::size_t>(1, len >> level);
      CaptionText caption;
      caption.caption_id = fmt::format("{}-{}", image_id, c);
      caption.image_id = image_id;
      for (std::size_t k = 0; k < keep; ++k) caption.tokens.push_back(out.vocab[pool[k]]);
      out.captions.push_back(std::move(caption));
      out.caption_image.push_back(i);
      out.caption_level.push_back(level);
    }
  }
  return out;
}

std::vector<EntailText> gen_entailment(std::size_t n_pairs, std::size_t max_len,
                                       std::uint64_t seed, std::size_t vocab_size) {
  require(max_len >= 2, "gen_entailment: max_len must be at least 2");
  require(vocab_size > max_len, "gen_entailment: vocab_size must exceed max_len");
  Rng rng(seed);
  std::vector<std::string> vocab;
  for (std::size_t k = 0; k < vocab_size; ++k) vocab.push_back(padded('w', k, vocab_size));

  std::vector<EntailText> out;
  out.reserve(n_pairs);
  for (std::size_t k = 0; k < n_pairs; ++k) {
    const std::size_t len = 2 + rng.choice(max_len - 1);
    std::vector<std::size_t> premise(len);
    for (auto& t : premise) t = rng.choice(vocab_size);
    const std::size_t hyp_len = 1 + rng.choice(len - 1);
    std::vector<std::size_t> hypothesis;
    for (const std::size_t pos : sample_positions(rng, len, hyp_len)) {
      hypothesis.push_back(premise[pos]);
    }
    const bool positive = k % 2 == 0;
    if (!positive) {
      std::size_t alien = rng.choice(vocab_size);
      while (std::find(premise.begin(), premise.end(), alien) != premise.end()) {
        alien = rng.choice(vocab_size);
      }
      hypothesis[rng.choice(hypothesis.size())] = alien;
    }
    EntailText pair;
    pair.entailed = positive;
    for (const auto t : premise) pair.premise.push_back(vocab[t]);
    for (const auto t : hypothesis) pair.hypothesis.push_back(vocab[t]);
    out.push_back(std::move(pair));
  }
  return out;
}

}  // namespace oe
