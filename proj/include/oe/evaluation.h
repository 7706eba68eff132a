#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oe/numerics.h"
#include "oe/order.h"

namespace oe {

struct ScoredPair {
  double penalty = 0.0;
  bool label = false;
};

struct ThresholdResult {
  double threshold = 0.0;
  double accuracy = 0.0;  // percent
};

// Maximizes accuracy of the rule "positive iff penalty <= threshold" over
// -inf, +inf and the midpoints between consecutive distinct penalties. Ties
// go to the smallest threshold.
ThresholdResult tune_threshold(std::span<const ScoredPair> dev);

double binary_accuracy(std::span<const ScoredPair> test, double threshold);

struct RankResult {
  std::vector<std::size_t> ranks;  // 1-based, one per query
  double r1 = 0.0;
  double r5 = 0.0;
  double r10 = 0.0;
  double median_rank = 0.0;
  double mean_rank = 0.0;
};

RankResult summarize_ranks(std::vector<std::size_t> ranks);

// scores: queries x candidates, higher is better. Candidates are ordered by
// descending score with ties kept in index order; a query's rank is the
// 1-based position of its best-placed ground-truth candidate.
RankResult rank_targets(const Matrix& scores, std::span<const std::vector<std::size_t>> gt);

// Field-wise arithmetic mean; ranks are concatenated.
RankResult average_results(std::span<const RankResult> results);

// Which side of the caption/image pair sits lower in the order.
enum class Orientation {
  kCaptionsAbove,  // S(c, i) = score(image, caption)
  kImagesAbove,    // reversed ablation: S(c, i) = score(caption, image)
};

double caption_image_score(ScorerKind kind, Orientation orientation,
                           std::span<const double> caption, std::span<const double> image);

struct RetrievalMetrics {
  RankResult caption_retrieval;  // query image, retrieve any of its captions
  RankResult image_retrieval;    // query caption, retrieve its image

  // R@1 + R@5 + R@10 over both directions.
  double recall_sum() const;
};

// Embeddings of a retrieval set. caption_image[k] is the image row of caption k.
struct EmbeddedCorpus {
  std::vector<Vector> images;
  std::vector<Vector> captions;
  std::vector<std::size_t> caption_image;
};

// Caption x image score matrix; rows computed in parallel when threads > 1.
Matrix caption_image_scores(const EmbeddedCorpus& corpus, ScorerKind kind,
                            Orientation orientation, int threads = 1);

RetrievalMetrics evaluate_retrieval(const EmbeddedCorpus& corpus, ScorerKind kind,
                                    Orientation orientation, int threads = 1);

// Five contiguous folds of `fold_size` images each, metrics averaged.
RetrievalMetrics five_fold_1k(const EmbeddedCorpus& corpus, ScorerKind kind,
                              Orientation orientation, std::size_t fold_size = 1000,
                              int threads = 1);

struct LengthContrast {
  std::size_t n_pairs = 0;
  double short_mean_rank = 0.0;   // image retrieval, shorter caption as query
  double long_mean_rank = 0.0;    // image retrieval, longer caption as query
  double subset_mean_rank = 0.0;  // image retrieval over both captions of every pair
  double cross_caption_mean_rank = 0.0;  // rank of the longer caption, shorter as query
};

// Picks the top_n co-referring caption pairs by absolute length difference
// (ties by image index, then caption index) and reports mean ranks on them.
LengthContrast length_contrast(const EmbeddedCorpus& corpus,
                               std::span<const std::size_t> caption_lengths, ScorerKind kind,
                               Orientation orientation, std::size_t top_n);

// Ordered metric list, written as `metric<TAB>value` lines or a text table.
class MetricReport {
 public:
  void add(std::string name, double value) { entries_.emplace_back(std::move(name), value); }
  void add_rank_result(const std::string& prefix, const RankResult& r);

  const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }
  double get(const std::string& name) const;

  std::string to_tsv() const;
  std::string to_table() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

}  // namespace oe
