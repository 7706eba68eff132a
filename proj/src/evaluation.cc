#include "oe/evaluation.h"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include "oe/errors.h"
#include "oe/log.h"

namespace oe {

ThresholdResult tune_threshold(std::span<const ScoredPair> dev) {
  std::size_t n_pos = 0;
  for (const auto& p : dev) {
    if (!std::isfinite(p.penalty)) throw NumericError("tune_threshold: non-finite penalty");
    n_pos += p.label ? 1 : 0;
  }
  const std::size_t n_neg = dev.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw ContractViolation("tune_threshold: dev set needs both labels");
  }

  std::vector<ScoredPair> sorted(dev.begin(), dev.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredPair& a, const ScoredPair& b) { return a.penalty < b.penalty; });

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Threshold -inf: everything negative.
  std::size_t correct = n_neg;
  std::size_t best_correct = correct;
  double best_threshold = -kInf;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double value = sorted[i].penalty;
    while (i < sorted.size() && sorted[i].penalty == value) {
      // This item flips from predicted-negative to predicted-positive.
      if (sorted[i].label) {
        ++correct;
      } else {
        --correct;
      }
      ++i;
    }
    const double threshold = i < sorted.size() ? 0.5 * (value + sorted[i].penalty) : kInf;
    if (correct > best_correct) {
      best_correct = correct;
      best_threshold = threshold;
    }
  }
  return {best_threshold, 100.0 * static_cast<double>(best_correct) /
                              static_cast<double>(sorted.size())};
}

double binary_accuracy(std::span<const ScoredPair> test, double threshold) {
  require(!test.empty(), "binary_accuracy: empty test set");
  std::size_t correct = 0;
  for (const auto& p : test) {
    if ((p.penalty <= threshold) == p.label) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(test.size());
}

RankResult summarize_ranks(std::vector<std::size_t> ranks) {
  RankResult r;
  r.ranks = std::move(ranks);
  if (r.ranks.empty()) return r;
  const double n = static_cast<double>(r.ranks.size());
  std::size_t at1 = 0, at5 = 0, at10 = 0;
  double total = 0.0;
  for (std::size_t rank : r.ranks) {
    at1 += rank <= 1;
    at5 += rank <= 5;
    at10 += rank <= 10;
    total += static_cast<double>(rank);
  }
  r.r1 = 100.0 * static_cast<double>(at1) / n;
  r.r5 = 100.0 * static_cast<double>(at5) / n;
  r.r10 = 100.0 * static_cast<double>(at10) / n;
  r.mean_rank = total / n;

  std::vector<std::size_t> sorted = r.ranks;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  r.median_rank = sorted.size() % 2 == 1
                      ? static_cast<double>(sorted[mid])
                      : 0.5 * static_cast<double>(sorted[mid - 1] + sorted[mid]);
  return r;
}

RankResult rank_targets(const Matrix& scores, std::span<const std::vector<std::size_t>> gt) {
  require(gt.size() == scores.rows(), "rank_targets: one ground-truth set per query");
  check_finite(scores.values(), "rank_targets scores");
  std::vector<std::size_t> ranks(scores.rows());
  for (std::size_t q = 0; q < scores.rows(); ++q) {
    if (gt[q].empty()) throw ContractViolation("rank_targets: empty ground-truth set");
    const auto row = scores.row(q);
    // Best-placed ground truth: highest score, lowest index among equals.
    std::size_t best = gt[q].front();
    for (std::size_t c : gt[q]) {
      require(c < row.size(), "rank_targets: ground-truth index out of range");
      if (row[c] > row[best] || (row[c] == row[best] && c < best)) best = c;
    }
    std::size_t ahead = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c] > row[best] || (row[c] == row[best] && c < best)) ++ahead;
    }
    ranks[q] = ahead + 1;
  }
  return summarize_ranks(std::move(ranks));
}

RankResult average_results(std::span<const RankResult> results) {
  require(!results.empty(), "average_results: nothing to average");
  RankResult avg;
  for (const auto& r : results) {
    avg.ranks.insert(avg.ranks.end(), r.ranks.begin(), r.ranks.end());
    avg.r1 += r.r1;
    avg.r5 += r.r5;
    avg.r10 += r.r10;
    avg.median_rank += r.median_rank;
    avg.mean_rank += r.mean_rank;
  }
  const double n = static_cast<double>(results.size());
  avg.r1 /= n;
  avg.r5 /= n;
  avg.r10 /= n;
  avg.median_rank /= n;
  avg.mean_rank /= n;
  return avg;
}

double caption_image_score(ScorerKind kind, Orientation orientation,
                           std::span<const double> caption, std::span<const double> image) {
  return orientation == Orientation::kCaptionsAbove ? score(kind, image, caption)
                                                    : score(kind, caption, image);
}

double RetrievalMetrics::recall_sum() const {
  return caption_retrieval.r1 + caption_retrieval.r5 + caption_retrieval.r10 +
         image_retrieval.r1 + image_retrieval.r5 + image_retrieval.r10;
}

Matrix caption_image_scores(const EmbeddedCorpus& corpus, ScorerKind kind,
                            Orientation orientation, int threads) {
  require(corpus.caption_image.size() == corpus.captions.size(),
          "retrieval: one image index per caption");
  Matrix scores(corpus.captions.size(), corpus.images.size());
  auto fill_rows = [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      for (std::size_t i = 0; i < corpus.images.size(); ++i) {
        scores(c, i) = caption_image_score(kind, orientation, corpus.captions[c], corpus.images[i]);
      }
    }
  };
  const std::size_t n = corpus.captions.size();
  if (threads <= 1 || n < 2) {
    fill_rows(0, n);
    return scores;
  }
  std::vector<std::jthread> workers;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    workers.emplace_back(fill_rows, begin, std::min(n, begin + chunk));
  }
  workers.clear();
  return scores;
}

RetrievalMetrics evaluate_retrieval(const EmbeddedCorpus& corpus, ScorerKind kind,
                                    Orientation orientation, int threads) {
  const Matrix by_caption = caption_image_scores(corpus, kind, orientation, threads);
  const std::size_t n_images = corpus.images.size();
  const std::size_t n_captions = corpus.captions.size();

  std::vector<std::vector<std::size_t>> image_gt(n_captions);
  std::vector<std::vector<std::size_t>> caption_gt(n_images);
  for (std::size_t c = 0; c < n_captions; ++c) {
    const std::size_t img = corpus.caption_image[c];
    require(img < n_images, "retrieval: caption refers to a missing image");
    image_gt[c] = {img};
    caption_gt[img].push_back(c);
  }
  Matrix by_image(n_images, n_captions);
  for (std::size_t c = 0; c < n_captions; ++c) {
    for (std::size_t i = 0; i < n_images; ++i) by_image(i, c) = by_caption(c, i);
  }

  RetrievalMetrics m;
  m.image_retrieval = rank_targets(by_caption, image_gt);
  m.caption_retrieval = rank_targets(by_image, caption_gt);
  return m;
}

RetrievalMetrics five_fold_1k(const EmbeddedCorpus& corpus, ScorerKind kind,
                              Orientation orientation, std::size_t fold_size, int threads) {
  constexpr std::size_t kFolds = 5;
  if (fold_size == 0 || corpus.images.size() != kFolds * fold_size) {
    throw ContractViolation(fmt::format("five_fold_1k: expected {} images, got {}",
                                        kFolds * fold_size, corpus.images.size()));
  }
  std::vector<RankResult> caption_results;
  std::vector<RankResult> image_results;
  for (std::size_t f = 0; f < kFolds; ++f) {
    const std::size_t lo = f * fold_size;
    EmbeddedCorpus fold;
    fold.images.assign(corpus.images.begin() + lo, corpus.images.begin() + lo + fold_size);
    for (std::size_t c = 0; c < corpus.captions.size(); ++c) {
      const std::size_t img = corpus.caption_image[c];
      if (img >= lo && img < lo + fold_size) {
        fold.captions.push_back(corpus.captions[c]);
        fold.caption_image.push_back(img - lo);
      }
    }
    auto m = evaluate_retrieval(fold, kind, orientation, threads);
    caption_results.push_back(std::move(m.caption_retrieval));
    image_results.push_back(std::move(m.image_retrieval));
  }
  return {average_results(caption_results), average_results(image_results)};
}

LengthContrast length_contrast(const EmbeddedCorpus& corpus,
                               std::span<const std::size_t> caption_lengths, ScorerKind kind,
                               Orientation orientation, std::size_t top_n) {
  const std::size_t n_captions = corpus.captions.size();
  require(caption_lengths.size() == n_captions, "length_contrast: one length per caption");

  std::vector<std::vector<std::size_t>> by_image(corpus.images.size());
  for (std::size_t c = 0; c < n_captions; ++c) by_image.at(corpus.caption_image[c]).push_back(c);

  struct Candidate {
    std::size_t diff;
    std::size_t image;
    std::size_t a;
    std::size_t b;
  };
  std::vector<Candidate> candidates;
  for (std::size_t img = 0; img < by_image.size(); ++img) {
    const auto& caps = by_image[img];
    for (std::size_t x = 0; x < caps.size(); ++x) {
      for (std::size_t y = x + 1; y < caps.size(); ++y) {
        const std::size_t la = caption_lengths[caps[x]];
        const std::size_t lb = caption_lengths[caps[y]];
        candidates.push_back({la > lb ? la - lb : lb - la, img, caps[x], caps[y]});
      }
    }
  }
  if (candidates.empty()) {
    throw ContractViolation("length_contrast: no image has two captions");
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& l, const Candidate& r) { return l.diff > r.diff; });
  if (candidates.size() < top_n) {
    log_warn("length_contrast: only {} co-referring pairs, using all", candidates.size());
  }
  candidates.resize(std::min(top_n, candidates.size()));

  const auto metrics = evaluate_retrieval(corpus, kind, orientation);
  const auto& image_ranks = metrics.image_retrieval.ranks;

  LengthContrast out;
  out.n_pairs = candidates.size();
  double short_total = 0.0, long_total = 0.0, cross_total = 0.0;
  for (const auto& cand : candidates) {
    std::size_t shorter = cand.a, longer = cand.b;
    if (caption_lengths[cand.b] < caption_lengths[cand.a]) std::swap(shorter, longer);
    short_total += static_cast<double>(image_ranks[shorter]);
    long_total += static_cast<double>(image_ranks[longer]);

    // Caption-to-caption retrieval: the shorter caption is the more abstract
    // (upper) item, candidates sit below it.
    const auto& query = corpus.captions[shorter];
    auto s = [&](std::size_t c) {
      return orientation == Orientation::kCaptionsAbove ? score(kind, corpus.captions[c], query)
                                                        : score(kind, query, corpus.captions[c]);
    };
    const double target = s(longer);
    std::size_t ahead = 0;
    for (std::size_t c = 0; c < n_captions; ++c) {
      if (c == shorter || c == longer) continue;
      const double v = s(c);
      if (v > target || (v == target && c < longer)) ++ahead;
    }
    cross_total += static_cast<double>(ahead + 1);
  }
  const double n = static_cast<double>(out.n_pairs);
  out.short_mean_rank = short_total / n;
  out.long_mean_rank = long_total / n;
  out.subset_mean_rank = (short_total + long_total) / (2.0 * n);
  out.cross_caption_mean_rank = cross_total / n;
  return out;
}

void MetricReport::add_rank_result(const std::string& prefix, const RankResult& r) {
  add(prefix + "r1", r.r1);
  add(prefix + "r5", r.r5);
  add(prefix + "r10", r.r10);
  add(prefix + "median_rank", r.median_rank);
  add(prefix + "mean_rank", r.mean_rank);
}

double MetricReport::get(const std::string& name) const {
  for (const auto& [key, value] : entries_) {
    if (key == name) return value;
  }
  throw ContractViolation("metric report: no entry named " + name);
}

std::string MetricReport::to_tsv() const {
  std::string out;
  for (const auto& [key, value] : entries_) out += fmt::format("{}\t{:.4f}\n", key, value);
  return out;
}

std::string MetricReport::to_table() const {
  std::size_t width = 6;
  for (const auto& [key, value] : entries_) width = std::max(width, key.size());
  std::string out = fmt::format("{:<{}}  {:>10}\n", "metric", width, "value");
  out += std::string(width + 12, '-') + "\n";
  for (const auto& [key, value] : entries_) {
    out += fmt::format("{:<{}}  {:>10.4f}\n", key, width, value);
  }
  return out;
}

void MetricReport::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write report " + path);
  f << to_tsv();
  if (!f) throw FormatError("failed writing report " + path);
}

}  // namespace oe
