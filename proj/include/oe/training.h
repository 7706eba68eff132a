#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oe/encoders.h"
#include "oe/evaluation.h"
#include "oe/numerics.h"
#include "oe/order.h"
#include "oe/taxonomy.h"

namespace oe {

enum class Task { kHypernym, kRetrieval, kEntailment };

std::string_view to_string(Task task);
std::optional<Task> parse_task(std::string_view text);

struct TrainConfig {
  Task task = Task::kHypernym;
  std::size_t dim = 50;
  std::size_t word_dim = 300;  // GRU tasks only
  double margin = 1.0;
  double lr = 0.01;
  std::size_t batch = 500;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::uint64_t seed = 1234;
  bool normalize = false;
  ScorerKind scorer = ScorerKind::kOrder;
  bool reverse_order = false;  // retrieval only: images above captions
  double grad_clip = 0.0;      // 0 disables clipping

  // Published settings for each task.
  static TrainConfig defaults(Task task);

  // Throws ContractViolation on out-of-range fields.
  void validate() const;

  // `key = value` representation; keys are the field names above.
  std::map<std::string, std::string> to_map() const;
  // Applies the given keys on top of *this; unknown keys are errors.
  void apply(const std::map<std::string, std::string>& values);
};

// Parses `key = value` lines; '#' starts a comment.
std::map<std::string, std::string> parse_config_text(std::string_view text);
TrainConfig load_config(const std::string& path, std::optional<Task> expected_task = {});

// A named-tensor snapshot of a model plus the config it was trained with.
struct Checkpoint {
  std::map<std::string, std::string> meta;  // config fields, epoch, dev_metric
  std::map<std::string, Matrix> tensors;

  Task task() const;
  TrainConfig config() const;
  std::size_t epoch() const;
  double dev_metric() const;
};

// ----- Losses -------------------------------------------------------------

struct EmbeddedPair {
  std::span<const double> lower;
  std::span<const double> upper;
};

struct PairLoss {
  double loss = 0.0;
  std::vector<PairGrad> positive;
  std::vector<PairGrad> negative;
};

// sum_pos E(lower, upper) + sum_neg max(0, margin - E(lower, upper)), with E
// the order penalty (or 1 - cosine for the symmetric ablation).
PairLoss hypernym_loss(std::span<const EmbeddedPair> positives,
                       std::span<const EmbeddedPair> negatives, double margin,
                       ScorerKind scorer = ScorerKind::kOrder);

// Same form as hypernym_loss with the premise lower and the hypothesis upper.
PairLoss entailment_loss(std::span<const EmbeddedPair> positives,
                         std::span<const EmbeddedPair> negatives, double margin,
                         ScorerKind scorer = ScorerKind::kOrder);

struct RankingLoss {
  double loss = 0.0;
  std::vector<Vector> captions;  // gradient per caption embedding
  std::vector<Vector> images;    // gradient per image embedding
};

// Pairwise ranking loss with contrastives drawn from the batch: for every
// ground-truth pair i and every j != i,
//   max(0, margin - S(c_i, i_i) + S(c_j, i_i)) + max(0, margin - S(c_i, i_i) + S(c_i, i_j)).
// When `groups` is given, j is skipped if groups[j] == groups[i] (the two
// captions describe the same image).
RankingLoss ranking_loss(std::span<const Vector> captions, std::span<const Vector> images,
                         double margin, ScorerKind scorer,
                         Orientation orientation = Orientation::kCaptionsAbove,
                         std::span<const std::size_t> groups = {});

// ----- Models -------------------------------------------------------------

struct HypernymModel {
  EmbeddingTable concepts;

  static HypernymModel init(std::size_t n_concepts, const TrainConfig& config);
  static HypernymModel from_checkpoint(const Checkpoint& ckpt);
  Checkpoint to_checkpoint(const TrainConfig& config, std::size_t epoch, double metric) const;

  // violation(scorer, f(child), f(parent)) per pair.
  std::vector<ScoredPair> score_pairs(std::span<const LabeledPair> pairs,
                                      ScorerKind scorer = ScorerKind::kOrder) const;

  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    f(std::string("concepts"), self.concepts.weights);
  }
};

struct RetrievalModel {
  LinearProjection image;
  GruEncoder caption;

  static RetrievalModel init(std::size_t vocab_size, std::size_t feat_dim,
                             const TrainConfig& config);
  static RetrievalModel from_checkpoint(const Checkpoint& ckpt);
  Checkpoint to_checkpoint(const TrainConfig& config, std::size_t epoch, double metric) const;

  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    f(std::string("image.weights"), self.image.weights);
    GruEncoder::visit(self.caption, "caption.", f);
  }
};

struct EntailmentModel {
  GruEncoder sentence;

  static EntailmentModel init(std::size_t vocab_size, const TrainConfig& config);
  static EntailmentModel from_checkpoint(const Checkpoint& ckpt);
  Checkpoint to_checkpoint(const TrainConfig& config, std::size_t epoch, double metric) const;

  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    GruEncoder::visit(self.sentence, "sentence.", f);
  }
};

// ----- Datasets in index form --------------------------------------------

struct HypernymData {
  std::size_t n_concepts = 0;
  PairSet train;
  std::vector<LabeledPair> dev;
};

struct RetrievalSet {
  std::vector<Vector> images;                // feature vectors
  std::vector<TokenSeq> captions;
  std::vector<std::size_t> caption_image;    // image row per caption
};

struct EntailExample {
  TokenSeq premise;
  TokenSeq hypothesis;
  bool entailed = false;
};

EmbeddedCorpus embed_corpus(const RetrievalModel& model, const RetrievalSet& set);
std::vector<ScoredPair> score_entailment(const EntailmentModel& model,
                                         std::span<const EntailExample> pairs,
                                         ScorerKind scorer = ScorerKind::kOrder);

// ----- Training loop ------------------------------------------------------

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_metric = 0.0;
};

struct EpochHooks {
  // Runs one epoch (1-based) and returns the mean training loss.
  std::function<double(std::size_t epoch)> train_epoch;
  // Dev metric, higher is better.
  std::function<double()> evaluate;
  std::function<Checkpoint(std::size_t epoch, double metric)> snapshot;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  Checkpoint best;
  std::size_t best_epoch = 0;
  double best_metric = 0.0;
  std::vector<EpochLog> history;
};

// Early stopping: keeps the best-metric snapshot and stops once `patience`
// epochs pass without improvement, or at max_epochs.
TrainResult run_epochs(const TrainConfig& config, const EpochHooks& hooks);

using EpochCallback = std::function<void(const EpochLog&)>;

// Dev metric is tuned accuracy on data.dev. With no dev pairs the model is
// fit to the training pairs alone and scored by minus the largest training
// violation.
TrainResult train_hypernym(const TrainConfig& config, const HypernymData& data,
                           const EpochCallback& on_epoch = {});
TrainResult train_retrieval(const TrainConfig& config, const RetrievalSet& train,
                            const RetrievalSet& dev, std::size_t vocab_size,
                            const EpochCallback& on_epoch = {});
TrainResult train_entailment(const TrainConfig& config, std::span<const EntailExample> train,
                             std::span<const EntailExample> dev, std::size_t vocab_size,
                             const EpochCallback& on_epoch = {});

// One Adam state per named tensor.
class Optimizer {
 public:
  explicit Optimizer(AdamConfig config, double grad_clip = 0.0)
      : config_(config), grad_clip_(grad_clip) {}

  void step(const std::string& name, Matrix& param, Matrix& grad);

  template <typename Model>
  void step_model(Model& model, Model& grads) {
    std::vector<Matrix*> grad_tensors;
    Model::visit(grads, [&](const std::string&, Matrix& g) { grad_tensors.push_back(&g); });
    std::size_t k = 0;
    Model::visit(model, [&](const std::string& name, Matrix& p) { step(name, p, *grad_tensors[k++]); });
  }

 private:
  AdamConfig config_;
  double grad_clip_;
  std::map<std::string, AdamState> states_;
};

}  // namespace oe
