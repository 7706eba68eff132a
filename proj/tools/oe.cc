// Command-line front end: `oe <noun> <verb> [flags]`.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "oe/errors.h"
#include "oe/evaluation.h"
#include "oe/io.h"
#include "oe/log.h"
#include "oe/synthetic.h"
#include "oe/taxonomy.h"
#include "oe/training.h"

namespace {

using namespace oe;

// Training flags shared by the three `train` verbs; unset ones leave the
// config file (or built-in defaults) alone.
struct TrainFlags {
  std::string config;
  std::optional<std::size_t> dim;
  std::optional<double> margin;
  std::optional<double> lr;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scorer;
  bool reverse_order = false;
  std::string out;

  void add_to(CLI::App* cmd, bool with_reverse) {
    cmd->add_option("--config", config, "config file of key = value lines");
    cmd->add_option("--dim", dim, "embedding dimension");
    cmd->add_option("--margin", margin, "margin of the max-margin loss");
    cmd->add_option("--lr", lr, "Adam learning rate");
    cmd->add_option("--epochs", epochs, "maximum number of epochs");
    cmd->add_option("--batch", batch, "minibatch size");
    cmd->add_option("--seed", seed, "random seed (falls back to $OE_SEED, then the config)");
    cmd->add_option("--scorer", scorer, "order or cosine");
    if (with_reverse) {
      cmd->add_flag("--reverse-order", reverse_order, "place images above captions (ablation)");
    }
    cmd->add_option("--out", out, "checkpoint to write")->required();
  }

  TrainConfig resolve(Task task) const {
    TrainConfig c = config.empty() ? TrainConfig::defaults(task) : load_config(config, task);
    if (dim) c.dim = *dim;
    if (margin) c.margin = *margin;
    if (lr) c.lr = *lr;
    if (epochs) c.max_epochs = *epochs;
    if (batch) c.batch = *batch;
    if (seed) {
      c.seed = *seed;
    } else if (const char* env = std::getenv("OE_SEED"); env != nullptr && *env != '\0') {
      c.apply({{"seed", env}});
    }
    if (scorer) c.apply({{"scorer", *scorer}});
    if (reverse_order) c.reverse_order = true;
    c.validate();
    return c;
  }
};

void print_epoch(const EpochLog& log) {
  fmt::print("{}\t{:.6f}\t{:.4f}\n", log.epoch, log.train_loss, log.dev_metric);
  std::fflush(stdout);
}

void finish_training(const TrainResult& result, const std::string& out) {
  save_checkpoint(result.best, out);
  log_info("best epoch {} (dev metric {:.4f}) saved to {}", result.best_epoch, result.best_metric,
           out);
}

void emit_report(const MetricReport& report, const std::string& path) {
  fmt::print("{}", report.to_table());
  if (!path.empty()) report.write(path);
}

ScorerKind scorer_or(const std::optional<std::string>& flag, ScorerKind fallback) {
  if (!flag) return fallback;
  const auto s = parse_scorer(*flag);
  if (!s) throw ContractViolation("unknown scorer " + *flag);
  return *s;
}

Taxonomy taxonomy_from(const std::string& path) { return Taxonomy::build(read_edges(path)); }

// ----- taxonomy -----------------------------------------------------------

void add_taxonomy(CLI::App& app) {
  auto* noun = app.add_subcommand("taxonomy", "transitive closure, splits and the closure baseline");
  noun->require_subcommand(1);

  {
    auto* cmd = noun->add_subcommand("closure", "write the transitive closure of an edge list");
    static std::string edges, out;
    cmd->add_option("--edges", edges, "child<TAB>parent edge list")->required();
    cmd->add_option("--out", out, "closure pairs to write")->required();
    cmd->callback([] {
      const Taxonomy tax = taxonomy_from(edges);
      write_pairs(tax, tax.closure(), out);
      fmt::print("concepts\t{}\nedges\t{}\nclosure\t{}\n", tax.size(), tax.direct_edges().size(),
                 tax.closure().size());
    });
  }
  {
    auto* cmd = noun->add_subcommand("split", "sample dev/test pairs from a closure");
    static std::string closure, out, pairs_out;
    static std::size_t n_dev = 0, n_test = 0;
    static std::optional<std::uint64_t> seed;
    cmd->add_option("--closure", closure, "closure pair file")->required();
    cmd->add_option("--dev", n_dev, "number of dev positives")->required();
    cmd->add_option("--test", n_test, "number of test positives")->required();
    cmd->add_option("--seed", seed, "random seed (falls back to $OE_SEED, then 0)");
    cmd->add_option("--out", out, "split file to write")->required();
    cmd->add_option("--pairs-out", pairs_out,
                    "also write labeled dev/test pairs, one filtered negative per positive");
    cmd->callback([] {
      std::uint64_t s = 0;
      if (seed) {
        s = *seed;
      } else if (const char* env = std::getenv("OE_SEED"); env != nullptr && *env != '\0') {
        s = std::stoull(env);
      }
      const Taxonomy tax = taxonomy_from(closure);
      const EdgeSplit sp = split(tax.closure(), n_dev, n_test, s);
      write_split(tax, sp, out);
      if (!pairs_out.empty()) {
        Rng rng(s ^ 0x6e6567ULL);
        LabeledSplit labeled;
        labeled.dev = make_eval_pairs(sp.dev, tax.size(), tax.closure(), rng);
        labeled.test = make_eval_pairs(sp.test, tax.size(), tax.closure(), rng);
        write_labeled_pairs(tax, labeled, pairs_out);
      }
      fmt::print("train\t{}\ndev\t{}\ntest\t{}\n", sp.train.size(), sp.dev.size(), sp.test.size());
    });
  }
  {
    auto* cmd = noun->add_subcommand("baseline", "classify test pairs by membership in the known closure");
    static std::string closure, split_path, pairs, report;
    cmd->add_option("--closure", closure, "closure pair file")->required();
    cmd->add_option("--split", split_path, "split file")->required();
    cmd->add_option("--pairs", pairs, "labeled dev/test pair file")->required();
    cmd->add_option("--report", report, "metric report to write");
    cmd->callback([] {
      const Taxonomy tax = taxonomy_from(closure);
      const EdgeSplit sp = read_split(tax, split_path);
      const LabeledSplit labeled = read_labeled_pairs(tax, pairs);
      require(!labeled.test.empty(), "baseline: no test pairs");
      const PairSet known = known_closure(tax.size(), sp.train, sp.dev);
      std::size_t correct = 0;
      for (const auto& p : labeled.test) {
        correct += closure_baseline_classify(known, {p.child, p.parent}) == p.label;
      }
      MetricReport r;
      r.add("test_accuracy", 100.0 * static_cast<double>(correct) /
                                 static_cast<double>(labeled.test.size()));
      emit_report(r, report);
    });
  }
}

// ----- hypernym -----------------------------------------------------------

void add_hypernym(CLI::App& app) {
  auto* noun = app.add_subcommand("hypernym", "hypernym prediction with an embedding table");
  noun->require_subcommand(1);
  {
    auto* cmd = noun->add_subcommand("train", "train concept embeddings on the split's train pairs");
    static TrainFlags flags;
    static std::string closure, split_path, pairs;
    flags.add_to(cmd, false);
    cmd->add_option("--closure", closure, "closure pair file")->required();
    cmd->add_option("--split", split_path, "split file")->required();
    cmd->add_option("--pairs", pairs, "labeled dev/test pair file")->required();
    cmd->callback([] {
      const TrainConfig config = flags.resolve(Task::kHypernym);
      const Taxonomy tax = taxonomy_from(closure);
      HypernymData data;
      data.n_concepts = tax.size();
      data.train = read_split(tax, split_path).train;
      data.dev = read_labeled_pairs(tax, pairs).dev;
      require(!data.dev.empty(), "hypernym train: no dev pairs");
      log_info("{} concepts, {} train pairs, {} dev pairs", data.n_concepts, data.train.size(),
               data.dev.size());
      finish_training(train_hypernym(config, data, print_epoch), flags.out);
    });
  }
  {
    auto* cmd = noun->add_subcommand("eval", "tune a threshold on dev pairs, report test accuracy");
    static std::string model, closure, pairs, report;
    static std::optional<std::string> scorer;
    cmd->add_option("--model", model, "checkpoint")->required();
    cmd->add_option("--closure", closure, "closure pair file the model was trained on")->required();
    cmd->add_option("--pairs", pairs, "labeled dev/test pair file")->required();
    cmd->add_option("--scorer", scorer, "order or cosine (default: as trained)");
    cmd->add_option("--report", report, "metric report to write");
    cmd->callback([] {
      const Checkpoint ckpt = load_checkpoint(model);
      const HypernymModel m = HypernymModel::from_checkpoint(ckpt);
      const Taxonomy tax = taxonomy_from(closure);
      if (m.concepts.size() != tax.size()) {
        throw FormatError(fmt::format("model has {} concepts, closure file has {}",
                                      m.concepts.size(), tax.size()));
      }
      const ScorerKind kind = scorer_or(scorer, ckpt.config().scorer);
      const LabeledSplit labeled = read_labeled_pairs(tax, pairs);
      const ThresholdResult tuned = tune_threshold(m.score_pairs(labeled.dev, kind));
      const auto test = m.score_pairs(labeled.test, kind);
      MetricReport r;
      r.add("threshold", tuned.threshold);
      r.add("dev_accuracy", tuned.accuracy);
      r.add("test_accuracy", binary_accuracy(test, tuned.threshold));
      emit_report(r, report);
    });
  }
}

// ----- retrieval ----------------------------------------------------------

RetrievalSet retrieval_set(const std::string& features, const std::string& captions,
                           const Vocabulary& vocab) {
  LoadStats stats;
  RetrievalSet set = load_captions(captions, vocab, load_features(features), &stats);
  log_info("{}: {} captions over {} images", captions, set.captions.size(), set.images.size());
  return set;
}

void add_retrieval(CLI::App& app) {
  auto* noun = app.add_subcommand("retrieval", "caption/image retrieval");
  noun->require_subcommand(1);
  {
    auto* cmd = noun->add_subcommand("train", "train the image projection and caption encoder");
    static TrainFlags flags;
    static std::string features, dev_features, train_captions, dev_captions, vocab;
    flags.add_to(cmd, true);
    cmd->add_option("--features", features, "OEF1 image features")->required();
    cmd->add_option("--dev-features", dev_features, "dev image features (default: --features)");
    cmd->add_option("--train-captions", train_captions, "JSONL training captions")->required();
    cmd->add_option("--dev-captions", dev_captions, "JSONL dev captions")->required();
    cmd->add_option("--vocab", vocab, "vocabulary file")->required();
    cmd->callback([] {
      const TrainConfig config = flags.resolve(Task::kRetrieval);
      const Vocabulary v = load_vocab(vocab);
      const RetrievalSet train = retrieval_set(features, train_captions, v);
      const RetrievalSet dev =
          retrieval_set(dev_features.empty() ? features : dev_features, dev_captions, v);
      finish_training(train_retrieval(config, train, dev, v.size(), print_epoch), flags.out);
    });
  }
  {
    auto* cmd = noun->add_subcommand("eval", "recall@K and rank statistics in both directions");
    static std::string model, features, captions, vocab, report;
    static std::optional<std::string> scorer;
    static bool five_fold = false;
    static std::size_t fold_size = 1000, contrast = 0;
    static int threads = 1;
    cmd->add_option("--model", model, "checkpoint")->required();
    cmd->add_option("--features", features, "OEF1 image features")->required();
    cmd->add_option("--captions", captions, "JSONL captions")->required();
    cmd->add_option("--vocab", vocab, "vocabulary file")->required();
    cmd->add_option("--scorer", scorer, "order or cosine (default: as trained)");
    cmd->add_flag("--five-fold", five_fold, "average over five folds of --fold-size images");
    cmd->add_option("--fold-size", fold_size, "images per fold for --five-fold");
    cmd->add_option("--length-contrast", contrast,
                    "also report mean ranks on the N caption pairs with the largest length gap");
    cmd->add_option("--threads", threads, "threads for scoring")->check(CLI::PositiveNumber);
    cmd->add_option("--report", report, "metric report to write");
    cmd->callback([] {
      const Checkpoint ckpt = load_checkpoint(model);
      const RetrievalModel m = RetrievalModel::from_checkpoint(ckpt);
      const TrainConfig config = ckpt.config();
      const ScorerKind kind = scorer_or(scorer, config.scorer);
      const Orientation orient =
          config.reverse_order ? Orientation::kImagesAbove : Orientation::kCaptionsAbove;
      const Vocabulary v = load_vocab(vocab);
      const RetrievalSet set = retrieval_set(features, captions, v);
      const EmbeddedCorpus corpus = embed_corpus(m, set);
      const RetrievalMetrics metrics = five_fold
                                           ? five_fold_1k(corpus, kind, orient, fold_size, threads)
                                           : evaluate_retrieval(corpus, kind, orient, threads);
      MetricReport r;
      r.add_rank_result("caption_", metrics.caption_retrieval);
      r.add_rank_result("image_", metrics.image_retrieval);
      r.add("recall_sum", metrics.recall_sum());
      if (contrast > 0) {
        std::vector<std::size_t> lengths;
        for (const auto& c : set.captions) lengths.push_back(c.size());
        const LengthContrast lc = length_contrast(corpus, lengths, kind, orient, contrast);
        r.add("contrast_pairs", static_cast<double>(lc.n_pairs));
        r.add("contrast_short_mean_rank", lc.short_mean_rank);
        r.add("contrast_long_mean_rank", lc.long_mean_rank);
        r.add("contrast_subset_mean_rank", lc.subset_mean_rank);
        r.add("contrast_cross_caption_mean_rank", lc.cross_caption_mean_rank);
      }
      emit_report(r, report);
    });
  }
}

// ----- entail -------------------------------------------------------------

void add_entail(CLI::App& app) {
  auto* noun = app.add_subcommand("entail", "two-class textual entailment");
  noun->require_subcommand(1);
  {
    auto* cmd = noun->add_subcommand("train", "train the sentence encoder");
    static TrainFlags flags;
    static std::string train_path, dev_path, vocab;
    flags.add_to(cmd, false);
    cmd->add_option("--train", train_path, "label<TAB>premise<TAB>hypothesis file")->required();
    cmd->add_option("--dev", dev_path, "dev pairs")->required();
    cmd->add_option("--vocab", vocab, "vocabulary file")->required();
    cmd->callback([] {
      const TrainConfig config = flags.resolve(Task::kEntailment);
      const Vocabulary v = load_vocab(vocab);
      const auto train = load_entail(train_path, v);
      const auto dev = load_entail(dev_path, v);
      log_info("{} train pairs, {} dev pairs", train.size(), dev.size());
      finish_training(train_entailment(config, train, dev, v.size(), print_epoch), flags.out);
    });
  }
  {
    auto* cmd = noun->add_subcommand("eval", "tune a threshold on dev, report test accuracy");
    static std::string model, dev_path, test_path, vocab, report;
    static std::optional<std::string> scorer;
    cmd->add_option("--model", model, "checkpoint")->required();
    cmd->add_option("--dev", dev_path, "dev pairs")->required();
    cmd->add_option("--test", test_path, "test pairs")->required();
    cmd->add_option("--vocab", vocab, "vocabulary file")->required();
    cmd->add_option("--scorer", scorer, "order or cosine (default: as trained)");
    cmd->add_option("--report", report, "metric report to write");
    cmd->callback([] {
      const Checkpoint ckpt = load_checkpoint(model);
      const EntailmentModel m = EntailmentModel::from_checkpoint(ckpt);
      const ScorerKind kind = scorer_or(scorer, ckpt.config().scorer);
      const Vocabulary v = load_vocab(vocab);
      const auto dev = load_entail(dev_path, v);
      const auto test = load_entail(test_path, v);
      const ThresholdResult tuned = tune_threshold(score_entailment(m, dev, kind));
      MetricReport r;
      r.add("threshold", tuned.threshold);
      r.add("dev_accuracy", tuned.accuracy);
      r.add("test_accuracy", binary_accuracy(score_entailment(m, test, kind), tuned.threshold));
      emit_report(r, report);
    });
  }
}

// ----- algebra ------------------------------------------------------------

struct Neighbor {
  std::string name;
  double penalty;
};

std::vector<Neighbor> nearest(const std::vector<std::string>& names, const std::vector<Vector>& items,
                              const Vector& target, bool items_below, std::size_t k) {
  std::vector<Neighbor> all;
  all.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double e = items_below ? penalty(items[i], target) : penalty(target, items[i]);
    all.push_back({names[i], e});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Neighbor& a, const Neighbor& b) { return a.penalty < b.penalty; });
  all.resize(std::min(k, all.size()));
  return all;
}

void add_algebra(CLI::App& app) {
  auto* noun = app.add_subcommand("algebra", "combine embeddings with the lattice operations");
  noun->require_subcommand(1);
  static std::string model, edges, vocab;
  static std::vector<std::string> inputs;
  static std::size_t top_k = 5;

  auto run = [](bool is_join) {
    const Checkpoint ckpt = load_checkpoint(model);
    std::vector<std::string> names;
    std::vector<Vector> items;
    std::vector<Vector> picked;
    auto pick = [&](const std::string& input, auto&& index_of) {
      const std::size_t k = index_of(input);
      picked.push_back(items[k]);
    };

    switch (ckpt.task()) {
      case Task::kHypernym: {
        if (edges.empty()) throw ContractViolation("algebra: hypernym models need --edges");
        const HypernymModel m = HypernymModel::from_checkpoint(ckpt);
        const Taxonomy tax = taxonomy_from(edges);
        if (m.concepts.size() != tax.size()) {
          throw FormatError("algebra: model and edge file disagree on the concept count");
        }
        names = tax.concepts();
        for (std::size_t k = 0; k < names.size(); ++k) items.push_back(m.concepts.lookup(k));
        for (const auto& in : inputs) {
          pick(in, [&](const std::string& s) {
            const auto id = tax.find(s);
            if (!id) throw FormatError("algebra: unknown concept " + s);
            return static_cast<std::size_t>(*id);
          });
        }
        break;
      }
      case Task::kRetrieval:
      case Task::kEntailment: {
        if (vocab.empty()) throw ContractViolation("algebra: sentence models need --vocab");
        const Vocabulary v = load_vocab(vocab);
        const GruEncoder enc = ckpt.task() == Task::kRetrieval
                                   ? RetrievalModel::from_checkpoint(ckpt).caption
                                   : EntailmentModel::from_checkpoint(ckpt).sentence;
        names = v.tokens();
        for (std::size_t k = 0; k < v.size(); ++k) {
          const TokenId id = static_cast<TokenId>(k);
          items.push_back(enc.encode(std::span<const TokenId>(&id, 1)));
        }
        for (const auto& in : inputs) {
          pick(in, [&](const std::string& s) {
            if (!v.contains(s)) log_warn("algebra: unknown token '{}' mapped to <unk>", s);
            return static_cast<std::size_t>(v.id(s));
          });
        }
        break;
      }
    }

    Vector result = picked.front();
    for (std::size_t k = 1; k < picked.size(); ++k) {
      result = is_join ? join(result, picked[k]) : meet(result, picked[k]);
    }
    const double lo = *std::min_element(result.begin(), result.end());
    const double hi = *std::max_element(result.begin(), result.end());
    fmt::print("result\tdim={}\tnorm={:.6f}\tmin={:.6f}\tmax={:.6f}\n", result.size(), norm(result),
               lo, hi);
    for (const auto& n : nearest(names, items, result, true, top_k)) {
      fmt::print("below\t{}\t{:.6f}\n", n.name, n.penalty);
    }
    for (const auto& n : nearest(names, items, result, false, top_k)) {
      fmt::print("above\t{}\t{:.6f}\n", n.name, n.penalty);
    }
  };

  for (const bool is_join : {true, false}) {
    auto* cmd = noun->add_subcommand(
        is_join ? "join" : "meet",
        is_join ? "elementwise min (abstraction) of the inputs" : "elementwise max (composition) of the inputs");
    cmd->add_option("--model", model, "checkpoint")->required();
    cmd->add_option("--inputs", inputs, "concept names or tokens")->required()->expected(1, -1);
    cmd->add_option("--edges", edges, "edge or closure file (hypernym models)");
    cmd->add_option("--vocab", vocab, "vocabulary file (sentence models)");
    cmd->add_option("--top", top_k, "neighbors to list in each direction");
    cmd->callback([run, is_join] { run(is_join); });
  }
}

// ----- vocab / synth ------------------------------------------------------

void add_vocab(CLI::App& app) {
  auto* noun = app.add_subcommand("vocab", "vocabulary files");
  noun->require_subcommand(1);
  auto* cmd = noun->add_subcommand("build", "frequency-sorted vocabulary from captions or entailment pairs");
  static std::vector<std::string> captions, entail;
  static std::size_t min_count = 1;
  static std::string out;
  cmd->add_option("--captions", captions, "JSONL caption files");
  cmd->add_option("--entail", entail, "entailment pair files");
  cmd->add_option("--min-count", min_count, "drop tokens seen fewer times");
  cmd->add_option("--out", out, "vocabulary file to write")->required();
  cmd->callback([] {
    require(!captions.empty() || !entail.empty(), "vocab build: give --captions or --entail");
    std::vector<std::vector<std::string>> sentences;
    for (const auto& path : captions) {
      for (auto& c : read_caption_texts(path)) sentences.push_back(std::move(c.tokens));
    }
    for (const auto& path : entail) {
      for (auto& p : read_entail_texts(path)) {
        sentences.push_back(std::move(p.premise));
        sentences.push_back(std::move(p.hypothesis));
      }
    }
    const Vocabulary v = Vocabulary::build(sentences, min_count);
    save_vocab(v, out);
    fmt::print("tokens\t{}\n", v.size());
  });
}

void add_synth(CLI::App& app) {
  auto* noun = app.add_subcommand("synth", "synthetic datasets");
  noun->require_subcommand(1);
  {
    auto* cmd = noun->add_subcommand("dag", "layered random DAG as an edge list");
    static std::size_t nodes = 50, levels = 4;
    static double prob = 0.1;
    static std::uint64_t seed = 0;
    static std::string out;
    cmd->add_option("--nodes", nodes, "node count");
    cmd->add_option("--levels", levels, "level count");
    cmd->add_option("--edge-prob", prob, "edge probability between adjacent levels");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--out", out, "edge file to write")->required();
    cmd->callback([] {
      const auto edges = gen_dag(nodes, levels, prob, seed);
      write_edges(edges, out);
      fmt::print("edges\t{}\n", edges.size());
    });
  }
  {
    auto* cmd = noun->add_subcommand("two-level", "images with long captions and their prefixes");
    static std::size_t images = 500, per_image = 2, levels = 2;
    static std::uint64_t seed = 0;
    static TwoLevelOptions options;
    static std::string features, captions, vocab;
    cmd->add_option("--images", images, "image count");
    cmd->add_option("--captions-per-image", per_image, "captions per image (>= 2)");
    cmd->add_option("--levels", levels, "abstraction levels for prefix captions");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--vocab-size", options.vocab_size, "synthetic vocabulary size");
    cmd->add_option("--feat-dim", options.feat_dim, "feature dimension");
    cmd->add_option("--min-len", options.min_len, "shortest long caption");
    cmd->add_option("--max-len", options.max_len, "longest long caption");
    cmd->add_option("--noise", options.noise, "weight of the random feature component, in [0, 1)");
    cmd->add_option("--features-out", features, "OEF1 feature file to write")->required();
    cmd->add_option("--captions-out", captions, "JSONL caption file to write")->required();
    cmd->add_option("--vocab-out", vocab, "vocabulary file to write");
    cmd->callback([] {
      const TwoLevelCorpus corpus = gen_two_level(images, per_image, levels, seed, options);
      save_features(corpus.features, features);
      write_captions(corpus.captions, captions);
      if (!vocab.empty()) {
        std::vector<std::string> tokens{std::string(Vocabulary::kUnkToken)};
        tokens.insert(tokens.end(), corpus.vocab.begin(), corpus.vocab.end());
        save_vocab(Vocabulary(std::move(tokens)), vocab);
      }
      fmt::print("images\t{}\ncaptions\t{}\n", corpus.features.ids.size(), corpus.captions.size());
    });
  }
  {
    auto* cmd = noun->add_subcommand("entail", "entailment by token deletion");
    static std::size_t pairs = 1000, max_len = 8, vocab_size = 100;
    static std::uint64_t seed = 0;
    static std::string out;
    cmd->add_option("--pairs", pairs, "pair count (alternating positive, negative)");
    cmd->add_option("--max-len", max_len, "longest premise");
    cmd->add_option("--vocab-size", vocab_size, "synthetic vocabulary size");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--out", out, "pair file to write")->required();
    cmd->callback([] {
      write_entail(gen_entailment(pairs, max_len, seed, vocab_size), out);
      fmt::print("pairs\t{}\n", pairs);
    });
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Order embeddings: hypernyms, caption/image retrieval and entailment"};
  app.require_subcommand(1);
  add_taxonomy(app);
  add_hypernym(app);
  add_retrieval(app);
  add_entail(app);
  add_algebra(app);
  add_vocab(app);
  add_synth(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const oe::Error& e) {
    fmt::print(stderr, "oe: {}\n", e.what());
    return oe::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    fmt::print(stderr, "oe: {}\n", e.what());
    return 2;
  }
  return 0;
}
