// Acceptance checks, one line per criterion. Usage: acceptance [N ...]
// (no arguments runs every criterion). Exit status is 1 if any selected
// criterion fails, 77 if every selected criterion was skipped, else 0.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oe/evaluation.h"
#include "oe/io.h"
#include "oe/numerics.h"
#include "oe/order.h"
#include "oe/synthetic.h"
#include "oe/taxonomy.h"
#include "oe/training.h"
#include "support/gradcheck.h"
#include "support/oracles.h"
#include "support/properties.h"

using namespace oe;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kFail;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Outcome verdict(bool ok, std::string detail) {
  return {ok ? Status::kPass : Status::kFail, std::move(detail)};
}

// ----- 1 ------------------------------------------------------------------

Outcome order_axioms() {
  const auto t0 = Clock::now();
  const props::AxiomReport r = props::check_order_axioms(100000, 2024);
  const double s = seconds_since(t0);
  std::string detail = fmt::format("{} trials, {} failures, {:.1f}s (limit 10s)", r.trials,
                                   r.failures, s);
  if (r.failures > 0) detail += "; first: " + r.first_failure;
  return verdict(r.failures == 0 && s < 10.0, detail);
}

// ----- 2 ------------------------------------------------------------------

Outcome gradients() {
  const auto t0 = Clock::now();
  Rng rng(77);
  std::map<std::string, double> worst;
  auto note = [&](const std::string& name, double err) {
    worst[name] = std::max(worst[name], err);
  };
  for (int rep = 0; rep < 5; ++rep) {
    for (std::size_t dim : {1, 3, 8}) note("penalty", gradcheck::penalty_grads_error(rng, dim));
    for (auto scorer : {ScorerKind::kOrder, ScorerKind::kCosine}) {
      for (std::size_t batch : {1, 4}) {
        note("hypernym_loss", gradcheck::pair_loss_error(rng, batch, 8, scorer, false));
        note("entailment_loss", gradcheck::pair_loss_error(rng, batch, 8, scorer, true));
        for (auto o : {Orientation::kCaptionsAbove, Orientation::kImagesAbove}) {
          note("ranking_loss", gradcheck::ranking_loss_error(rng, batch, 8, scorer, o, false));
          if (batch > 1) {
            note("ranking_loss_grouped",
                 gradcheck::ranking_loss_error(rng, batch, 8, scorer, o, true));
          }
        }
      }
    }
    note("lookup_abs", gradcheck::lookup_abs_error(rng, 6, 4));
    note("projection_abs", gradcheck::projection_error(rng, 4, 5, false));
    note("projection_abs_normalize", gradcheck::projection_error(rng, 4, 5, true));
    note("gru", gradcheck::gru_error(rng, 3, 4, false));
    note("gru_normalize", gradcheck::gru_error(rng, 3, 4, true));
  }
  const double s = seconds_since(t0);
  double max_err = 0.0;
  std::string worst_name;
  for (const auto& [name, err] : worst) {
    if (err >= max_err) {
      max_err = err;
      worst_name = name;
    }
  }
  return verdict(max_err < 1e-4 && s < 30.0,
                 fmt::format("{} checks, worst relative error {:.2e} ({}), {:.1f}s (limit 30s)",
                             worst.size(), max_err, worst_name, s));
}

// ----- 3 ------------------------------------------------------------------

Outcome oracles() {
  const auto t0 = Clock::now();
  Rng rng(303);
  std::size_t rank_bad = 0, thr_bad = 0, clo_bad = 0;

  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t q = 1 + rng.choice(20), c = 1 + rng.choice(20);
    Matrix s(q, c);
    for (double& v : s.values()) v = static_cast<double>(rng.choice(4));
    std::vector<std::vector<std::size_t>> gt(q);
    for (auto& g : gt) {
      const std::size_t n = 1 + rng.choice(std::min<std::size_t>(5, c));
      while (g.size() < n) {
        const std::size_t k = rng.choice(c);
        if (std::find(g.begin(), g.end(), k) == g.end()) g.push_back(k);
      }
    }
    rank_bad += rank_targets(s, gt).ranks != oracle::ranks(s, gt);
  }

  for (int trial = 0; trial < 500; ++trial) {
    // tune_threshold requires both labels to be present.
    std::vector<ScoredPair> pairs(2 + rng.choice(39));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      pairs[k].penalty = static_cast<double>(rng.choice(8)) * 0.25;
      pairs[k].label = k < 2 ? k == 0 : rng.bernoulli(0.5);
    }
    const ThresholdResult a = tune_threshold(pairs);
    const ThresholdResult b = oracle::threshold(pairs);
    thr_bad += a.threshold != b.threshold || a.accuracy != b.accuracy;
  }

  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.choice(49);
    std::vector<ConceptPair> edges;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (rng.bernoulli(0.08)) {
          edges.push_back({static_cast<ConceptId>(i), static_cast<ConceptId>(j)});
        }
      }
    }
    clo_bad += transitive_closure(n, edges) != oracle::closure(n, edges);
  }

  const double s = seconds_since(t0);
  return verdict(rank_bad + thr_bad + clo_bad == 0 && s < 60.0,
                 fmt::format("mismatches: ranks {}/500, thresholds {}/500, closures {}/200; "
                             "{:.1f}s (limit 60s)",
                             rank_bad, thr_bad, clo_bad, s));
}

// ----- 4 ------------------------------------------------------------------

Outcome wordnet() {
  const char* path = std::getenv("OE_WORDNET_EDGES");
  if (path == nullptr || *path == '\0') {
    return {Status::kSkip, "OE_WORDNET_EDGES not set; the toy taxonomy check (5) stands in"};
  }
  const auto t0 = Clock::now();
  const std::vector<NamedEdge> edges = read_edges(path);
  const Taxonomy tax = Taxonomy::build(edges);
  const PairSet& closure = tax.closure();
  const double closure_s = seconds_since(t0);

  const std::uint64_t seed = 1;
  const EdgeSplit sp = split(closure, 4000, 4000, seed);
  Rng rng(seed ^ 0x6e6567ULL);
  const auto dev = make_eval_pairs(sp.dev, tax.size(), closure, rng);
  const auto test = make_eval_pairs(sp.test, tax.size(), closure, rng);

  const PairSet known = known_closure(tax.size(), sp.train, sp.dev);
  std::size_t correct = 0;
  for (const auto& p : test) correct += closure_baseline_classify(known, {p.child, p.parent}) == p.label;
  const double baseline = 100.0 * static_cast<double>(correct) / static_cast<double>(test.size());

  TrainConfig config = TrainConfig::defaults(Task::kHypernym);
  config.seed = seed;
  HypernymData data{tax.size(), sp.train, dev};
  const TrainResult res = train_hypernym(config, data);
  const HypernymModel m = HypernymModel::from_checkpoint(res.best);
  const ThresholdResult tuned = tune_threshold(m.score_pairs(dev));
  const double acc = binary_accuracy(m.score_pairs(test), tuned.threshold);
  const double total_s = seconds_since(t0);

  const bool ok = closure.size() == 838073 && tax.size() == 82192 &&
                  std::abs(baseline - 88.2) <= 1.0 && std::abs(acc - 90.6) <= 1.5 &&
                  acc > baseline && closure_s < 60.0 && total_s < 3600.0;
  return verdict(ok, fmt::format("closure {} pairs over {} concepts (want 838073 / 82192), "
                                 "baseline {:.1f}% (want 88.2 +- 1.0), order {:.1f}% "
                                 "(want 90.6 +- 1.5), closure {:.0f}s, total {:.0f}s",
                                 closure.size(), tax.size(), baseline, acc, closure_s, total_s));
}

// ----- 5 ------------------------------------------------------------------

// A small hand-authored taxonomy with one shared child (bat).
const std::vector<NamedEdge> kToyTaxonomy = {
    {"animal", "entity"},     {"plant", "entity"},     {"artifact", "entity"},
    {"mammal", "animal"},     {"bird", "animal"},      {"fish", "animal"},
    {"dog", "mammal"},        {"cat", "mammal"},       {"bat", "mammal"},
    {"sparrow", "bird"},      {"penguin", "bird"},     {"salmon", "fish"},
    {"tree", "plant"},        {"flower", "plant"},     {"oak", "tree"},
    {"rose", "flower"},       {"tool", "artifact"},    {"hammer", "tool"},
    {"vehicle", "artifact"},  {"car", "vehicle"},      {"bicycle", "vehicle"},
    {"bat", "tool"},          {"poodle", "dog"},
};

Outcome toy_taxonomy() {
  const auto t0 = Clock::now();
  const Taxonomy tax = Taxonomy::build(kToyTaxonomy);
  const PairSet& closure = tax.closure();

  TrainConfig config = TrainConfig::defaults(Task::kHypernym);
  config.dim = 2;
  config.batch = closure.size();
  config.max_epochs = 3000;
  config.patience = 3000;
  config.seed = 5;
  HypernymData data{tax.size(), closure, {}};
  const TrainResult res = train_hypernym(config, data);
  const HypernymModel m = HypernymModel::from_checkpoint(res.best);

  double worst = 0.0;
  for (const auto& p : closure) {
    worst = std::max(worst, penalty(m.concepts.lookup(p.child), m.concepts.lookup(p.parent)));
  }
  std::size_t spurious = 0, non_edges = 0;
  for (ConceptId a = 0; a < tax.size(); ++a) {
    for (ConceptId b = 0; b < tax.size(); ++b) {
      if (a == b || closure.contains({a, b})) continue;
      ++non_edges;
      spurious += penalty(m.concepts.lookup(a), m.concepts.lookup(b)) < 1e-3;
    }
  }
  const double s = seconds_since(t0);
  return verdict(worst < 1e-3 && s < 60.0,
                 fmt::format("{} concepts, {} closure pairs, max train penalty {:.2e} (limit 1e-3), "
                             "spurious zero-penalty non-edges {}/{}, {:.1f}s (limit 60s)",
                             tax.size(), closure.size(), worst, spurious, non_edges, s));
}

// ----- 6, 7 ---------------------------------------------------------------

// Fixed synthetic retrieval setup: 3000 training images, then 500 dev and 500
// evaluation images, two captions each (a long caption and a token prefix).
struct RetrievalBench {
  Vocabulary vocab;
  RetrievalSet train, dev, eval;
  std::vector<std::size_t> eval_lengths;
};

RetrievalSet slice(const TwoLevelCorpus& c, const Vocabulary& v, std::size_t lo, std::size_t hi) {
  RetrievalSet s;
  for (std::size_t i = lo; i < hi; ++i) {
    const auto r = c.features.data.row(i);
    s.images.emplace_back(r.begin(), r.end());
  }
  for (std::size_t k = 0; k < c.captions.size(); ++k) {
    if (c.caption_image[k] < lo || c.caption_image[k] >= hi) continue;
    s.captions.push_back(v.encode(c.captions[k].tokens));
    s.caption_image.push_back(c.caption_image[k] - lo);
  }
  return s;
}

const RetrievalBench& retrieval_bench() {
  static const RetrievalBench bench = [] {
    constexpr std::size_t kTrain = 3000, kHeld = 500;
    TwoLevelOptions opts;
    opts.vocab_size = 200;
    opts.feat_dim = 64;
    opts.min_len = 4;
    opts.max_len = 8;
    opts.noise = 0.1;
    const TwoLevelCorpus c = gen_two_level(kTrain + 2 * kHeld, 2, 2, 7, opts);
    std::vector<std::string> tokens{"<unk>"};
    tokens.insert(tokens.end(), c.vocab.begin(), c.vocab.end());
    RetrievalBench b{Vocabulary(tokens), {}, {}, {}, {}};
    b.train = slice(c, b.vocab, 0, kTrain);
    b.dev = slice(c, b.vocab, kTrain, kTrain + kHeld);
    b.eval = slice(c, b.vocab, kTrain + kHeld, kTrain + 2 * kHeld);
    for (const auto& cap : b.eval.captions) b.eval_lengths.push_back(cap.size());
    return b;
  }();
  return bench;
}

TrainConfig retrieval_config() {
  TrainConfig c = TrainConfig::defaults(Task::kRetrieval);
  c.dim = 128;
  c.word_dim = 64;
  c.batch = 64;
  c.max_epochs = 30;
  c.lr = 0.01;
  c.margin = 1.0;
  c.normalize = false;
  c.seed = 3;
  return c;
}

EmbeddedCorpus train_and_embed(TrainConfig config) {
  const RetrievalBench& b = retrieval_bench();
  const TrainResult res = train_retrieval(config, b.train, b.dev, b.vocab.size());
  return embed_corpus(RetrievalModel::from_checkpoint(res.best), b.eval);
}

Outcome direction_asymmetry() {
  const auto t0 = Clock::now();
  TrainConfig fwd = retrieval_config();
  TrainConfig rev = fwd;
  rev.reverse_order = true;
  const auto f = evaluate_retrieval(train_and_embed(fwd), ScorerKind::kOrder,
                                    Orientation::kCaptionsAbove);
  const auto r = evaluate_retrieval(train_and_embed(rev), ScorerKind::kOrder,
                                    Orientation::kImagesAbove);
  const double s = seconds_since(t0);
  const double a = f.image_retrieval.r1, b = r.image_retrieval.r1;
  return verdict(a > b && a >= b + 20.0 && s < 900.0,
                 fmt::format("image R@1 forward {:.1f} vs reversed {:.1f} (need forward >= "
                             "reversed + 20), {:.0f}s (limit 900s)",
                             a, b, s));
}

Outcome length_contrast_check() {
  const auto t0 = Clock::now();
  const RetrievalBench& b = retrieval_bench();
  TrainConfig ord = retrieval_config();
  TrainConfig cos = ord;
  cos.scorer = ScorerKind::kCosine;
  const auto lo = length_contrast(train_and_embed(ord), b.eval_lengths, ScorerKind::kOrder,
                                  Orientation::kCaptionsAbove, 100);
  const auto lc = length_contrast(train_and_embed(cos), b.eval_lengths, ScorerKind::kCosine,
                                  Orientation::kCaptionsAbove, 100);
  const double s = seconds_since(t0);
  return verdict(lo.subset_mean_rank <= lc.subset_mean_rank && s < 900.0,
                 fmt::format("mean rank on the {} largest length-gap pairs: order {:.2f}, "
                             "cosine {:.2f} (need order <= cosine), {:.0f}s (limit 900s)",
                             lo.n_pairs, lo.subset_mean_rank, lc.subset_mean_rank, s));
}

// ----- 8 ------------------------------------------------------------------

struct EntailBench {
  Vocabulary vocab;
  std::vector<EntailExample> examples;
};

EntailBench entail_bench(std::size_t n) {
  const auto pairs = gen_entailment(n, 8, 11, 50);
  std::vector<std::vector<std::string>> sentences;
  for (const auto& p : pairs) {
    sentences.push_back(p.premise);
    sentences.push_back(p.hypothesis);
  }
  EntailBench b{Vocabulary::build(sentences), {}};
  for (const auto& p : pairs) {
    b.examples.push_back({b.vocab.encode(p.premise), b.vocab.encode(p.hypothesis), p.entailed});
  }
  return b;
}

TrainConfig entail_config() {
  TrainConfig c = TrainConfig::defaults(Task::kEntailment);
  c.dim = 64;
  c.word_dim = 64;
  c.batch = 64;
  c.max_epochs = 20;
  c.lr = 0.003;
  c.margin = 0.5;
  c.normalize = false;
  c.seed = 9;
  return c;
}

Outcome entailment() {
  const auto t0 = Clock::now();
  const EntailBench b = entail_bench(10000);
  const std::span<const EntailExample> all(b.examples);
  const auto train = all.subspan(0, 7000), dev = all.subspan(7000, 1000), test = all.subspan(8000);
  const TrainResult res = train_entailment(entail_config(), train, dev, b.vocab.size());
  const EntailmentModel m = EntailmentModel::from_checkpoint(res.best);
  const ThresholdResult tuned = tune_threshold(score_entailment(m, dev));
  const double acc = binary_accuracy(score_entailment(m, test), tuned.threshold);
  const double s = seconds_since(t0);
  return verdict(acc >= 90.0 && s < 600.0,
                 fmt::format("held-out accuracy {:.2f}% on {} pairs (need >= 90), {:.0f}s "
                             "(limit 600s)",
                             acc, test.size(), s));
}

// ----- 9 ------------------------------------------------------------------

struct PipelineOutput {
  std::string checkpoint;
  std::string report;
};

PipelineOutput hypernym_pipeline() {
  const Taxonomy tax = Taxonomy::build(gen_dag(120, 5, 0.05, 4));
  const EdgeSplit sp = split(tax.closure(), 40, 40, 8);
  Rng rng(8 ^ 0x6e6567ULL);
  const auto dev = make_eval_pairs(sp.dev, tax.size(), tax.closure(), rng);
  const auto test = make_eval_pairs(sp.test, tax.size(), tax.closure(), rng);
  TrainConfig c = TrainConfig::defaults(Task::kHypernym);
  c.dim = 8;
  c.batch = 64;
  c.max_epochs = 5;
  const TrainResult res = train_hypernym(c, {tax.size(), sp.train, dev});
  const HypernymModel m = HypernymModel::from_checkpoint(res.best);
  const ThresholdResult tuned = tune_threshold(m.score_pairs(dev));
  MetricReport r;
  r.add("threshold", tuned.threshold);
  r.add("test_accuracy", binary_accuracy(m.score_pairs(test), tuned.threshold));
  return {serialize_checkpoint(res.best), r.to_tsv()};
}

PipelineOutput retrieval_pipeline() {
  TwoLevelOptions opts;
  opts.vocab_size = 30;
  opts.feat_dim = 12;
  const TwoLevelCorpus c = gen_two_level(60, 2, 2, 6, opts);
  std::vector<std::string> tokens{"<unk>"};
  tokens.insert(tokens.end(), c.vocab.begin(), c.vocab.end());
  const Vocabulary v(tokens);
  const RetrievalSet train = slice(c, v, 0, 40), dev = slice(c, v, 40, 60);
  TrainConfig cfg = TrainConfig::defaults(Task::kRetrieval);
  cfg.dim = 8;
  cfg.word_dim = 6;
  cfg.batch = 8;
  cfg.max_epochs = 3;
  const TrainResult res = train_retrieval(cfg, train, dev, v.size());
  const auto m = evaluate_retrieval(embed_corpus(RetrievalModel::from_checkpoint(res.best), dev),
                                    ScorerKind::kOrder, Orientation::kCaptionsAbove);
  MetricReport r;
  r.add_rank_result("image_", m.image_retrieval);
  r.add_rank_result("caption_", m.caption_retrieval);
  return {serialize_checkpoint(res.best), r.to_tsv()};
}

PipelineOutput entail_pipeline() {
  const EntailBench b = entail_bench(300);
  const std::span<const EntailExample> all(b.examples);
  TrainConfig c = entail_config();
  c.dim = 8;
  c.word_dim = 6;
  c.max_epochs = 3;
  const TrainResult res = train_entailment(c, all.subspan(0, 200), all.subspan(200, 50),
                                           b.vocab.size());
  const EntailmentModel m = EntailmentModel::from_checkpoint(res.best);
  const ThresholdResult tuned = tune_threshold(score_entailment(m, all.subspan(200, 50)));
  MetricReport r;
  r.add("test_accuracy", binary_accuracy(score_entailment(m, all.subspan(250)), tuned.threshold));
  return {serialize_checkpoint(res.best), r.to_tsv()};
}

Outcome determinism() {
  const auto t0 = Clock::now();
  std::vector<std::string> differing;
  const std::vector<std::pair<std::string, std::function<PipelineOutput()>>> pipelines = {
      {"hypernym", hypernym_pipeline},
      {"retrieval", retrieval_pipeline},
      {"entailment", entail_pipeline},
  };
  for (const auto& [name, run] : pipelines) {
    const PipelineOutput a = run(), b = run();
    if (a.checkpoint != b.checkpoint) differing.push_back(name + " checkpoint");
    if (a.report != b.report) differing.push_back(name + " report");
  }
  const double s = seconds_since(t0);
  return verdict(differing.empty(),
                 differing.empty()
                     ? fmt::format("3 pipelines rerun, checkpoints and reports byte-identical, "
                                   "{:.1f}s",
                                   s)
                     : fmt::format("differs: {}", fmt::join(differing, ", ")));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"order axioms", order_axioms},
      {"gradient checks", gradients},
      {"oracle equivalence", oracles},
      {"wordnet reproduction", wordnet},
      {"toy 2-d taxonomy", toy_taxonomy},
      {"direction asymmetry", direction_asymmetry},
      {"length contrast", length_contrast_check},
      {"synthetic entailment", entailment},
      {"determinism", determinism},
  };
  std::vector<std::size_t> selected;
  for (int k = 1; k < argc; ++k) {
    const int n = std::atoi(argv[k]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      fmt::print(stderr, "unknown criterion '{}'\n", argv[k]);
      return 1;
    }
    selected.push_back(static_cast<std::size_t>(n));
  }
  if (selected.empty()) {
    for (std::size_t n = 1; n <= criteria.size(); ++n) selected.push_back(n);
  }

  bool failed = false;
  std::size_t skipped = 0;
  for (const std::size_t n : selected) {
    const auto& [name, run] = criteria[n - 1];
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {Status::kFail, fmt::format("exception: {}", e.what())};
    }
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kSkip ? "SKIP" : "FAIL";
    fmt::print("criterion {} [{}] {}: {}\n", n, tag, name, o.detail);
    std::fflush(stdout);
    failed |= o.status == Status::kFail;
    skipped += o.status == Status::kSkip;
  }
  if (failed) return 1;
  return skipped == selected.size() ? 77 : 0;
}
