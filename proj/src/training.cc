#include "oe/training.h"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "oe/errors.h"

namespace oe {

std::string_view to_string(Task task) {
  switch (task) {
    case Task::kHypernym:
      return "hypernym";
    case Task::kRetrieval:
      return "retrieval";
    case Task::kEntailment:
      return "entailment";
  }
  return "unknown";
}

std::optional<Task> parse_task(std::string_view text) {
  if (text == "hypernym") return Task::kHypernym;
  if (text == "retrieval") return Task::kRetrieval;
  if (text == "entailment") return Task::kEntailment;
  return std::nullopt;
}

TrainConfig TrainConfig::defaults(Task task) {
  TrainConfig c;
  c.task = task;
  switch (task) {
    case Task::kHypernym:
      c.dim = 50;
      c.margin = 1.0;
      c.lr = 0.01;
      c.batch = 500;
      c.max_epochs = 50;
      c.normalize = false;
      break;
    case Task::kRetrieval:
      c.dim = 1024;
      c.word_dim = 300;
      c.margin = 0.05;
      c.lr = 0.001;
      c.batch = 128;
      c.max_epochs = 30;
      c.normalize = true;
      break;
    case Task::kEntailment:
      c.dim = 1024;
      c.word_dim = 300;
      c.margin = 1.0;
      c.lr = 0.001;
      c.batch = 128;
      c.max_epochs = 10;
      c.normalize = true;
      break;
  }
  return c;
}

void TrainConfig::validate() const {
  require(dim > 0, "config: dim must be positive");
  require(word_dim > 0, "config: word_dim must be positive");
  require(margin > 0.0 && std::isfinite(margin), "config: margin must be positive");
  require(lr > 0.0 && std::isfinite(lr), "config: lr must be positive");
  require(batch > 0, "config: batch must be positive");
  require(task != Task::kRetrieval || batch >= 2,
          "config: retrieval batches supply their own contrastives, batch must be >= 2");
  require(max_epochs > 0, "config: max_epochs must be positive");
  require(patience > 0, "config: patience must be positive");
  require(grad_clip >= 0.0, "config: grad_clip must be nonnegative");
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"task", std::string(to_string(task))},
      {"dim", std::to_string(dim)},
      {"word_dim", std::to_string(word_dim)},
      {"margin", fmt::format("{}", margin)},
      {"lr", fmt::format("{}", lr)},
      {"batch", std::to_string(batch)},
      {"max_epochs", std::to_string(max_epochs)},
      {"patience", std::to_string(patience)},
      {"seed", std::to_string(seed)},
      {"normalize", b(normalize)},
      {"scorer", std::string(to_string(scorer))},
      {"reverse_order", b(reverse_order)},
      {"grad_clip", fmt::format("{}", grad_clip)},
  };
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ContractViolation(fmt::format("config: bad value '{}' for {}", text, key));
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ContractViolation(fmt::format("config: bad boolean '{}' for {}", text, key));
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

void TrainConfig::apply(const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    if (key == "task") {
      const auto t = parse_task(value);
      if (!t) throw ContractViolation("config: unknown task " + value);
      task = *t;
    } else if (key == "dim") {
      dim = parse_number<std::size_t>(key, value);
    } else if (key == "word_dim") {
      word_dim = parse_number<std::size_t>(key, value);
    } else if (key == "margin") {
      margin = parse_number<double>(key, value);
    } else if (key == "lr") {
      lr = parse_number<double>(key, value);
    } else if (key == "batch") {
      batch = parse_number<std::size_t>(key, value);
    } else if (key == "max_epochs") {
      max_epochs = parse_number<std::size_t>(key, value);
    } else if (key == "patience") {
      patience = parse_number<std::size_t>(key, value);
    } else if (key == "seed") {
      seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "normalize") {
      normalize = parse_bool(key, value);
    } else if (key == "scorer") {
      const auto s = parse_scorer(value);
      if (!s) throw ContractViolation("config: unknown scorer " + value);
      scorer = *s;
    } else if (key == "reverse_order") {
      reverse_order = parse_bool(key, value);
    } else if (key == "grad_clip") {
      grad_clip = parse_number<double>(key, value);
    } else {
      throw ContractViolation("config: unknown key " + key);
    }
  }
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError(fmt::format("config line {}: expected key = value", line_no));
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

TrainConfig load_config(const std::string& path, std::optional<Task> expected_task) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  const auto values = parse_config_text(ss.str());

  Task task = expected_task.value_or(Task::kHypernym);
  if (const auto it = values.find("task"); it != values.end()) {
    const auto t = parse_task(it->second);
    if (!t) throw ContractViolation("config: unknown task " + it->second);
    if (expected_task && *t != *expected_task) {
      throw ContractViolation(fmt::format("config {} is for task {}, expected {}", path,
                                          it->second, to_string(*expected_task)));
    }
    task = *t;
  }
  TrainConfig config = TrainConfig::defaults(task);
  config.apply(values);
  return config;
}

Task Checkpoint::task() const {
  const auto it = meta.find("task");
  if (it == meta.end()) throw VersionError("checkpoint has no task tag");
  const auto t = parse_task(it->second);
  if (!t) throw VersionError("checkpoint has unknown task " + it->second);
  return *t;
}

TrainConfig Checkpoint::config() const {
  TrainConfig c = TrainConfig::defaults(task());
  std::map<std::string, std::string> fields;
  const auto known = c.to_map();
  for (const auto& [key, value] : meta) {
    if (known.count(key) != 0) fields[key] = value;
  }
  c.apply(fields);
  return c;
}

std::size_t Checkpoint::epoch() const {
  const auto it = meta.find("epoch");
  return it == meta.end() ? 0 : parse_number<std::size_t>("epoch", it->second);
}

double Checkpoint::dev_metric() const {
  const auto it = meta.find("dev_metric");
  return it == meta.end() ? 0.0 : parse_number<double>("dev_metric", it->second);
}

// ----- Losses -------------------------------------------------------------

namespace {

PairLoss pair_margin_loss(std::span<const EmbeddedPair> positives,
                          std::span<const EmbeddedPair> negatives, double margin,
                          ScorerKind scorer) {
  require(!positives.empty() || !negatives.empty(), "pair loss: no pairs");
  require(margin > 0.0, "pair loss: margin must be positive");
  PairLoss out;
  out.positive.reserve(positives.size());
  out.negative.reserve(negatives.size());
  for (const auto& p : positives) {
    out.loss += violation(scorer, p.lower, p.upper);
    out.positive.push_back(violation_grads(scorer, p.lower, p.upper));
  }
  for (const auto& n : negatives) {
    const double e = violation(scorer, n.lower, n.upper);
    if (margin - e > 0.0) {
      out.loss += margin - e;
      auto g = violation_grads(scorer, n.lower, n.upper);
      for (auto& v : g.lower) v = -v;
      for (auto& v : g.upper) v = -v;
      out.negative.push_back(std::move(g));
    } else {
      out.negative.push_back({Vector(n.lower.size(), 0.0), Vector(n.upper.size(), 0.0)});
    }
  }
  return out;
}

}  // namespace

PairLoss hypernym_loss(std::span<const EmbeddedPair> positives,
                       std::span<const EmbeddedPair> negatives, double margin,
                       ScorerKind scorer) {
  return pair_margin_loss(positives, negatives, margin, scorer);
}

PairLoss entailment_loss(std::span<const EmbeddedPair> positives,
                         std::span<const EmbeddedPair> negatives, double margin,
                         ScorerKind scorer) {
  return pair_margin_loss(positives, negatives, margin, scorer);
}

RankingLoss ranking_loss(std::span<const Vector> captions, std::span<const Vector> images,
                         double margin, ScorerKind scorer, Orientation orientation,
                         std::span<const std::size_t> groups) {
  const std::size_t n = captions.size();
  require(n >= 1 && images.size() == n, "ranking_loss: need n aligned captions and images");
  require(groups.empty() || groups.size() == n, "ranking_loss: one group per pair");
  const std::size_t dim = captions[0].size();
  for (std::size_t k = 0; k < n; ++k) {
    require(captions[k].size() == dim && images[k].size() == dim,
            "ranking_loss: dimension mismatch");
  }

  Matrix s(n, n);  // s(c, i) = S(caption c, image i)
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      s(c, i) = caption_image_score(scorer, orientation, captions[c], images[i]);
    }
  }

  RankingLoss out;
  Matrix upstream(n, n);  // dL / dS(c, i)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || (!groups.empty() && groups[j] == groups[i])) continue;
      const double contrast_caption = margin - s(i, i) + s(j, i);
      if (contrast_caption > 0.0) {
        out.loss += contrast_caption;
        upstream(i, i) -= 1.0;
        upstream(j, i) += 1.0;
      }
      const double contrast_image = margin - s(i, i) + s(i, j);
      if (contrast_image > 0.0) {
        out.loss += contrast_image;
        upstream(i, i) -= 1.0;
        upstream(i, j) += 1.0;
      }
    }
  }

  out.captions.assign(n, Vector(dim, 0.0));
  out.images.assign(n, Vector(dim, 0.0));
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const double u = upstream(c, i);
      if (u == 0.0) continue;
      if (orientation == Orientation::kCaptionsAbove) {
        accumulate_score_grads(scorer, images[i], captions[c], u, out.images[i], out.captions[c]);
      } else {
        accumulate_score_grads(scorer, captions[c], images[i], u, out.captions[c], out.images[i]);
      }
    }
  }
  return out;
}

// ----- Models -------------------------------------------------------------

namespace {

constexpr std::string_view kEpochKey = "epoch";
constexpr std::string_view kMetricKey = "dev_metric";

template <typename Model>
Checkpoint make_checkpoint(const Model& model, const TrainConfig& config, std::size_t epoch,
                           double metric) {
  Checkpoint ckpt;
  ckpt.meta = config.to_map();
  ckpt.meta[std::string(kEpochKey)] = std::to_string(epoch);
  ckpt.meta[std::string(kMetricKey)] = fmt::format("{}", metric);
  Model::visit(model, [&](const std::string& name, const Matrix& m) { ckpt.tensors[name] = m; });
  return ckpt;
}

// Fills `model` (already shaped by name only) from the checkpoint, rejecting
// task mismatches and tensor names the model does not know.
template <typename Model>
void restore_tensors(const Checkpoint& ckpt, Task expected, Model& model) {
  const Task task = ckpt.task();
  if (task != expected) {
    throw VersionError(fmt::format("checkpoint is for task {}, expected {}", to_string(task),
                                   to_string(expected)));
  }
  std::set<std::string> expected_names;
  Model::visit(model, [&](const std::string& name, Matrix&) { expected_names.insert(name); });
  for (const auto& [name, tensor] : ckpt.tensors) {
    if (expected_names.count(name) == 0) {
      throw VersionError("checkpoint has unknown tensor " + name);
    }
  }
  Model::visit(model, [&](const std::string& name, Matrix& m) {
    const auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) throw VersionError("checkpoint is missing tensor " + name);
    m = it->second;
  });
}

void check_gru_shapes(const GruEncoder& g) {
  const std::size_t h = g.hidden();
  const std::size_t d = g.word_dim();
  const bool ok = g.w_r.rows() == h && g.w_h.rows() == h && g.w_z.cols() == d &&
                  g.w_r.cols() == d && g.w_h.cols() == d && g.u_z.rows() == h &&
                  g.u_z.cols() == h && g.u_r.rows() == h && g.u_r.cols() == h &&
                  g.u_h.rows() == h && g.u_h.cols() == h && g.b_z.rows() == h &&
                  g.b_r.rows() == h && g.b_h.rows() == h;
  if (!ok) throw VersionError("checkpoint GRU tensors have inconsistent shapes");
}

template <typename Model>
Model zeros_like(const Model& model) {
  Model z = model;
  Model::visit(z, [](const std::string&, Matrix& m) { m.set_zero(); });
  return z;
}

}  // namespace

HypernymModel HypernymModel::init(std::size_t n_concepts, const TrainConfig& config) {
  Rng rng(config.seed);
  return {EmbeddingTable::init(n_concepts, config.dim, rng)};
}

HypernymModel HypernymModel::from_checkpoint(const Checkpoint& ckpt) {
  HypernymModel m;
  restore_tensors(ckpt, Task::kHypernym, m);
  return m;
}

Checkpoint HypernymModel::to_checkpoint(const TrainConfig& config, std::size_t epoch,
                                        double metric) const {
  return make_checkpoint(*this, config, epoch, metric);
}

std::vector<ScoredPair> HypernymModel::score_pairs(std::span<const LabeledPair> pairs,
                                                   ScorerKind scorer) const {
  std::vector<ScoredPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({violation(scorer, concepts.lookup(p.child), concepts.lookup(p.parent)),
                   p.label});
  }
  return out;
}

RetrievalModel RetrievalModel::init(std::size_t vocab_size, std::size_t feat_dim,
                                    const TrainConfig& config) {
  Rng rng(config.seed);
  RetrievalModel m;
  m.image = LinearProjection::init(config.dim, feat_dim, config.normalize, rng);
  m.caption = GruEncoder::init(vocab_size, config.word_dim, config.dim, config.normalize, rng);
  return m;
}

RetrievalModel RetrievalModel::from_checkpoint(const Checkpoint& ckpt) {
  RetrievalModel m;
  restore_tensors(ckpt, Task::kRetrieval, m);
  check_gru_shapes(m.caption);
  if (m.image.weights.rows() != m.caption.hidden()) {
    throw VersionError("checkpoint image projection does not match the caption encoder");
  }
  const bool normalize = ckpt.config().normalize;
  m.image.normalize = normalize;
  m.caption.normalize = normalize;
  return m;
}

Checkpoint RetrievalModel::to_checkpoint(const TrainConfig& config, std::size_t epoch,
                                         double metric) const {
  return make_checkpoint(*this, config, epoch, metric);
}

EntailmentModel EntailmentModel::init(std::size_t vocab_size, const TrainConfig& config) {
  Rng rng(config.seed);
  return {GruEncoder::init(vocab_size, config.word_dim, config.dim, config.normalize, rng)};
}

EntailmentModel EntailmentModel::from_checkpoint(const Checkpoint& ckpt) {
  EntailmentModel m;
  restore_tensors(ckpt, Task::kEntailment, m);
  check_gru_shapes(m.sentence);
  m.sentence.normalize = ckpt.config().normalize;
  return m;
}

Checkpoint EntailmentModel::to_checkpoint(const TrainConfig& config, std::size_t epoch,
                                          double metric) const {
  return make_checkpoint(*this, config, epoch, metric);
}

EmbeddedCorpus embed_corpus(const RetrievalModel& model, const RetrievalSet& set) {
  EmbeddedCorpus out;
  out.images.reserve(set.images.size());
  for (const auto& f : set.images) out.images.push_back(model.image.forward(f));
  out.captions.reserve(set.captions.size());
  for (const auto& c : set.captions) out.captions.push_back(model.caption.encode(c));
  out.caption_image = set.caption_image;
  return out;
}

std::vector<ScoredPair> score_entailment(const EntailmentModel& model,
                                         std::span<const EntailExample> pairs,
                                         ScorerKind scorer) {
  std::vector<ScoredPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({violation(scorer, model.sentence.encode(p.premise),
                             model.sentence.encode(p.hypothesis)),
                   p.entailed});
  }
  return out;
}

// ----- Training loop ------------------------------------------------------

void Optimizer::step(const std::string& name, Matrix& param, Matrix& grad) {
  auto it = states_.find(name);
  if (it == states_.end()) it = states_.emplace(name, AdamState(param.size(), config_)).first;
  if (grad_clip_ > 0.0) clip_by_norm(grad.values(), grad_clip_);
  adam_step(param, grad, it->second, name);
}

TrainResult run_epochs(const TrainConfig& config, const EpochHooks& hooks) {
  require(hooks.train_epoch && hooks.evaluate && hooks.snapshot, "run_epochs: missing hook");
  require(config.max_epochs > 0 && config.patience > 0, "run_epochs: bad epoch limits");
  TrainResult result;
  bool have_best = false;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double loss = hooks.train_epoch(epoch);
    if (!std::isfinite(loss)) {
      throw NumericError(fmt::format("non-finite training loss in epoch {}", epoch));
    }
    const double metric = hooks.evaluate();
    const EpochLog log{epoch, loss, metric};
    result.history.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);

    if (!have_best || metric > result.best_metric) {
      have_best = true;
      result.best_metric = metric;
      result.best_epoch = epoch;
      result.best = hooks.snapshot(epoch, metric);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

namespace {

void check_batch_loss(double loss, std::size_t batch_index) {
  if (!std::isfinite(loss)) {
    throw NumericError(fmt::format("non-finite loss in batch {}", batch_index));
  }
}

AdamConfig adam_for(const TrainConfig& config) {
  AdamConfig a;
  a.lr = config.lr;
  return a;
}

// Batches are drawn from a stream separate from parameter initialization.
constexpr std::uint64_t kBatchStream = 0x6261746368ULL;

}  // namespace

TrainResult train_hypernym(const TrainConfig& config, const HypernymData& data,
                           const EpochCallback& on_epoch) {
  config.validate();
  require(!data.train.empty(), "train_hypernym: no training pairs");
  require(data.n_concepts >= 2, "train_hypernym: need at least two concepts");

  HypernymModel model = HypernymModel::init(data.n_concepts, config);
  HypernymModel grads = zeros_like(model);
  Optimizer optimizer(adam_for(config), config.grad_clip);
  Rng rng(config.seed ^ kBatchStream);

  const std::size_t batch = config.batch;
  const std::size_t n_batches = std::max<std::size_t>(1, (data.train.size() + batch - 1) / batch);
  std::vector<ConceptPair> pos(batch);
  std::vector<ConceptPair> neg(batch);
  std::vector<Vector> emb(4 * batch);
  std::vector<EmbeddedPair> pos_view(batch), neg_view(batch);
  std::size_t batch_counter = 0;

  EpochHooks hooks;
  hooks.train_epoch = [&](std::size_t) {
    double total = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b, ++batch_counter) {
      for (std::size_t k = 0; k < batch; ++k) {
        pos[k] = data.train[rng.choice(data.train.size())];
        const auto corrupted = sample_negative(pos[k], data.n_concepts, rng);
        neg[k] = {corrupted.child, corrupted.parent};
      }
      for (std::size_t k = 0; k < batch; ++k) {
        emb[4 * k] = model.concepts.lookup(pos[k].child);
        emb[4 * k + 1] = model.concepts.lookup(pos[k].parent);
        emb[4 * k + 2] = model.concepts.lookup(neg[k].child);
        emb[4 * k + 3] = model.concepts.lookup(neg[k].parent);
        pos_view[k] = {emb[4 * k], emb[4 * k + 1]};
        neg_view[k] = {emb[4 * k + 2], emb[4 * k + 3]};
      }
      const auto loss = hypernym_loss(pos_view, neg_view, config.margin, config.scorer);
      check_batch_loss(loss.loss, batch_counter);

      grads.concepts.weights.set_zero();
      auto& g = grads.concepts.weights;
      for (std::size_t k = 0; k < batch; ++k) {
        model.concepts.backward(pos[k].child, loss.positive[k].lower, g);
        model.concepts.backward(pos[k].parent, loss.positive[k].upper, g);
        model.concepts.backward(neg[k].child, loss.negative[k].lower, g);
        model.concepts.backward(neg[k].parent, loss.negative[k].upper, g);
      }
      optimizer.step_model(model, grads);
      total += loss.loss / static_cast<double>(2 * batch);
    }
    return total / static_cast<double>(n_batches);
  };
  hooks.evaluate = [&] {
    if (!data.dev.empty()) {
      return tune_threshold(model.score_pairs(data.dev, config.scorer)).accuracy;
    }
    double worst = 0.0;
    for (const auto& p : data.train) {
      worst = std::max(worst, violation(config.scorer, model.concepts.lookup(p.child),
                                        model.concepts.lookup(p.parent)));
    }
    return -worst;
  };
  hooks.snapshot = [&](std::size_t epoch, double metric) {
    return model.to_checkpoint(config, epoch, metric);
  };
  hooks.on_epoch = on_epoch;
  return run_epochs(config, hooks);
}

TrainResult train_retrieval(const TrainConfig& config, const RetrievalSet& train,
                            const RetrievalSet& dev, std::size_t vocab_size,
                            const EpochCallback& on_epoch) {
  config.validate();
  require(train.captions.size() >= 2 && !train.images.empty(),
          "train_retrieval: need at least two training captions");
  require(train.caption_image.size() == train.captions.size(),
          "train_retrieval: one image per caption");
  const std::size_t feat_dim = train.images.front().size();

  RetrievalModel model = RetrievalModel::init(vocab_size, feat_dim, config);
  RetrievalModel grads = zeros_like(model);
  Optimizer optimizer(adam_for(config), config.grad_clip);
  Rng rng(config.seed ^ kBatchStream);
  const Orientation orientation =
      config.reverse_order ? Orientation::kImagesAbove : Orientation::kCaptionsAbove;

  std::vector<std::size_t> order(train.captions.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::size_t batch_counter = 0;

  EpochHooks hooks;
  hooks.train_epoch = [&](std::size_t) {
    rng.shuffle(order);
    double total = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start + 2 <= order.size(); start += config.batch) {
      const std::size_t end = std::min(order.size(), start + config.batch);
      const std::size_t n = end - start;
      if (n < 2) break;
      std::vector<GruEncoder::Tape> tapes(n);
      std::vector<LinearProjection::Cache> caches(n);
      std::vector<Vector> caps(n), imgs(n);
      std::vector<std::size_t> groups(n);
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t c = order[start + k];
        groups[k] = train.caption_image[c];
        caps[k] = model.caption.encode(train.captions[c], &tapes[k]);
        imgs[k] = model.image.forward(train.images[groups[k]], &caches[k]);
      }
      const auto loss = ranking_loss(caps, imgs, config.margin, config.scorer, orientation, groups);
      check_batch_loss(loss.loss, batch_counter++);

      RetrievalModel::visit(grads, [](const std::string&, Matrix& m) { m.set_zero(); });
      for (std::size_t k = 0; k < n; ++k) {
        model.caption.backward(tapes[k], loss.captions[k], grads.caption);
        model.image.backward(train.images[groups[k]], caches[k], loss.images[k],
                             grads.image.weights);
      }
      optimizer.step_model(model, grads);
      total += loss.loss / static_cast<double>(n);
      ++n_batches;
    }
    return n_batches == 0 ? 0.0 : total / static_cast<double>(n_batches);
  };
  hooks.evaluate = [&] {
    return evaluate_retrieval(embed_corpus(model, dev), config.scorer, orientation).recall_sum();
  };
  hooks.snapshot = [&](std::size_t epoch, double metric) {
    return model.to_checkpoint(config, epoch, metric);
  };
  hooks.on_epoch = on_epoch;
  return run_epochs(config, hooks);
}

TrainResult train_entailment(const TrainConfig& config, std::span<const EntailExample> train,
                             std::span<const EntailExample> dev, std::size_t vocab_size,
                             const EpochCallback& on_epoch) {
  config.validate();
  require(!train.empty(), "train_entailment: no training pairs");

  EntailmentModel model = EntailmentModel::init(vocab_size, config);
  EntailmentModel grads = zeros_like(model);
  Optimizer optimizer(adam_for(config), config.grad_clip);
  Rng rng(config.seed ^ kBatchStream);

  std::vector<std::size_t> order(train.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::size_t batch_counter = 0;

  EpochHooks hooks;
  hooks.train_epoch = [&](std::size_t) {
    rng.shuffle(order);
    double total = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t end = std::min(order.size(), start + config.batch);
      const std::size_t n = end - start;
      // Premise and hypothesis tapes for each example, in batch order.
      std::vector<GruEncoder::Tape> tapes(2 * n);
      std::vector<Vector> emb(2 * n);
      std::vector<EmbeddedPair> pos, neg;
      std::vector<std::size_t> pos_idx, neg_idx;
      for (std::size_t k = 0; k < n; ++k) {
        const auto& ex = train[order[start + k]];
        emb[2 * k] = model.sentence.encode(ex.premise, &tapes[2 * k]);
        emb[2 * k + 1] = model.sentence.encode(ex.hypothesis, &tapes[2 * k + 1]);
      }
      for (std::size_t k = 0; k < n; ++k) {
        const EmbeddedPair pair{emb[2 * k], emb[2 * k + 1]};
        if (train[order[start + k]].entailed) {
          pos.push_back(pair);
          pos_idx.push_back(k);
        } else {
          neg.push_back(pair);
          neg_idx.push_back(k);
        }
      }
      const auto loss = entailment_loss(pos, neg, config.margin, config.scorer);
      check_batch_loss(loss.loss, batch_counter++);

      EntailmentModel::visit(grads, [](const std::string&, Matrix& m) { m.set_zero(); });
      auto backprop = [&](std::size_t k, const PairGrad& g) {
        model.sentence.backward(tapes[2 * k], g.lower, grads.sentence);
        model.sentence.backward(tapes[2 * k + 1], g.upper, grads.sentence);
      };
      for (std::size_t q = 0; q < pos_idx.size(); ++q) backprop(pos_idx[q], loss.positive[q]);
      for (std::size_t q = 0; q < neg_idx.size(); ++q) backprop(neg_idx[q], loss.negative[q]);
      optimizer.step_model(model, grads);
      total += loss.loss / static_cast<double>(n);
      ++n_batches;
    }
    return total / static_cast<double>(n_batches);
  };
  hooks.evaluate = [&] {
    return tune_threshold(score_entailment(model, dev, config.scorer)).accuracy;
  };
  hooks.snapshot = [&](std::size_t epoch, double metric) {
    return model.to_checkpoint(config, epoch, metric);
  };
  hooks.on_epoch = on_epoch;
  return run_epochs(config, hooks);
}

}  // namespace oe
