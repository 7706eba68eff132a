#include "oe/encoders.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "oe/errors.h"

namespace oe {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{std::string(kUnkToken)}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty() || tokens_[0] != kUnkToken) {
    throw ContractViolation("vocabulary: first token must be <unk>");
  }
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw ContractViolation(fmt::format("vocabulary: duplicate token '{}'", tokens_[i]));
    }
  }
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> sentences,
                             std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences) {
    for (const auto& t : s) ++counts[t];
  }
  counts.erase(std::string(kUnkToken));
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens{std::string(kUnkToken)};
  for (auto& [token, count] : ranked) {
    if (count >= min_count) tokens.push_back(token);
  }
  return Vocabulary(std::move(tokens));
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.find(std::string(token)) != index_.end();
}

TokenId Vocabulary::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

TokenSeq Vocabulary::encode(std::span<const std::string> tokens) const {
  TokenSeq out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

namespace {

constexpr double kMinNorm = 1e-12;

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

AbsNormOutput abs_normalize(std::span<const double> pre, bool normalize) {
  AbsNormOutput out;
  out.value.resize(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) out.value[i] = std::abs(pre[i]);
  if (normalize) {
    out.scale = norm(out.value);
    if (out.scale < kMinNorm) {
      throw NumericError("cannot normalize a zero embedding");
    }
    for (auto& v : out.value) v /= out.scale;
  }
  return out;
}

Vector abs_normalize_backward(std::span<const double> pre, const AbsNormOutput& out,
                              bool normalize, std::span<const double> grad_out) {
  require(grad_out.size() == pre.size(), "abs_normalize_backward: dimension mismatch");
  Vector g(grad_out.begin(), grad_out.end());
  if (normalize) {
    // out = a / |a|  =>  d/da = (g - out <out, g>) / |a|
    const double proj = dot(out.value, grad_out);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] = (g[i] - out.value[i] * proj) / out.scale;
    }
  }
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= sign(pre[i]);
  return g;
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

EmbeddingTable EmbeddingTable::init(std::size_t vocab_size, std::size_t dim, Rng& rng) {
  require(vocab_size > 0 && dim > 0, "embedding table: shape must be positive");
  return {rng_uniform(rng, -0.1, 0.1, vocab_size, dim)};
}

Vector EmbeddingTable::lookup(std::size_t id) const {
  if (id >= size()) {
    throw ContractViolation(fmt::format("lookup: id {} out of range ({} rows)", id, size()));
  }
  const auto row = weights.row(id);
  Vector out(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) out[i] = std::abs(row[i]);
  return out;
}

void EmbeddingTable::backward(std::size_t id, std::span<const double> grad_out,
                              Matrix& grad_weights) const {
  require(id < size() && grad_out.size() == dim() && grad_weights.same_shape(weights),
          "embedding backward: shape mismatch");
  const auto row = weights.row(id);
  auto g = grad_weights.row(id);
  for (std::size_t i = 0; i < row.size(); ++i) g[i] += grad_out[i] * sign(row[i]);
}

LinearProjection LinearProjection::init(std::size_t dim_out, std::size_t dim_in, bool normalize,
                                        Rng& rng) {
  require(dim_out > 0 && dim_in > 0, "projection: shape must be positive");
  const double bound = glorot_bound(dim_in, dim_out);
  return {rng_uniform(rng, -bound, bound, dim_out, dim_in), normalize};
}

Vector LinearProjection::forward(std::span<const double> feature, Cache* cache) const {
  if (feature.size() != weights.cols()) {
    throw ContractViolation(fmt::format("project: feature dim {} != {}", feature.size(),
                                        weights.cols()));
  }
  Vector pre(weights.rows());
  matvec(weights, feature, pre);
  auto out = abs_normalize(pre, normalize);
  Vector value = out.value;
  if (cache != nullptr) {
    cache->pre = std::move(pre);
    cache->out = std::move(out);
  }
  return value;
}

void LinearProjection::backward(std::span<const double> feature, const Cache& cache,
                                std::span<const double> grad_out, Matrix& grad_weights) const {
  require(grad_weights.same_shape(weights), "project backward: gradient shape mismatch");
  const Vector g_pre = abs_normalize_backward(cache.pre, cache.out, normalize, grad_out);
  outer_add(g_pre, feature, grad_weights);
}

GruEncoder GruEncoder::init(std::size_t vocab_size, std::size_t word_dim, std::size_t hidden,
                            bool normalize, Rng& rng) {
  require(vocab_size > 0 && word_dim > 0 && hidden > 0, "gru: shape must be positive");
  GruEncoder g;
  g.words = EmbeddingTable::init(vocab_size, word_dim, rng);
  const double in_bound = glorot_bound(word_dim, hidden);
  const double rec_bound = glorot_bound(hidden, hidden);
  g.w_z = rng_uniform(rng, -in_bound, in_bound, hidden, word_dim);
  g.w_r = rng_uniform(rng, -in_bound, in_bound, hidden, word_dim);
  g.w_h = rng_uniform(rng, -in_bound, in_bound, hidden, word_dim);
  g.u_z = rng_uniform(rng, -rec_bound, rec_bound, hidden, hidden);
  g.u_r = rng_uniform(rng, -rec_bound, rec_bound, hidden, hidden);
  g.u_h = rng_uniform(rng, -rec_bound, rec_bound, hidden, hidden);
  g.b_z = Matrix(hidden, 1);
  g.b_r = Matrix(hidden, 1);
  g.b_h = Matrix(hidden, 1);
  g.normalize = normalize;
  return g;
}

Vector GruEncoder::encode(std::span<const TokenId> tokens, Tape* tape) const {
  require(!tokens.empty(), "gru_encode: empty token sequence");
  const std::size_t n = hidden();
  Vector h(n, 0.0);
  Vector a_z(n), a_r(n), a_h(n), rh(n);
  if (tape != nullptr) {
    tape->steps.clear();
    tape->steps.reserve(tokens.size());
  }
  for (TokenId token : tokens) {
    Vector x = words.lookup(token);
    matvec(w_z, x, a_z);
    matvec(w_r, x, a_r);
    matvec(w_h, x, a_h);
    Vector z(n), r(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto uz = u_z.row(i);
      const auto ur = u_r.row(i);
      double sz = a_z[i] + b_z(i, 0);
      double sr = a_r[i] + b_r(i, 0);
      for (std::size_t j = 0; j < n; ++j) {
        sz += uz[j] * h[j];
        sr += ur[j] * h[j];
      }
      z[i] = sigmoid(sz);
      r[i] = sigmoid(sr);
    }
    for (std::size_t j = 0; j < n; ++j) rh[j] = r[j] * h[j];
    for (std::size_t i = 0; i < n; ++i) {
      const auto uh = u_h.row(i);
      double s = a_h[i] + b_h(i, 0);
      for (std::size_t j = 0; j < n; ++j) s += uh[j] * rh[j];
      c[i] = std::tanh(s);
    }
    Vector next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = (1.0 - z[i]) * h[i] + z[i] * c[i];
    if (tape != nullptr) {
      tape->steps.push_back({token, std::move(x), std::move(h), std::move(z), std::move(r),
                             std::move(c)});
    }
    h = std::move(next);
  }
  auto out = abs_normalize(h, normalize);
  Vector value = out.value;
  if (tape != nullptr) {
    tape->h_last = std::move(h);
    tape->out = std::move(out);
  }
  return value;
}

void GruEncoder::backward(const Tape& tape, std::span<const double> grad_out,
                          GruEncoder& grads) const {
  require(grad_out.size() == hidden(), "gru backward: gradient dimension mismatch");
  const std::size_t n = hidden();
  Vector dh = abs_normalize_backward(tape.h_last, tape.out, normalize, grad_out);
  Vector da_z(n), da_r(n), da_h(n), drh(n), dx(word_dim()), rh(n);

  for (auto it = tape.steps.rbegin(); it != tape.steps.rend(); ++it) {
    const Step& s = *it;
    Vector dh_prev(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double dz = dh[i] * (s.c[i] - s.h_prev[i]);
      const double dc = dh[i] * s.z[i];
      dh_prev[i] = dh[i] * (1.0 - s.z[i]);
      da_h[i] = dc * (1.0 - s.c[i] * s.c[i]);
      da_z[i] = dz * s.z[i] * (1.0 - s.z[i]);
    }
    for (std::size_t j = 0; j < n; ++j) rh[j] = s.r[j] * s.h_prev[j];

    // Candidate path.
    outer_add(da_h, s.x, grads.w_h);
    outer_add(da_h, rh, grads.u_h);
    axpy(1.0, da_h, grads.b_h.values());
    std::fill(drh.begin(), drh.end(), 0.0);
    matvec_transposed_add(u_h, da_h, drh);
    for (std::size_t j = 0; j < n; ++j) {
      const double dr = drh[j] * s.h_prev[j];
      dh_prev[j] += drh[j] * s.r[j];
      da_r[j] = dr * s.r[j] * (1.0 - s.r[j]);
    }

    // Gates.
    outer_add(da_z, s.x, grads.w_z);
    outer_add(da_z, s.h_prev, grads.u_z);
    axpy(1.0, da_z, grads.b_z.values());
    outer_add(da_r, s.x, grads.w_r);
    outer_add(da_r, s.h_prev, grads.u_r);
    axpy(1.0, da_r, grads.b_r.values());
    matvec_transposed_add(u_z, da_z, dh_prev);
    matvec_transposed_add(u_r, da_r, dh_prev);

    std::fill(dx.begin(), dx.end(), 0.0);
    matvec_transposed_add(w_h, da_h, dx);
    matvec_transposed_add(w_z, da_z, dx);
    matvec_transposed_add(w_r, da_r, dx);
    words.backward(s.token, dx, grads.words.weights);

    dh = std::move(dh_prev);
  }
}

GruEncoder GruEncoder::zeros_like() const {
  GruEncoder g = *this;
  visit(g, "", [](const std::string&, Matrix& m) { m.set_zero(); });
  return g;
}

}  // namespace oe
