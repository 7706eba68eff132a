#pragma once

// Encoders into the nonnegative orthant. Every encoder output is the
// elementwise absolute value of a linear or recurrent pre-activation,
// optionally rescaled to unit L2 norm. Gradients flow through both the
// absolute value (sign(0) := 0) and the normalization.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "oe/numerics.h"

namespace oe {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

class Vocabulary {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();
  // tokens[0] must be "<unk>"; tokens must be unique.
  explicit Vocabulary(std::vector<std::string> tokens);

  // Frequency-sorted (descending, ties by token) over tokens seen at least
  // min_count times, after the reserved "<unk>".
  static Vocabulary build(std::span<const std::vector<std::string>> sentences,
                          std::size_t min_count = 1);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  bool contains(std::string_view token) const;
  // kUnk for unknown tokens.
  TokenId id(std::string_view token) const;
  TokenSeq encode(std::span<const std::string> tokens) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Output of |pre| with optional unit-norm rescaling, plus what backward needs.
struct AbsNormOutput {
  Vector value;
  double scale = 1.0;  // L2 norm of |pre| when normalized, else 1
};

AbsNormOutput abs_normalize(std::span<const double> pre, bool normalize);
// Gradient w.r.t. pre given the gradient w.r.t. the output.
Vector abs_normalize_backward(std::span<const double> pre, const AbsNormOutput& out,
                              bool normalize, std::span<const double> grad_out);

struct EmbeddingTable {
  Matrix weights;  // vocab_size x dim

  static EmbeddingTable init(std::size_t vocab_size, std::size_t dim, Rng& rng);

  std::size_t size() const { return weights.rows(); }
  std::size_t dim() const { return weights.cols(); }

  // Elementwise |weights[id]|.
  Vector lookup(std::size_t id) const;
  // grad_weights[id] += grad_out * sign(weights[id]).
  void backward(std::size_t id, std::span<const double> grad_out, Matrix& grad_weights) const;
};

struct LinearProjection {
  Matrix weights;  // dim_out x dim_in
  bool normalize = true;

  static LinearProjection init(std::size_t dim_out, std::size_t dim_in, bool normalize, Rng& rng);

  struct Cache {
    Vector pre;
    AbsNormOutput out;
  };

  Vector forward(std::span<const double> feature, Cache* cache = nullptr) const;
  void backward(std::span<const double> feature, const Cache& cache,
                std::span<const double> grad_out, Matrix& grad_weights) const;
};

// Gated recurrent encoder. Runs left to right from h = 0:
//   z = sigmoid(W_z x + U_z h + b_z)
//   r = sigmoid(W_r x + U_r h + b_r)
//   c = tanh(W_h x + U_h (r * h) + b_h)
//   h = (1 - z) * h + z * c
// and returns |h_T| (unit-normalized when `normalize` is set).
struct GruEncoder {
  EmbeddingTable words;
  Matrix w_z, w_r, w_h;  // hidden x word_dim
  Matrix u_z, u_r, u_h;  // hidden x hidden
  Matrix b_z, b_r, b_h;  // hidden x 1
  bool normalize = true;

  static GruEncoder init(std::size_t vocab_size, std::size_t word_dim, std::size_t hidden,
                         bool normalize, Rng& rng);

  std::size_t hidden() const { return w_z.rows(); }
  std::size_t word_dim() const { return words.dim(); }

  struct Step {
    TokenId token;
    Vector x;
    Vector h_prev;
    Vector z;
    Vector r;
    Vector c;
  };
  struct Tape {
    std::vector<Step> steps;
    Vector h_last;
    AbsNormOutput out;
  };

  Vector encode(std::span<const TokenId> tokens, Tape* tape = nullptr) const;
  // Accumulates parameter gradients into `grads` (same shapes as *this).
  void backward(const Tape& tape, std::span<const double> grad_out, GruEncoder& grads) const;

  GruEncoder zeros_like() const;

  template <typename Self, typename F>
  static void visit(Self& self, std::string_view prefix, F&& f) {
    const std::string p(prefix);
    f(p + "words", self.words.weights);
    f(p + "w_z", self.w_z);
    f(p + "w_r", self.w_r);
    f(p + "w_h", self.w_h);
    f(p + "u_z", self.u_z);
    f(p + "u_r", self.u_r);
    f(p + "u_h", self.u_h);
    f(p + "b_z", self.b_z);
    f(p + "b_r", self.b_r);
    f(p + "b_h", self.b_h);
  }
};

// Glorot-uniform bound sqrt(6 / (fan_in + fan_out)).
double glorot_bound(std::size_t fan_in, std::size_t fan_out);

}  // namespace oe
