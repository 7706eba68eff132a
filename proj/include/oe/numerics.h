#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oe {

// All internal arithmetic is done in double precision.
using Vector = std::vector<double>;

// Row-major dense matrix. Column vectors (biases) are stored as n x 1.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void set_zero();
  Matrix zeros_like() const { return Matrix(rows_, cols_); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double norm(std::span<const double> a);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// out = M * x
void matvec(const Matrix& m, std::span<const double> x, std::span<double> out);
// out += M^T * g
void matvec_transposed_add(const Matrix& m, std::span<const double> g, std::span<double> out);
// M += g x^T
void outer_add(std::span<const double> g, std::span<const double> x, Matrix& m);

bool all_finite(std::span<const double> values);
// Throws NumericError mentioning `what` if any value is NaN or infinite.
void check_finite(std::span<const double> values, std::string_view what);

// Deterministic counter-based generator.
//
// Output k (k = 1, 2, ...) is splitmix64_mix(seed + k * 0x9E3779B97F4A7C15),
// where splitmix64_mix is the SplitMix64 finalizer. Doubles take the top 53
// bits; integers in [0, n) use rejection on the low end of the 64-bit range so
// the result is exactly uniform. No standard-library distributions are used,
// so sequences are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  // Uniform on [0, 1).
  double next_double();
  double uniform(double lo, double hi);
  std::size_t choice(std::size_t n);
  // Standard normal via Box-Muller (one draw per pair of uniforms).
  double normal();
  bool bernoulli(double p) { return next_double() < p; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[choice(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

Vector rng_uniform(Rng& rng, double lo, double hi, std::size_t count);
Matrix rng_uniform(Rng& rng, double lo, double hi, std::size_t rows, std::size_t cols);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(std::size_t size, AdamConfig config)
      : m(size, 0.0), v(size, 0.0), config(config) {}

  Vector m;
  Vector v;
  std::uint64_t t = 0;
  AdamConfig config;
};

// Bias-corrected Adam update in place. `name` is used in error messages.
void adam_step(std::span<double> param, std::span<const double> grad, AdamState& state,
               std::string_view name = "parameter");
void adam_step(Matrix& param, const Matrix& grad, AdamState& state,
               std::string_view name = "parameter");

// Rescales `grad` so its L2 norm is at most max_norm. Returns the original norm.
double clip_by_norm(std::span<double> grad, double max_norm);

using ScalarFunction = std::function<double(std::span<const double>)>;

struct FiniteDiffOptions {
  double h = 1e-5;
  // Coordinates for which this returns true are not checked. Used to skip
  // points within 1e-6 of a max(0, .) or |.| kink, where only a subgradient
  // exists and central differences are meaningless.
  std::function<bool(std::size_t)> skip;
};

// Max over coordinates of |central difference - analytic| / max(1, |analytic|).
double finite_diff_check(const ScalarFunction& f, std::span<const double> analytic,
                         std::span<const double> point, const FiniteDiffOptions& options = {});

}  // namespace oe
