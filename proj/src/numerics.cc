#include "oe/numerics.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "oe/errors.h"

namespace oe {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw ContractViolation(fmt::format("matrix {}x{} given {} values", rows, cols, data_.size()));
  }
}

void Matrix::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), "axpy: dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void matvec(const Matrix& m, std::span<const double> x, std::span<double> out) {
  require(m.cols() == x.size() && m.rows() == out.size(), "matvec: dimension mismatch");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) s += row[c] * x[c];
    out[r] = s;
  }
}

void matvec_transposed_add(const Matrix& m, std::span<const double> g, std::span<double> out) {
  require(m.rows() == g.size() && m.cols() == out.size(),
          "matvec_transposed_add: dimension mismatch");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (g[r] == 0.0) continue;
    const auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += g[r] * row[c];
  }
}

void outer_add(std::span<const double> g, std::span<const double> x, Matrix& m) {
  require(m.rows() == g.size() && m.cols() == x.size(), "outer_add: dimension mismatch");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (g[r] == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += g[r] * x[c];
  }
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void check_finite(std::span<const double> values, std::string_view what) {
  if (!all_finite(values)) throw NumericError(fmt::format("non-finite value in {}", what));
}

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() {
  ++counter_;
  return splitmix64_mix(seed_ + counter_ * kGolden);
}

double Rng::next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) {
  require(lo < hi, "rng_uniform: empty range");
  return lo + (hi - lo) * next_double();
}

std::size_t Rng::choice(std::size_t n) {
  require(n >= 1, "rng_choice: n must be at least 1");
  const std::uint64_t bound = n;
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return static_cast<std::size_t>(r % bound);
  }
}

double Rng::normal() {
  const double u1 = 1.0 - next_double();  // (0, 1]
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vector rng_uniform(Rng& rng, double lo, double hi, std::size_t count) {
  require(lo < hi, "rng_uniform: empty range");
  Vector out(count);
  for (auto& v : out) v = rng.uniform(lo, hi);
  return out;
}

Matrix rng_uniform(Rng& rng, double lo, double hi, std::size_t rows, std::size_t cols) {
  return Matrix(rows, cols, rng_uniform(rng, lo, hi, rows * cols));
}

void adam_step(std::span<double> param, std::span<const double> grad, AdamState& state,
               std::string_view name) {
  if (param.size() != grad.size() || state.m.size() != param.size() ||
      state.v.size() != param.size()) {
    throw ContractViolation(fmt::format("adam_step: shape mismatch for {}", name));
  }
  if (!all_finite(grad)) throw NumericError(fmt::format("non-finite gradient for {}", name));

  const auto& c = state.config;
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  // Moments of parameters that stop receiving gradient decay geometrically
  // into the subnormal range, where arithmetic is very slow. They are flushed
  // to zero there; the step they would produce is far below resolution.
  constexpr double kTiny = std::numeric_limits<double>::min();
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    double m = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    double v = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
    if (std::abs(m) < kTiny) m = 0.0;
    if (v < kTiny) v = 0.0;
    state.m[i] = m;
    state.v[i] = v;
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    param[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

void adam_step(Matrix& param, const Matrix& grad, AdamState& state, std::string_view name) {
  if (!param.same_shape(grad)) {
    throw ContractViolation(fmt::format("adam_step: shape mismatch for {}", name));
  }
  adam_step(param.values(), grad.values(), state, name);
}

double clip_by_norm(std::span<double> grad, double max_norm) {
  const double n = norm(grad);
  if (n > max_norm && n > 0.0) {
    const double scale = max_norm / n;
    for (auto& g : grad) g *= scale;
  }
  return n;
}

double finite_diff_check(const ScalarFunction& f, std::span<const double> analytic,
                         std::span<const double> point, const FiniteDiffOptions& options) {
  require(analytic.size() == point.size(), "finite_diff_check: dimension mismatch");
  require(options.h > 0.0, "finite_diff_check: step must be positive");

  Vector x(point.begin(), point.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (options.skip && options.skip(i)) continue;
    const double saved = x[i];
    x[i] = saved + options.h;
    const double plus = f(x);
    x[i] = saved - options.h;
    const double minus = f(x);
    x[i] = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError(fmt::format("finite_diff_check: non-finite value at coordinate {}", i));
    }
    const double numeric = (plus - minus) / (2.0 * options.h);
    const double err = std::abs(numeric - analytic[i]) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace oe
