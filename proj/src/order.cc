#include "oe/order.h"

#include <algorithm>
#include <cmath>

#include "oe/errors.h"

namespace oe {

namespace {

void check_dims(std::span<const double> a, std::span<const double> b, const char* op) {
  if (a.size() != b.size()) {
    throw ContractViolation(std::string(op) + ": dimension mismatch");
  }
}

}  // namespace

std::string_view to_string(ScorerKind kind) {
  return kind == ScorerKind::kOrder ? "order" : "cosine";
}

std::optional<ScorerKind> parse_scorer(std::string_view text) {
  if (text == "order") return ScorerKind::kOrder;
  if (text == "cosine") return ScorerKind::kCosine;
  return std::nullopt;
}

double penalty(std::span<const double> lower, std::span<const double> upper) {
  check_dims(lower, upper, "penalty");
  double total = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    const double d = upper[i] - lower[i];
    if (d > 0.0) total += d * d;
  }
  return total;
}

PairGrad penalty_grads(std::span<const double> lower, std::span<const double> upper) {
  check_dims(lower, upper, "penalty_grads");
  PairGrad g{Vector(lower.size(), 0.0), Vector(lower.size(), 0.0)};
  accumulate_score_grads(ScorerKind::kOrder, lower, upper, -1.0, g.lower, g.upper);
  return g;
}

bool is_below(std::span<const double> lower, std::span<const double> upper, double tol) {
  check_dims(lower, upper, "is_below");
  require(tol >= 0.0, "is_below: tolerance must be nonnegative");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (upper[i] > lower[i] + tol) return false;
  }
  return true;
}

Vector join(std::span<const double> x, std::span<const double> y) {
  check_dims(x, y, "join");
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::min(x[i], y[i]);
  return out;
}

Vector meet(std::span<const double> x, std::span<const double> y) {
  check_dims(x, y, "meet");
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::max(x[i], y[i]);
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  check_dims(a, b, "cosine");
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw ContractViolation("cosine: zero vector");
  return dot(a, b) / (na * nb);
}

double score(ScorerKind kind, std::span<const double> lower, std::span<const double> upper) {
  return kind == ScorerKind::kOrder ? -penalty(lower, upper) : cosine(lower, upper);
}

double violation(ScorerKind kind, std::span<const double> lower, std::span<const double> upper) {
  return kind == ScorerKind::kOrder ? penalty(lower, upper) : 1.0 - cosine(lower, upper);
}

PairGrad violation_grads(ScorerKind kind, std::span<const double> lower,
                         std::span<const double> upper) {
  return score_grads(kind, lower, upper, -1.0);
}

PairGrad score_grads(ScorerKind kind, std::span<const double> lower,
                     std::span<const double> upper, double upstream) {
  check_dims(lower, upper, "score_grads");
  PairGrad g{Vector(lower.size(), 0.0), Vector(lower.size(), 0.0)};
  accumulate_score_grads(kind, lower, upper, upstream, g.lower, g.upper);
  return g;
}

void accumulate_score_grads(ScorerKind kind, std::span<const double> lower,
                            std::span<const double> upper, double upstream,
                            std::span<double> grad_lower, std::span<double> grad_upper) {
  check_dims(lower, upper, "score_grads");
  require(grad_lower.size() == lower.size() && grad_upper.size() == upper.size(),
          "score_grads: gradient buffer mismatch");
  if (upstream == 0.0) return;

  if (kind == ScorerKind::kOrder) {
    // d(-E)/d upper = -2 max(0, upper - lower); d(-E)/d lower = +2 max(0, upper - lower)
    for (std::size_t i = 0; i < lower.size(); ++i) {
      const double d = upper[i] - lower[i];
      if (d > 0.0) {
        grad_upper[i] -= upstream * 2.0 * d;
        grad_lower[i] += upstream * 2.0 * d;
      }
    }
    return;
  }

  const double na = norm(lower);
  const double nb = norm(upper);
  if (na == 0.0 || nb == 0.0) throw ContractViolation("cosine: zero vector");
  const double c = dot(lower, upper) / (na * nb);
  for (std::size_t i = 0; i < lower.size(); ++i) {
    grad_lower[i] += upstream * (upper[i] / (na * nb) - c * lower[i] / (na * na));
    grad_upper[i] += upstream * (lower[i] / (na * nb) - c * upper[i] / (nb * nb));
  }
}

}  // namespace oe
