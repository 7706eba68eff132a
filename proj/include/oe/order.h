#pragma once

// Reversed product order on the nonnegative orthant.
//
// x is below y (x more specific, y more abstract) iff x_i >= y_i for every i.
// The origin is the top element. Every function here takes the lower item
// first: penalty(lower, upper), score(kind, lower, upper).

#include <optional>
#include <span>
#include <string_view>
#include <utility>

#include "oe/numerics.h"

namespace oe {

enum class ScorerKind { kOrder, kCosine };

std::string_view to_string(ScorerKind kind);
std::optional<ScorerKind> parse_scorer(std::string_view text);

// ||max(0, upper - lower)||^2. Zero exactly when lower is below upper.
double penalty(std::span<const double> lower, std::span<const double> upper);

struct PairGrad {
  Vector lower;
  Vector upper;
};

// Gradients of penalty(lower, upper). The subgradient at the kink is 0.
PairGrad penalty_grads(std::span<const double> lower, std::span<const double> upper);

// True iff upper_i <= lower_i + tol for every i.
bool is_below(std::span<const double> lower, std::span<const double> upper, double tol = 0.0);

// Least upper bound: elementwise min (abstraction).
Vector join(std::span<const double> x, std::span<const double> y);
// Greatest lower bound: elementwise max (composition).
Vector meet(std::span<const double> x, std::span<const double> y);

double cosine(std::span<const double> a, std::span<const double> b);

// Higher is better. kOrder: -penalty(lower, upper). kCosine: cosine
// similarity, symmetric in its arguments.
double score(ScorerKind kind, std::span<const double> lower, std::span<const double> upper);

// Nonnegative "how badly is lower-below-upper violated": penalty for kOrder,
// 1 - cosine for kCosine. Used by the pairwise losses and thresholding.
double violation(ScorerKind kind, std::span<const double> lower, std::span<const double> upper);
PairGrad violation_grads(ScorerKind kind, std::span<const double> lower,
                         std::span<const double> upper);

// Gradient of score(kind, lower, upper), each side scaled by `upstream`.
PairGrad score_grads(ScorerKind kind, std::span<const double> lower,
                     std::span<const double> upper, double upstream = 1.0);

// Adds the gradient of score into existing buffers.
void accumulate_score_grads(ScorerKind kind, std::span<const double> lower,
                            std::span<const double> upper, double upstream,
                            std::span<double> grad_lower, std::span<double> grad_upper);

}  // namespace oe
