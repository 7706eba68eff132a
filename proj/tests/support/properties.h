#pragma once

// Randomized checks of the order axioms and lattice laws. Coordinates are
// drawn from a small grid so that ties and exact comparability (the
// interesting cases) occur often.

#include <cstddef>
#include <string>
#include <vector>

#include "oe/numerics.h"
#include "oe/order.h"

namespace oe::props {

struct AxiomReport {
  std::size_t trials = 0;
  std::size_t failures = 0;
  std::string first_failure;

  void fail(const std::string& what) {
    if (failures++ == 0) first_failure = what;
  }
};

inline Vector grid_vector(Rng& rng, std::size_t dim) {
  Vector v(dim);
  for (double& x : v) x = static_cast<double>(rng.choice(4)) * 0.5;
  return v;
}

inline Vector any_vector(Rng& rng, std::size_t dim) {
  return rng.bernoulli(0.5) ? grid_vector(rng, dim) : rng_uniform(rng, 0.0, 2.0, dim);
}

inline bool coordinatewise_le(const Vector& a, const Vector& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
  }
  return true;
}

inline AxiomReport check_order_axioms(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  AxiomReport r;
  for (std::size_t t = 0; t < trials; ++t) {
    ++r.trials;
    const std::size_t dim = 1 + rng.choice(64);
    const Vector x = any_vector(rng, dim);
    const Vector y = any_vector(rng, dim);
    const Vector z = any_vector(rng, dim);

    // Zero penalty exactly when x is below y (every coordinate of y at most x's).
    const bool below = is_below(x, y);
    if ((penalty(x, y) == 0.0) != below) r.fail("penalty zero iff is_below");
    if (below != coordinatewise_le(y, x)) r.fail("is_below matches the coordinate test");
    if (!is_below(x, x) || penalty(x, x) != 0.0) r.fail("reflexivity");
    if (penalty(x, y) < 0.0) r.fail("penalty nonnegative");

    if (is_below(x, y) && is_below(y, z) && !is_below(x, z)) r.fail("transitivity");
    if (is_below(x, y) && is_below(y, x) && x != y) r.fail("antisymmetry");

    const Vector j = join(x, y);
    const Vector m = meet(x, y);
    // join is an upper bound, meet a lower bound.
    if (!is_below(x, j) || !is_below(y, j)) r.fail("join is an upper bound");
    if (!is_below(m, x) || !is_below(m, y)) r.fail("meet is a lower bound");
    // Least / greatest: any common upper bound of x and y is above the join.
    const Vector u = join(j, z);
    if (!is_below(j, u)) r.fail("join is least");
    const Vector l = meet(m, z);
    if (!is_below(l, m)) r.fail("meet is greatest");
    if (join(x, y) != join(y, x) || meet(x, y) != meet(y, x)) r.fail("commutativity");
    if (join(join(x, y), z) != join(x, join(y, z))) r.fail("join associativity");
    if (meet(meet(x, y), z) != meet(x, meet(y, z))) r.fail("meet associativity");
    if (join(x, meet(x, y)) != x || meet(x, join(x, y)) != x) r.fail("absorption");
    if (join(x, x) != x || meet(x, x) != x) r.fail("idempotence");
    if ((join(x, y) == y) != is_below(x, y)) r.fail("join consistency with the order");
  }
  return r;
}

}  // namespace oe::props
