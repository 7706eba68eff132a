#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "oe/errors.h"
#include "oe/numerics.h"

using namespace oe;

TEST_CASE("rng is a pure function of seed and counter") {
  Rng a(42), b(42), c(43);
  for (int k = 0; k < 100; ++k) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  CHECK(a.counter() == 100);
}

TEST_CASE("rng first outputs match the splitmix64 reference") {
  // Reference values of the SplitMix64 stream seeded with 0.
  Rng r(0);
  CHECK(r.next_u64() == 0xe220a8397b1dcdafULL);
  CHECK(r.next_u64() == 0x6e789e6aa1b965f4ULL);
  CHECK(r.next_u64() == 0x06c45d188009454fULL);
}

TEST_CASE("rng ranges") {
  Rng r(7);
  std::set<std::size_t> seen;
  for (int k = 0; k < 2000; ++k) {
    const double u = r.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = r.uniform(-2.0, 3.0);
    CHECK(v >= -2.0);
    CHECK(v < 3.0);
    const auto c = r.choice(5);
    CHECK(c < 5);
    seen.insert(c);
  }
  CHECK(seen.size() == 5);
  CHECK_THROWS_AS(r.uniform(1.0, 1.0), ContractViolation);
  CHECK_THROWS_AS(r.choice(0), ContractViolation);
}

TEST_CASE("rng normal has roughly unit variance") {
  Rng r(3);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const double x = r.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("shuffle is a permutation") {
  Rng r(5);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  r.shuffle(v);
  std::set<int> s(v.begin(), v.end());
  CHECK(s.size() == 8);
}

TEST_CASE("adam first step moves each coordinate by lr against the gradient sign") {
  // After one bias-corrected step m_hat = g and v_hat = g^2, so the update is
  // lr * g / (|g| + eps).
  AdamConfig cfg;
  cfg.lr = 0.1;
  AdamState st(3, cfg);
  Vector p{1.0, -2.0, 0.5};
  const Vector g{0.3, -4.0, 0.0};
  adam_step(p, g, st);
  CHECK(p[0] == doctest::Approx(1.0 - 0.1 * 0.3 / (0.3 + 1e-8)).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(-2.0 + 0.1 * 4.0 / (4.0 + 1e-8)).epsilon(1e-12));
  CHECK(p[2] == 0.5);
  CHECK(st.t == 1);
}

TEST_CASE("adam second step against a hand computation") {
  AdamConfig cfg;
  cfg.lr = 0.01;
  AdamState st(1, cfg);
  Vector p{0.0};
  adam_step(p, Vector{1.0}, st);
  adam_step(p, Vector{-1.0}, st);
  const double m = 0.9 * 0.1 * 1.0 + 0.1 * -1.0;          // -0.01
  const double v = 0.999 * 0.001 * 1.0 + 0.001 * 1.0;      // 0.001999
  const double m_hat = m / (1.0 - 0.81);
  const double v_hat = v / (1.0 - 0.999 * 0.999);
  const double expected = -0.01 * 1.0 / (1.0 + 1e-8) - 0.01 * m_hat / (std::sqrt(v_hat) + 1e-8);
  CHECK(p[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("adam flushes decayed moments instead of going subnormal") {
  AdamState st(2, {});
  const double tiny = std::numeric_limits<double>::min();
  st.m = {1.05 * tiny, 1.0};
  st.v = {1.05 * tiny, 1.0};
  Vector p{0.0, 0.0};
  adam_step(p, Vector{0.0, 0.0}, st);
  CHECK(st.m[0] == 0.0);  // 0.9 * 1.05 * tiny is below the normal range
  CHECK(st.v[0] == 0.999 * (1.05 * tiny));
  CHECK(st.m[1] == 0.9);
  CHECK(p[0] == 0.0);
}

TEST_CASE("adam rejects bad gradients") {
  AdamState st(2, {});
  Vector p{0.0, 0.0};
  CHECK_THROWS_AS(adam_step(p, Vector{1.0}, st), ContractViolation);
  try {
    adam_step(p, Vector{1.0, NAN}, st, "w_z");
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("w_z") != std::string::npos);
  }
}

TEST_CASE("clip_by_norm") {
  Vector g{3.0, 4.0};
  CHECK(clip_by_norm(g, 1.0) == doctest::Approx(5.0));
  CHECK(norm(g) == doctest::Approx(1.0));
  Vector small{0.1, 0.0};
  clip_by_norm(small, 1.0);
  CHECK(small[0] == 0.1);
}

TEST_CASE("finite_diff_check on a smooth function") {
  auto f = [](std::span<const double> x) { return x[0] * x[0] * x[1] + std::sin(x[1]); };
  const Vector p{1.5, 0.3};
  const Vector good{2 * 1.5 * 0.3, 1.5 * 1.5 + std::cos(0.3)};
  CHECK(finite_diff_check(f, good, p) < 1e-7);
  const Vector bad{good[0] + 0.1, good[1]};
  CHECK(finite_diff_check(f, bad, p) > 0.05);
}

TEST_CASE("matrix helpers") {
  Matrix m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  Vector out(2);
  matvec(m, Vector{1, 0, -1}, out);
  CHECK(out == Vector{-2, -2});
  Vector back(3, 0.0);
  matvec_transposed_add(m, Vector{1, 1}, back);
  CHECK(back == Vector{5, 7, 9});
  Matrix g(2, 3);
  outer_add(Vector{1, 2}, Vector{1, 0, 1}, g);
  CHECK(g(1, 2) == 2.0);
  CHECK(g(0, 1) == 0.0);
  CHECK_FALSE(all_finite(Vector{1.0, INFINITY}));
  CHECK_THROWS_AS(check_finite(Vector{NAN}, "x"), NumericError);
}
