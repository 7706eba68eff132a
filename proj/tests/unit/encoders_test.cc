#include <doctest.h>

#include <cmath>

#include "../support/gradcheck.h"
#include "oe/encoders.h"
#include "oe/errors.h"

using namespace oe;

TEST_CASE("vocabulary build orders by frequency then token") {
  const std::vector<std::vector<std::string>> sents{{"a", "dog", "runs"}, {"a", "cat"}, {"dog"}};
  const Vocabulary v = Vocabulary::build(sents);
  CHECK(v.tokens() == std::vector<std::string>{"<unk>", "a", "dog", "cat", "runs"});
  CHECK(v.id("dog") == 2);
  CHECK(v.id("zebra") == Vocabulary::kUnk);
  const Vocabulary min2 = Vocabulary::build(sents, 2);
  CHECK(min2.size() == 3);
}

TEST_CASE("unknown tokens map to unk and keep the length") {
  const Vocabulary v(std::vector<std::string>{"<unk>", "x"});
  const std::vector<std::string> toks{"p", "q", "r"};
  CHECK(v.encode(toks) == TokenSeq{0, 0, 0});
  CHECK_THROWS_AS(Vocabulary(std::vector<std::string>{"x"}), ContractViolation);
  CHECK_THROWS_AS(Vocabulary(std::vector<std::string>{"<unk>", "x", "x"}), ContractViolation);
}

TEST_CASE("abs_normalize") {
  const auto out = abs_normalize(Vector{-3, 4}, true);
  CHECK(out.value[0] == doctest::Approx(0.6));
  CHECK(out.value[1] == doctest::Approx(0.8));
  CHECK(abs_normalize(Vector{-3, 4}, false).value == Vector{3, 4});
  CHECK_THROWS_AS(abs_normalize(Vector{0, 0}, true), NumericError);
}

TEST_CASE("encoder outputs are nonnegative") {
  Rng rng(4);
  const EmbeddingTable t = EmbeddingTable::init(10, 6, rng);
  for (std::size_t id = 0; id < 10; ++id) {
    for (double v : t.lookup(id)) CHECK(v >= 0.0);
  }
  CHECK_THROWS_AS(t.lookup(10), ContractViolation);
  const GruEncoder g = GruEncoder::init(10, 4, 5, true, rng);
  const Vector h = g.encode(TokenSeq{1, 2, 3});
  CHECK(norm(h) == doctest::Approx(1.0));
  for (double v : h) CHECK(v >= 0.0);
  CHECK_THROWS_AS(g.encode(TokenSeq{}), ContractViolation);
}

TEST_CASE("glorot bound") { CHECK(glorot_bound(4, 2) == doctest::Approx(1.0)); }

TEST_CASE("lookup gradient") {
  Rng rng(21);
  CHECK(gradcheck::lookup_abs_error(rng, 6, 4) < 1e-4);
}

TEST_CASE("projection gradient, with and without normalization") {
  Rng rng(22);
  CHECK(gradcheck::projection_error(rng, 4, 6, true) < 1e-4);
  CHECK(gradcheck::projection_error(rng, 4, 6, false) < 1e-4);
}

TEST_CASE("GRU gradient through time") {
  Rng rng(23);
  for (std::size_t len : {1, 3, 5}) {
    CHECK(gradcheck::gru_error(rng, len, 4, true) < 1e-4);
    CHECK(gradcheck::gru_error(rng, len, 4, false) < 1e-4);
  }
}

TEST_CASE("GRU with a single token equals the closed form") {
  Rng rng(8);
  GruEncoder g = GruEncoder::init(3, 2, 2, false, rng);
  const Vector x = g.words.lookup(1);
  Vector expected(2);
  for (std::size_t i = 0; i < 2; ++i) {
    double az = g.b_z(i, 0), ah = g.b_h(i, 0);
    for (std::size_t j = 0; j < 2; ++j) {
      az += g.w_z(i, j) * x[j];
      ah += g.w_h(i, j) * x[j];
    }
    const double z = 1.0 / (1.0 + std::exp(-az));
    expected[i] = std::abs(z * std::tanh(ah));
  }
  const Vector got = g.encode(TokenSeq{1});
  CHECK(got[0] == doctest::Approx(expected[0]).epsilon(1e-12));
  CHECK(got[1] == doctest::Approx(expected[1]).epsilon(1e-12));
}
