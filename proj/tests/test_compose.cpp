#include <doctest.h>

#include <algorithm>
#include <random>

#include "helpers.hpp"
#include "hypersent/compose.hpp"

using namespace hypersent;
using testing::max_abs_diff;

namespace {

EmbeddingTable random_table(std::size_t rows, std::size_t dim, double max_norm,
                            std::mt19937_64& rng) {
  std::vector<double> data;
  for (std::size_t r = 0; r < rows; ++r) {
    const Vector x = testing::random_ball_point(dim, max_norm, rng);
    data.insert(data.end(), x.begin(), x.end());
  }
  return EmbeddingTable(rows, dim, std::move(data));
}

Vector row(const EmbeddingTable& t, TokenId id) {
  auto r = t.row(id);
  return Vector(r.begin(), r.end());
}

Vocab make_vocab(std::initializer_list<const char*> words) {
  Vocab v;
  for (const char* w : words) v.add(w);
  return v;
}

}  // namespace

TEST_CASE("tree composition follows the parse") {
  std::mt19937_64 rng(1);
  const CurvatureSpace s(4, 1.0);
  const Vocab vocab = make_vocab({"it", "is", "raining", "today"});
  // Ids 1..4; the table needs a row for the unknown id too.
  const EmbeddingTable table = random_table(5, 4, 0.6, rng);
  const ParseTree tree = parse_sexpr("( It ( is ( raining today ) ) )", vocab);
  const Vector got = compose_tree(post_order_arrays(tree), table, s);
  const Vector expected =
      mobius_add(s, row(table, 1),
                 mobius_add(s, row(table, 2), mobius_add(s, row(table, 3), row(table, 4))));
  CHECK(got == expected);
  CHECK(s.contains(got));

  const ParseTree leaf = parse_sexpr("raining", vocab);
  CHECK(compose_tree(post_order_arrays(leaf), table, s) == row(table, 3));

  const EmbeddingTable zeros(5, 4);
  CHECK(compose_tree(post_order_arrays(tree), zeros, s) == Vector(4, 0.0));

  TraversalArrays missing = post_order_arrays(leaf);
  missing.word_ids[0] = 9;
  CHECK_THROWS(compose_tree(missing, table, s));
}

TEST_CASE("chain composition") {
  std::mt19937_64 rng(2);
  const CurvatureSpace s(3, 1.0);
  const EmbeddingTable t = random_table(3, 3, 0.7, rng);
  const std::vector<TokenId> one{1}, two{0, 2}, three{0, 1, 2};
  CHECK(compose_chain(one, t, s, ChainDirection::Left) == row(t, 1));
  CHECK(compose_chain(one, t, s, ChainDirection::Right) == row(t, 1));
  CHECK(compose_chain(two, t, s, ChainDirection::Left) ==
        compose_chain(two, t, s, ChainDirection::Right));

  const Vector left = compose_chain(three, t, s, ChainDirection::Left);
  const Vector right = compose_chain(three, t, s, ChainDirection::Right);
  CHECK(left == mobius_add(s, row(t, 0), mobius_add(s, row(t, 1), row(t, 2))));
  CHECK(right == mobius_add(s, mobius_add(s, row(t, 0), row(t, 1)), row(t, 2)));
  CHECK(max_abs_diff(left, right) > 1e-6);
  CHECK_THROWS(compose_chain(std::vector<TokenId>{}, t, s, ChainDirection::Left));
}

TEST_CASE("caterpillar tree equals the right chain exactly") {
  std::mt19937_64 rng(3);
  const CurvatureSpace s(5, 0.7);
  const EmbeddingTable t = random_table(8, 5, 0.9, rng);
  std::uniform_int_distribution<int> len(1, 12), word(0, 7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TokenId> ids(len(rng));
    for (TokenId& id : ids) id = word(rng);
    const TraversalArrays a = post_order_arrays(ParseTree::left_branching(ids));
    CHECK(compose_tree(a, t, s) == compose_chain(ids, t, s, ChainDirection::Right));
  }
}

TEST_CASE("Mobius average") {
  std::mt19937_64 rng(4);
  const CurvatureSpace s(4, 1.0);
  const EmbeddingTable t = random_table(3, 4, 0.8, rng);
  const TraversalArrays single = post_order_arrays(ParseTree::left_branching({2}));
  CHECK(max_abs_diff(compose_mobius_average(single, t, s, 1), row(t, 2)) < 1e-15);

  for (std::size_t k = 1; k <= 8; ++k) {
    const std::vector<TokenId> ids(k, 1);
    const TraversalArrays a = post_order_arrays(ParseTree::left_branching(ids));
    CHECK(max_abs_diff(compose_mobius_average(a, t, s, k), row(t, 1)) < 1e-9);
  }

  const TraversalArrays pair = post_order_arrays(ParseTree::left_branching({0, 2}));
  CHECK(compose_mobius_average(pair, t, s, 2) ==
        mobius_scalar_mul(s, 0.5, mobius_add(s, row(t, 0), row(t, 2))));

  // Without a parse the right chain is scaled.
  const Sentence chain = Sentence::from_tokens({0, 1, 2});
  CHECK(compose(CompositionMethod::MobiusAverage, chain, t, s) ==
        mobius_scalar_mul(s, 1.0 / 3.0, compose_chain(chain.tokens, t, s, ChainDirection::Right)));
}

TEST_CASE("Euclidean composition") {
  const EmbeddingTable t(2, 2, {1.0, 2.0, -3.0, 0.5});
  for (auto mode : {EuclideanMode::Average, EuclideanMode::Sum})
    CHECK(compose_euclidean(std::vector<TokenId>{1}, t, mode) == row(t, 1));
  CHECK(compose_euclidean(std::vector<TokenId>{0, 0}, t, EuclideanMode::Average) == row(t, 0));
  CHECK(compose_euclidean(std::vector<TokenId>{0, 1}, t, EuclideanMode::Sum) ==
        Vector{-2.0, 2.5});
  CHECK(compose_euclidean(std::vector<TokenId>{0, 1}, t, EuclideanMode::Average) ==
        Vector{-1.0, 1.25});
  CHECK_THROWS(compose_euclidean(std::vector<TokenId>{}, t, EuclideanMode::Sum));
}

TEST_CASE("averaging is order invariant and chains are not") {
  std::mt19937_64 rng(6);
  const CurvatureSpace s(3, 1.0);
  const EmbeddingTable t = random_table(5, 3, 0.7, rng);
  std::vector<TokenId> ids{0, 1, 2, 3, 4};
  const Vector base = compose_euclidean(ids, t, EuclideanMode::Average);
  const Vector chain = compose_chain(ids, t, s, ChainDirection::Left);
  double chain_spread = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(ids.begin(), ids.end(), rng);
    CHECK(max_abs_diff(compose_euclidean(ids, t, EuclideanMode::Average), base) < 1e-15);
    chain_spread =
        std::max(chain_spread, max_abs_diff(compose_chain(ids, t, s, ChainDirection::Left), chain));
  }
  CHECK(chain_spread > 1e-6);
}

TEST_CASE("hyperbolic compositions stay in the ball") {
  std::mt19937_64 rng(7);
  for (double c : {0.5, 1.0, 2.0}) {
    const CurvatureSpace s(6, c);
    const EmbeddingTable t = random_table(6, 6, 0.999 / std::sqrt(c), rng);
    std::uniform_int_distribution<int> len(1, 20), word(0, 5);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<TokenId> ids(len(rng));
      for (TokenId& id : ids) id = word(rng);
      const Sentence sentence = Sentence::from_tree(ParseTree::left_branching(ids));
      for (auto m : {CompositionMethod::TreeMobius, CompositionMethod::LeftChain,
                     CompositionMethod::RightChain, CompositionMethod::MobiusAverage})
        CHECK_NOTHROW(s.validate(compose(m, sentence, t, s)));
    }
  }
}

TEST_CASE("graph composition reproduces plain composition") {
  std::mt19937_64 rng(8);
  const CurvatureSpace s(4, 1.3);
  const EmbeddingTable t = random_table(6, 4, 0.8, rng);
  const Sentence sentence =
      Sentence::from_tree(parse_sexpr("( ( a b ) ( c ( d e ) ) )", make_vocab({"a", "b", "c", "d", "e"})));
  for (auto m : {CompositionMethod::TreeMobius, CompositionMethod::LeftChain,
                 CompositionMethod::RightChain, CompositionMethod::MobiusAverage,
                 CompositionMethod::EuclideanAverage, CompositionMethod::EuclideanSum}) {
    Graph g;
    const NodeId n = compose_node(g, m, sentence, t, s);
    const auto v = g.value(n);
    CAPTURE(to_string(m));
    CHECK(max_abs_diff(Vector(v.begin(), v.end()), compose(m, sentence, t, s)) < 1e-14);
  }
}
