#include <doctest.h>

#include <functional>
#include <random>

#include "helpers.hpp"
#include "hypersent/compose.hpp"
#include "hypersent/treeparse.hpp"

using namespace hypersent;

namespace {

// Random binary tree over leaves [first, last), ids equal to positions.
int random_subtree(ParseTree& t, int first, int last, std::mt19937_64& rng) {
  if (last - first == 1) return t.add_leaf("w" + std::to_string(first), first);
  std::uniform_int_distribution<int> split(first + 1, last - 1);
  const int mid = split(rng);
  const int l = random_subtree(t, first, mid, rng);
  const int r = random_subtree(t, mid, last, rng);
  return t.add_internal(l, r);
}

ParseTree random_tree(int leaves, std::mt19937_64& rng) {
  ParseTree t;
  random_subtree(t, 0, leaves, rng);
  return t;
}

// Independent recursive encoding: returns index of the node in the arrays.
int encode(const ParseTree& t, int node, TraversalArrays& out) {
  const auto& n = t.nodes()[node];
  int l = -1, r = -1;
  if (!n.is_leaf()) {
    l = encode(t, n.left, out);
    r = encode(t, n.right, out);
  }
  out.is_leaf.push_back(n.is_leaf());
  out.left.push_back(l);
  out.right.push_back(r);
  out.word_ids.push_back(n.is_leaf() ? n.id : -1);
  return static_cast<int>(out.size()) - 1;
}

Vector compose_recursive(const ParseTree& t, int node, const EmbeddingTable& table,
                         const CurvatureSpace& s) {
  const auto& n = t.nodes()[node];
  if (n.is_leaf()) {
    auto row = table.row(n.id);
    return Vector(row.begin(), row.end());
  }
  return mobius_add(s, compose_recursive(t, n.left, table, s),
                    compose_recursive(t, n.right, table, s));
}

std::string shape(const ParseTree& t, int node) {
  const auto& n = t.nodes()[node];
  if (n.is_leaf()) return n.token;
  return "(" + shape(t, n.left) + " " + shape(t, n.right) + ")";
}

std::string shape(const ParseTree& t) { return shape(t, t.root()); }

}  // namespace

TEST_CASE("parse_sexpr structure") {
  const ParseTree t = parse_sexpr("( ( It is ) ( raining today ) )");
  CHECK(t.leaf_count() == 4);
  CHECK(t.nodes().size() == 7);
  CHECK(shape(t) == "((It is) (raining today))");
  const TraversalArrays a = post_order_arrays(t);
  CHECK(a.size() == 7);
  CHECK(a.root() == 6);

  const ParseTree dog = parse_sexpr("dog");
  CHECK(dog.leaf_count() == 1);
  const TraversalArrays d = post_order_arrays(dog);
  CHECK(d.size() == 1);
  CHECK(d.is_leaf == std::vector<std::uint8_t>{1});
  CHECK(d.root() == 0);
}

TEST_CASE("parse_sexpr maps tokens through the vocabulary") {
  Vocab vocab;
  const TokenId it = vocab.add("it");
  const TokenId is = vocab.add("is");
  const ParseTree t = parse_sexpr("( It ( is Raining ) )", vocab);
  CHECK(t.leaf_ids() == std::vector<TokenId>{it, is, Vocab::kUnk});
  CHECK(t.leaf_tokens() == std::vector<std::string>{"It", "is", "Raining"});
}

TEST_CASE("parse_sexpr accepts Penn-style labels") {
  const ParseTree t = parse_sexpr("(ROOT (S (NP (PRP It)) (VP (VBZ is) (VP (VBG raining)))))");
  CHECK(shape(t) == "(It (is raining))");
  // A glued token is a label, so compact "(a b)" reads as a unary node over b.
  CHECK(shape(parse_sexpr("(a b)")) == "b");
}

TEST_CASE("parse errors carry byte offsets") {
  try {
    parse_sexpr("( ( a b ) c");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 11);
  }
  CHECK_THROWS_AS(parse_sexpr(""), ParseError);
  CHECK_THROWS_AS(parse_sexpr("   "), ParseError);
  CHECK_THROWS_AS(parse_sexpr("( a ) )"), ParseError);
  CHECK_THROWS_AS(parse_sexpr("( )"), ParseError);
}

TEST_CASE("binarize") {
  CHECK(shape(binarize(read_sexpr("( a b c )"))) == "((a b) c)");
  CHECK(shape(binarize(read_sexpr("( a b c d )"))) == "(((a b) c) d)");
  CHECK(shape(binarize(read_sexpr("( ( a ) b )"))) == "(a b)");
  CHECK(shape(binarize(read_sexpr("( ( ( a ) ) )"))) == "a");
  CHECK(shape(binarize(read_sexpr("( ( a b ) ( c d ) )"))) == "((a b) (c d))");
}

TEST_CASE("post_order_arrays of ((a b) c)") {
  const TraversalArrays a = post_order_arrays(parse_sexpr("( ( a b ) c )"));
  CHECK(a.size() == 5);
  CHECK(a.left[4] == 2);
  CHECK(a.right[4] == 3);
  CHECK(a.is_leaf == std::vector<std::uint8_t>{1, 1, 0, 1, 0});
}

TEST_CASE("post_order_arrays agrees with a recursive encoding on random trees") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> leaves(1, 15);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = leaves(rng);
    const ParseTree t = random_tree(n, rng);
    TraversalArrays expected;
    encode(t, t.root(), expected);
    const TraversalArrays got = post_order_arrays(t);
    CAPTURE(shape(t));
    CHECK(got == expected);
    CHECK(got.size() == static_cast<std::size_t>(2 * n - 1));
    CHECK(got.root() == 2 * n - 2);
    std::vector<TokenId> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    CHECK(got.leaves() == order);
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (got.is_leaf[i]) continue;
      CHECK(got.left[i] < static_cast<int>(i));
      CHECK(got.right[i] < static_cast<int>(i));
    }
  }
}

TEST_CASE("array composition equals recursive composition exactly") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> leaves(1, 15);
  const CurvatureSpace s(5, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = leaves(rng);
    std::vector<double> data;
    for (int i = 0; i < n; ++i) {
      const Vector x = testing::random_ball_point(5, 0.5, rng);
      data.insert(data.end(), x.begin(), x.end());
    }
    const EmbeddingTable table(n, 5, data);
    const ParseTree t = random_tree(n, rng);
    CHECK(compose_tree(post_order_arrays(t), table, s) ==
          compose_recursive(t, t.root(), table, s));
  }
}
