#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "helpers.hpp"
#include "hypersent/model.hpp"

using namespace hypersent;

namespace {

ThresholdChoice brute_force_threshold(const std::vector<double>& scores,
                                      const std::vector<bool>& entails) {
  std::set<double> distinct(scores.begin(), scores.end());
  std::vector<double> candidates{-std::numeric_limits<double>::infinity(),
                                 std::numeric_limits<double>::infinity()};
  for (auto it = distinct.begin(); std::next(it) != distinct.end(); ++it)
    candidates.push_back((*it + *std::next(it)) / 2);
  std::sort(candidates.begin(), candidates.end());
  ThresholdChoice best{0, -1, 0};
  for (double t : candidates) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) correct += (scores[i] < t) == entails[i];
    if (static_cast<double>(correct) > best.accuracy * static_cast<double>(scores.size()) ||
        best.accuracy < 0)
      best = {t, static_cast<double>(correct) / static_cast<double>(scores.size()), correct};
  }
  return best;
}

}  // namespace

TEST_CASE("feature spec lengths and layout") {
  CHECK(FeatureSpec::parse("u,v").length(5) == 10);
  const FeatureSpec full = FeatureSpec::parse("u,v,mdiff,cos,dist");
  CHECK(full.length(50) == 152);
  CHECK(FeatureSpec::parse(full.to_string()) == full);
  CHECK(FeatureSpec::parse("dot,u").layout() ==
        std::vector<FeatureBlock>{FeatureBlock::U, FeatureBlock::Dot});
  CHECK_THROWS(FeatureSpec::parse("u,bogus"));
  CHECK_THROWS(FeatureSpec::parse(""));
  CHECK_THROWS(check_feature_space(full, CurvatureSpace(5, 0.0)));
  CHECK_NOTHROW(check_feature_space(FeatureSpec::parse("u,v,absdiff,hadamard,dot,edist"),
                                    CurvatureSpace(5, 0.0)));
}

TEST_CASE("features of an identical pair") {
  const CurvatureSpace s(3, 1.0);
  const Vector u{0.2, -0.1, 0.4};
  const Vector f = build_features(u, u, FeatureSpec::parse("cos,mdiff,dist,u"), s);
  REQUIRE(f.size() == 8);
  for (int i = 0; i < 3; ++i) CHECK(f[i] == doctest::Approx(0.0));
  for (int i = 0; i < 3; ++i) CHECK(f[3 + i] == u[i]);
  CHECK(f[6] == doctest::Approx(1.0));
  CHECK(f[7] == doctest::Approx(0.0));
}

TEST_CASE("Euclidean features") {
  const CurvatureSpace s(2, 0.0);
  const Vector f = build_features(Vector{1, 2}, Vector{4, -2},
                                  FeatureSpec::parse("absdiff,hadamard,dot,edist"), s);
  CHECK(f == Vector{3, 4, 4, -4, 0, 5});
}

TEST_CASE("ffnn forward") {
  std::mt19937_64 rng(1);
  const FfnnParams p = FfnnParams::glorot(7, 16, 3, rng);
  CHECK(p.b_hidden == Vector(16, 0.0));
  const double limit = std::sqrt(6.0 / (7 + 16));
  for (double w : p.w_hidden) CHECK(std::abs(w) <= limit);
  std::normal_distribution<double> g(0, 3);
  for (int trial = 0; trial < 100; ++trial) {
    Vector x(7);
    for (double& v : x) v = g(rng);
    const Vector probs = ffnn_forward(p, x);
    double sum = 0;
    for (double q : probs) {
      CHECK(q > 0);
      CHECK(q < 1);
      sum += q;
    }
    CHECK(std::abs(sum - 1) < 1e-12);
  }

  const FfnnParams zero(4, 5, 3);
  for (double q : ffnn_forward(zero, Vector{1, -2, 3, 4})) CHECK(q == doctest::Approx(1.0 / 3));

  // One input, one hidden unit, two classes.
  FfnnParams toy(1, 1, 2);
  toy.w_hidden = {2.0};
  toy.b_hidden = {-1.0};
  toy.w_out = {1.5, -0.5};
  toy.b_out = {0.0, 0.25};
  // h = relu(2 * 3 - 1) = 5; logits = (7.5, -2.25)
  const Vector logits = ffnn_logits(toy, Vector{3.0});
  CHECK(logits == Vector{7.5, -2.25});
  const Vector probs = ffnn_forward(toy, Vector{3.0});
  CHECK(probs[1] == doctest::Approx(1.0 / (1.0 + std::exp(9.75))));
  // Negative pre-activation is cut by the ReLU.
  CHECK(ffnn_logits(toy, Vector{0.25}) == Vector{0.0, 0.25});
}

TEST_CASE("cross entropy") {
  CHECK(cross_entropy(Vector{0.0, 1.0}, 1) == 0.0);
  CHECK(cross_entropy(Vector{1.0 / 3, 1.0 / 3, 1.0 / 3}, 0) == doctest::Approx(std::log(3.0)));
  CHECK(cross_entropy(Vector{0.5, 0.5}, 0) == doctest::Approx(std::log(2.0)));
  CHECK(std::isfinite(cross_entropy(Vector{1.0, 0.0}, 1)));
}

TEST_CASE("pair energy") {
  const CurvatureSpace s(2, 1.0);
  CHECK(pair_energy(Vector{0, 0}, Vector{0.5, 0}, 0.5, s) ==
        doctest::Approx(0.5 * std::log(3.0) + 0.25));
  CHECK(pair_energy(Vector{0, 0}, Vector{0.5, 0}, 0.5, s) == doctest::Approx(0.7993).epsilon(1e-4));
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector u = testing::random_ball_point(2, 0.95, rng);
    const Vector v = testing::random_ball_point(2, 0.95, rng);
    for (double beta : {0.0, 0.3, 1.0}) {
      CHECK(pair_energy(u, u, beta, s) == doctest::Approx(0.0));
      CHECK(pair_energy(u, v, beta, s) >= 0.0);
    }
    CHECK(pair_energy(u, v, 1.0, s) == doctest::Approx(distance(s, u, v)));
  }
}

TEST_CASE("margin loss") {
  const CurvatureSpace s(2, 1.0);
  const SentencePair pos{{0, 0}, {0.5, 0}};
  const SentencePair same{{0.3, 0.1}, {0.3, 0.1}};
  const double e = pair_energy(pos.premise, pos.hypothesis, 0.5, s);
  CHECK(margin_loss(std::vector{pos}, {}, 0.05, 0.5, s) == doctest::Approx(e));
  CHECK(margin_loss({}, std::vector{pos}, 0.05, 0.5, s) == 0.0);
  CHECK(margin_loss({}, std::vector{same}, 0.05, 0.5, s) == doctest::Approx(0.05));
  CHECK(margin_term(0.01, false, 0.05) == doctest::Approx(0.04));
  CHECK(margin_term(0.2, true, 0.05) == 0.2);

  // Moving a positive hypothesis toward its premise never raises the loss.
  double previous = std::numeric_limits<double>::infinity();
  for (double x = 0.9; x >= 0.0; x -= 0.05) {
    const SentencePair p{{0, 0}, {x, 0}};
    const double loss = margin_loss(std::vector{p}, std::vector{same}, 0.05, 0.5, s);
    CHECK(loss >= 0.0);
    CHECK(loss <= previous);
    previous = loss;
  }
}

TEST_CASE("order energy") {
  CHECK(order_energy(Vector{1, 1}, Vector{0, -3}) == 0.0);
  CHECK(order_energy(Vector{0, 0}, Vector{1, 1}) == 2.0);
  CHECK(order_energy(Vector{2, 0}, Vector{0, 1}) == 1.0);
  CHECK(order_energy(Vector{0, 1}, Vector{2, 0}) == 4.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(-1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    Vector x(3), y(3);
    for (int i = 0; i < 3; ++i) {
      x[i] = coord(rng);
      y[i] = coord(rng);
    }
    bool below = true;
    for (int i = 0; i < 3; ++i) below = below && y[i] <= x[i];
    CHECK((order_energy(x, y) == 0.0) == below);
  }
}

TEST_CASE("disentangle loss") {
  CHECK(disentangle_loss(0.7, {}) == doctest::Approx(0.0));
  CHECK(disentangle_loss(0.7, Vector{0.7}) == doctest::Approx(std::log(2.0)));
  const double dropped = disentangle_loss(0.4, Vector{0.9});
  CHECK(std::abs(disentangle_loss(0.4, Vector{0.9, 1e6}) - dropped) < 1e-9);
  CHECK(disentangle_loss(0.4, Vector{0.2, 5.0}) > 0.0);
}

TEST_CASE("threshold selection examples") {
  const ThresholdChoice two = select_threshold(Vector{0.1, 0.9}, {true, false});
  CHECK(two.threshold == doctest::Approx(0.5));
  CHECK(two.accuracy == 1.0);

  const ThresholdChoice sep =
      select_threshold(Vector{0.1, 0.2, 0.3, 0.7, 0.8}, {true, true, true, false, false});
  CHECK(sep.threshold == doctest::Approx(0.5));
  CHECK(sep.correct == 5);

  const ThresholdChoice none = select_threshold(Vector{0.1, 0.2}, {false, false});
  CHECK(none.threshold == -std::numeric_limits<double>::infinity());
  const ThresholdChoice all = select_threshold(Vector{0.1, 0.2}, {true, true});
  CHECK(all.threshold == std::numeric_limits<double>::infinity());
  CHECK_THROWS(select_threshold(Vector{}, {}));
}

TEST_CASE("threshold selection matches brute force") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> coarse(0, 30);
  std::uniform_real_distribution<double> fine(0, 1);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> scores(100);
    std::vector<bool> labels(100);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      // Half the instances use a coarse grid so ties are common.
      scores[i] = trial % 2 ? coarse(rng) / 10.0 : fine(rng);
      labels[i] = coin(rng) ? scores[i] < 1.5 || coin(rng) : coin(rng);
    }
    const ThresholdChoice got = select_threshold(scores, labels);
    const ThresholdChoice expected = brute_force_threshold(scores, labels);
    CHECK(got.correct == expected.correct);
    CHECK(got.threshold == expected.threshold);
  }
}

TEST_CASE("graph losses match plain losses") {
  const CurvatureSpace s(3, 1.0);
  const Vector u{0.1, 0.4, -0.2}, v{-0.3, 0.2, 0.5};
  Graph g;
  const NodeId nu = g.constant(u), nv = g.constant(v);
  CHECK(g.scalar(pair_energy_node(g, nu, nv, 0.5, s)) ==
        doctest::Approx(pair_energy(u, v, 0.5, s)).epsilon(1e-14));
  CHECK(g.scalar(order_energy_node(g, nu, nv)) == doctest::Approx(order_energy(u, v)));
  const NodeId d1 = g.scalar_constant(0.3), d2 = g.scalar_constant(0.8);
  const NodeId negs[] = {d2};
  CHECK(g.scalar(disentangle_loss_node(g, d1, negs)) ==
        doctest::Approx(disentangle_loss(0.3, Vector{0.8})));
  const NodeId f = build_features_node(g, nu, nv, FeatureSpec::parse("u,v,mdiff,absmdiff,cos,dist"), s);
  const auto fv = g.value(f);
  CHECK(testing::max_abs_diff(Vector(fv.begin(), fv.end()),
                              build_features(u, v, FeatureSpec::parse("u,v,mdiff,absmdiff,cos,dist"), s)) <
        1e-14);
}
