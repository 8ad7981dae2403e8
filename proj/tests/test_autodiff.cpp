#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "helpers.hpp"
#include "hypersent/autodiff.hpp"
#include "hypersent/compose.hpp"
#include "hypersent/model.hpp"

using namespace hypersent;
using testing::random_ball_point;

namespace {

constexpr ParamRef kA{ParamKind::Embedding, 0};
constexpr ParamRef kB{ParamKind::Embedding, 1};

// Checks a two-input vector op through a random linear read-out.
double check_binary(const std::function<NodeId(Graph&, NodeId, NodeId)>& op, Vector a, Vector b,
                    std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Graph probe;
  const std::size_t out =
      probe.value(op(probe, probe.parameter(kA, a), probe.parameter(kB, b))).size();
  Vector w(out);
  for (double& x : w) x = g(rng);
  auto build = [&](Graph& gr) {
    const NodeId y = op(gr, gr.parameter(kA, a), gr.parameter(kB, b));
    return gr.dot(gr.constant(w), y);
  };
  const Objective obj{[&] {
                        Graph gr;
                        return gr.scalar(build(gr));
                      },
                      [&] {
                        Graph gr;
                        return backward(gr, build(gr));
                      }};
  const ParamBlock blocks[] = {{kA, a}, {kB, b}};
  return finite_diff_check(obj, blocks, 1e-6);
}

}  // namespace

TEST_CASE("gradient of a squared norm") {
  Vector theta{0.3, -0.2, 0.7};
  Graph g;
  const NodeId loss = g.squared_norm(g.parameter(kA, theta));
  const GradientRecord r = backward(g, loss);
  const Vector* grad = r.find(kA);
  REQUIRE(grad);
  for (int i = 0; i < 3; ++i) CHECK((*grad)[i] == doctest::Approx(2 * theta[i]));
}

TEST_CASE("distance between coincident points has a finite gradient") {
  Vector u{0.2, 0.1};
  Graph g;
  const NodeId a = g.parameter(kA, u), b = g.parameter(kB, u);
  const NodeId d = g.distance_from_norm(1.0, g.norm(g.mobius_add(1.0, g.neg(a), b)));
  CHECK(g.scalar(d) == doctest::Approx(0.0));
  const GradientRecord r = backward(g, d);
  for (const auto* part : {&r.hyperbolic})
    for (const auto& [id, grad] : *part)
      for (double x : grad) CHECK(std::isfinite(x));
}

TEST_CASE("backward requires a scalar loss") {
  Vector u{0.2, 0.1};
  Graph g;
  const NodeId a = g.parameter(kA, u);
  CHECK_THROWS_AS(backward(g, a), AutodiffError);
}

TEST_CASE("gradients of a reused parameter are summed") {
  Vector u{0.2, -0.4};
  Graph g;
  const NodeId a1 = g.parameter(kA, u), a2 = g.parameter(kA, u);
  const NodeId loss = g.dot(a1, a2);  // |u|^2
  const GradientRecord r = backward(g, loss);
  const Vector* grad = r.find(kA);
  REQUIRE(grad);
  CHECK((*grad)[0] == doctest::Approx(0.4));
  CHECK((*grad)[1] == doctest::Approx(-0.8));
}

TEST_CASE("riemannian rescale and rsgd step") {
  const CurvatureSpace s(2, 1.0);
  const Vector g{4.0, -8.0};
  CHECK(riemannian_rescale(s, Vector{0, 0}, g) == Vector{1.0, -2.0});
  CHECK(riemannian_rescale(CurvatureSpace(2, 0.0), Vector{5, 5}, g) == Vector{1.0, -2.0});
  const Vector theta{std::sqrt(0.75), 0.0};
  const Vector r = riemannian_rescale(s, theta, g);
  CHECK(r[0] == doctest::Approx(4.0 * 0.015625));
  CHECK(r[1] == doctest::Approx(-8.0 * 0.015625));

  CHECK(rsgd_step(s, Vector{0.1, 0.2}, Vector{0, 0}, 0.5) == Vector{0.1, 0.2});
  const Vector out = rsgd_step(s, Vector{0, 0}, Vector{4, 0}, 1.0);
  CHECK(out[0] == doctest::Approx(-1.0 / 1.00001).epsilon(1e-15));
  CHECK(out[1] == 0.0);
  CHECK(s.contains(out));
}

TEST_CASE("finite_diff_check on a quadratic") {
  Vector theta{0.3, -1.2, 2.0};
  const Objective obj{[&] { return squared_norm(theta); },
                      [&] {
                        Graph g;
                        return backward(g, g.squared_norm(g.parameter(kA, theta)));
                      }};
  const ParamBlock blocks[] = {{kA, theta}};
  CHECK(finite_diff_check(obj, blocks, 1e-5) < 1e-8);
  CHECK(theta == Vector{0.3, -1.2, 2.0});

  const Objective bad{[] { return NAN; }, [] { return GradientRecord{}; }};
  CHECK_THROWS_AS(finite_diff_check(bad, blocks, 1e-5), AutodiffError);
}

TEST_CASE("finite_diff_check detects a wrong gradient") {
  Vector theta{0.3, -1.2};
  const Objective obj{[&] { return squared_norm(theta); },
                      [&] {
                        GradientRecord r;
                        r.slot(kA, 2) = {0.6, -2.3};
                        return r;
                      }};
  const ParamBlock blocks[] = {{kA, theta}};
  CHECK(finite_diff_check(obj, blocks, 1e-5) > 1e-2);
}

TEST_CASE("vector-Jacobian products of individual ops") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 2 + trial % 4;
    const double c = trial % 2 ? 0.3 : 1.7;
    const Vector a = random_ball_point(d, 0.85 / std::sqrt(c), rng);
    const Vector b = random_ball_point(d, 0.85 / std::sqrt(c), rng);
    CAPTURE(trial);
    CHECK(check_binary([&](Graph& g, NodeId x, NodeId y) { return g.mobius_add(c, x, y); }, a, b,
                       rng) < 1e-5);
    CHECK(check_binary([&](Graph& g, NodeId x, NodeId) { return g.mobius_scale(c, 0.37, x); }, a,
                       b, rng) < 1e-5);
    CHECK(check_binary([&](Graph& g, NodeId x, NodeId) { return g.mobius_scale(c, 3.0, x); }, a,
                       b, rng) < 1e-5);
    CHECK(check_binary([](Graph& g, NodeId x, NodeId y) { return g.cosine(x, y); }, a, b, rng) <
          1e-5);
    CHECK(check_binary([](Graph& g, NodeId x, NodeId y) { return g.hadamard(x, y); }, a, b, rng) <
          1e-5);
    CHECK(check_binary([](Graph& g, NodeId x, NodeId y) { return g.dot(x, y); }, a, b, rng) <
          1e-5);
    CHECK(check_binary(
              [&](Graph& g, NodeId x, NodeId) { return g.distance_from_norm(c, g.norm(x)); }, a,
              b, rng) < 1e-5);
    CHECK(check_binary(
              [](Graph& g, NodeId x, NodeId y) {
                const NodeId parts[] = {x, y, g.abs(x)};
                return g.log_sum_exp(g.concat(parts));
              },
              a, b, rng) < 1e-5);
    CHECK(check_binary(
              [](Graph& g, NodeId x, NodeId y) {
                return g.softmax_cross_entropy(g.hadamard(x, y), 1);
              },
              a, b, rng) < 1e-5);
  }
}

TEST_CASE("dense layer gradients") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  Vector w(6), x(3), b(2);
  for (auto* v : {&w, &x, &b})
    for (double& t : *v) t = g(rng);
  const ParamRef rw{ParamKind::Euclidean, 0}, rx{ParamKind::Euclidean, 1},
      rb{ParamKind::Euclidean, 2};
  auto build = [&](Graph& gr) {
    const NodeId y = gr.dense(gr.parameter(rw, w), gr.parameter(rx, x), gr.parameter(rb, b), 2, 3);
    return gr.softmax_cross_entropy(y, 0);
  };
  const Objective obj{[&] {
                        Graph gr;
                        return gr.scalar(build(gr));
                      },
                      [&] {
                        Graph gr;
                        return backward(gr, build(gr));
                      }};
  const ParamBlock blocks[] = {{rw, w}, {rx, x}, {rb, b}};
  CHECK(finite_diff_check(obj, blocks, 1e-5) < 1e-6);
}

TEST_CASE("margin loss on one positive pair matches finite differences") {
  const CurvatureSpace s(3, 1.0);
  Vector u{0.1, 0.4, -0.2}, v{-0.3, 0.2, 0.5};
  auto build = [&](Graph& g) {
    return margin_term_node(g, pair_energy_node(g, g.parameter(kA, u), g.parameter(kB, v), 0.5, s),
                            true, 0.05);
  };
  const Objective obj{[&] { return margin_term(pair_energy(u, v, 0.5, s), true, 0.05); },
                      [&] {
                        Graph g;
                        return backward(g, build(g));
                      }};
  const ParamBlock blocks[] = {{kA, u}, {kB, v}};
  CHECK(finite_diff_check(obj, blocks, 1e-5) < 1e-4);
}

TEST_CASE("cross-entropy through tree composition and FFNN matches finite differences") {
  const CurvatureSpace s(4, 1.0);
  std::mt19937_64 rng(21);
  std::vector<double> data;
  for (int r = 0; r < 4; ++r) {
    const Vector x = random_ball_point(4, 0.6, rng);
    data.insert(data.end(), x.begin(), x.end());
  }
  EmbeddingTable table(4, 4, data);
  ParseTree t;
  const int a = t.add_leaf("a", 0), b = t.add_leaf("b", 1);
  const int ab = t.add_internal(a, b);
  t.add_internal(ab, t.add_leaf("c", 2));
  const Sentence premise = Sentence::from_tree(t);
  ParseTree h;
  h.add_internal(h.add_leaf("d", 3), h.add_leaf("a", 0));
  const Sentence hyp = Sentence::from_tree(h);
  const FeatureSpec spec = FeatureSpec::parse("u,v,mdiff,cos,dist");
  FfnnParams ffnn = FfnnParams::glorot(spec.length(4), 16, 2, rng);

  const Objective obj{
      [&] {
        const Vector f = build_features(compose(CompositionMethod::TreeMobius, premise, table, s),
                                        compose(CompositionMethod::TreeMobius, hyp, table, s),
                                        spec, s);
        return cross_entropy(ffnn_forward(ffnn, f), 1);
      },
      [&] {
        Graph g;
        const NodeId u = compose_node(g, CompositionMethod::TreeMobius, premise, table, s);
        const NodeId v = compose_node(g, CompositionMethod::TreeMobius, hyp, table, s);
        const NodeId f = build_features_node(g, u, v, spec, s);
        return backward(g, g.softmax_cross_entropy(ffnn_logits_node(g, ffnn, f), 1));
      }};
  std::vector<ParamBlock> blocks;
  for (int r = 0; r < 4; ++r) blocks.push_back({{ParamKind::Embedding, std::size_t(r)}, table.row(r)});
  for (const ParamBlock& b : ffnn.param_blocks()) blocks.push_back(b);
  CHECK(finite_diff_check(obj, blocks, 1e-5) < 1e-4);
}

TEST_CASE("backward is deterministic") {
  const CurvatureSpace s(3, 1.0);
  Vector u{0.1, 0.4, -0.2}, v{-0.3, 0.2, 0.5};
  auto run = [&] {
    Graph g;
    const NodeId e = pair_energy_node(g, g.parameter(kA, u), g.parameter(kB, v), 0.5, s);
    return backward(g, e);
  };
  CHECK(run() == run());
}
