#include "hypersent/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hypersent/model.hpp"

namespace hypersent {

namespace {

constexpr CompositionMethod kHyperbolicMethods[] = {
    CompositionMethod::TreeMobius, CompositionMethod::LeftChain, CompositionMethod::RightChain,
    CompositionMethod::MobiusAverage};
constexpr CompositionMethod kEuclideanMethods[] = {CompositionMethod::EuclideanAverage,
                                                   CompositionMethod::EuclideanSum};

constexpr const char* kHyperbolicFeatures[] = {
    "u,v",
    "mdiff",
    "u,v,mdiff",
    "u,v,mdiff,dist",
    "u,v,mdiff,cos,dist",
    "u,v,absmdiff",
    "u,v,mdiff,absmdiff,cos,dist,absdiff,hadamard,dot,edist",
};
constexpr const char* kEuclideanFeatures[] = {
    "u,v,absdiff,hadamard",
    "u,v,absdiff,hadamard,dot,edist",
    "u,v,cos",
};

struct Trial {
  CurvatureSpace space;
  EmbeddingTable embeddings;
  Sentence premise;
  Sentence hypothesis;
  std::vector<Sentence> negatives;
  FfnnParams ffnn;
  std::size_t gold = 0;
  bool positive = true;
  double alpha = 0.05;
  double beta = 0.5;
};

using Rng = std::mt19937_64;

int build_tree(ParseTree& tree, std::span<const TokenId> ids, Rng& rng) {
  if (ids.size() == 1) return tree.add_leaf("w" + std::to_string(ids[0]), ids[0]);
  std::uniform_int_distribution<std::size_t> cut(1, ids.size() - 1);
  const std::size_t k = cut(rng);
  const int l = build_tree(tree, ids.first(k), rng);
  const int r = build_tree(tree, ids.subspan(k), rng);
  return tree.add_internal(l, r);
}

Sentence random_sentence(std::size_t vocab, std::size_t max_leaves, Rng& rng) {
  std::uniform_int_distribution<std::size_t> len(1, max_leaves);
  std::uniform_int_distribution<TokenId> word(0, static_cast<TokenId>(vocab) - 1);
  std::vector<TokenId> ids(len(rng));
  for (auto& id : ids) id = word(rng);
  ParseTree tree;
  build_tree(tree, ids, rng);
  return Sentence::from_tree(tree);
}

std::vector<TokenId> bag(const Sentence& s) {
  std::vector<TokenId> t = s.tokens;
  std::sort(t.begin(), t.end());
  return t;
}

// Pairs whose token multisets coincide can compose to the same point (always
// for EA/ES), which puts the norm of their difference on its kink.
Sentence distinct_sentence(const Sentence& from, std::size_t vocab, std::size_t max_leaves,
                           Rng& rng) {
  for (;;) {
    Sentence s = random_sentence(vocab, max_leaves, rng);
    if (bag(s) != bag(from)) return s;
  }
}

Trial make_trial(const GradcheckCase& spec, const GradcheckOptions& opt, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> dims(2, opt.max_dim);
  const std::size_t dim = opt.dim ? opt.dim : dims(rng);
  const bool hyper = is_hyperbolic(spec.method);
  const double c = hyper ? std::exp(std::log(0.2) + unit(rng) * std::log(10.0)) : 0.0;

  Trial t;
  t.space = CurvatureSpace(dim, c);
  const std::size_t vocab = std::uniform_int_distribution<std::size_t>(3, 6)(rng);
  std::vector<double> data;
  std::normal_distribution<double> gauss;
  for (std::size_t r = 0; r < vocab; ++r) {
    Vector x(dim);
    for (double& xi : x) xi = gauss(rng);
    const double scale = (0.05 + 0.55 * unit(rng)) / (norm(x) * std::sqrt(hyper ? c : 1.0));
    for (double& xi : x) xi *= scale;
    data.insert(data.end(), x.begin(), x.end());
  }
  t.embeddings = EmbeddingTable(vocab, dim, std::move(data));
  t.premise = random_sentence(vocab, opt.max_leaves, rng);
  t.hypothesis = distinct_sentence(t.premise, vocab, opt.max_leaves, rng);
  t.positive = unit(rng) < 0.5;
  t.alpha = 0.05 + 3.0 * unit(rng);
  t.beta = unit(rng);

  if (spec.loss == LossKind::Disentangle) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    for (std::size_t i = 0; i < n; ++i)
      t.negatives.push_back(distinct_sentence(t.premise, vocab, opt.max_leaves, rng));
  }
  if (spec.loss == LossKind::CrossEntropy) {
    const std::size_t classes = unit(rng) < 0.5 ? 2 : 3;
    const std::size_t inputs = FeatureSpec::parse(spec.features).length(dim);
    t.ffnn = FfnnParams::glorot(inputs, opt.hidden, classes, rng);
    for (double& b : t.ffnn.b_hidden) b = 0.2 * unit(rng) - 0.1;
    for (double& b : t.ffnn.b_out) b = 0.2 * unit(rng) - 0.1;
    t.gold = std::uniform_int_distribution<std::size_t>(0, classes - 1)(rng);
  }
  return t;
}

// Central differences straddling a max(0, .) or |.| kink compare one-sided
// slopes; such trials are redrawn.
bool near_kink(const GradcheckCase& spec, const Trial& t) {
  constexpr double kMargin = 1e-3;
  const auto close = [](double x) { return std::fabs(x) < kMargin; };
  const Vector u = compose(spec.method, t.premise, t.embeddings, t.space);
  const Vector v = compose(spec.method, t.hypothesis, t.embeddings, t.space);
  switch (spec.loss) {
    case LossKind::CrossEntropy: {
      const FeatureSpec fs = FeatureSpec::parse(spec.features);
      const Vector f = build_features(u, v, fs, t.space);
      for (std::size_t r = 0; r < t.ffnn.hidden; ++r) {
        double z = t.ffnn.b_hidden[r];
        for (std::size_t k = 0; k < f.size(); ++k) z += t.ffnn.w_hidden[r * f.size() + k] * f[k];
        if (close(z)) return true;
      }
      const Vector md = t.space.hyperbolic() ? mobius_add(t.space, negate(u), v) : Vector{};
      for (std::size_t i = 0; i < u.size(); ++i)
        if (close(u[i] - v[i]) || (!md.empty() && close(md[i]))) return true;
      return false;
    }
    case LossKind::Margin: {
      const double e = pair_energy(u, v, t.beta, t.space);
      return close(norm(v) - norm(u)) || (!t.positive && close(t.alpha - e));
    }
    case LossKind::Order:
      return !t.positive && close(t.alpha - order_energy(u, v));
    case LossKind::Disentangle:
      return false;
  }
  return false;
}

double plain_loss(const GradcheckCase& spec, const Trial& t) {
  const auto enc = [&](const Sentence& s) { return compose(spec.method, s, t.embeddings, t.space); };
  const Vector u = enc(t.premise);
  const Vector v = enc(t.hypothesis);
  switch (spec.loss) {
    case LossKind::CrossEntropy: {
      const Vector f = build_features(u, v, FeatureSpec::parse(spec.features), t.space);
      return cross_entropy(ffnn_forward(t.ffnn, f), t.gold);
    }
    case LossKind::Margin:
      return margin_term(pair_energy(u, v, t.beta, t.space), t.positive, t.alpha);
    case LossKind::Disentangle: {
      std::vector<double> neg;
      for (const Sentence& s : t.negatives) neg.push_back(distance(t.space, u, enc(s)));
      return disentangle_loss(distance(t.space, u, v), neg);
    }
    case LossKind::Order:
      return margin_term(order_energy(u, v), t.positive, t.alpha);
  }
  return 0.0;
}

GradientRecord graph_gradient(const GradcheckCase& spec, const Trial& t) {
  Graph g;
  const auto enc = [&](const Sentence& s) {
    return compose_node(g, spec.method, s, t.embeddings, t.space);
  };
  const NodeId u = enc(t.premise);
  const NodeId v = enc(t.hypothesis);
  const double c = t.space.c;
  auto dist = [&](NodeId a, NodeId b) {
    return g.distance_from_norm(c, g.norm(g.mobius_add(c, g.neg(a), b)));
  };
  NodeId loss = 0;
  switch (spec.loss) {
    case LossKind::CrossEntropy: {
      const NodeId f = build_features_node(g, u, v, FeatureSpec::parse(spec.features), t.space);
      loss = g.softmax_cross_entropy(ffnn_logits_node(g, t.ffnn, f), t.gold);
      break;
    }
    case LossKind::Margin:
      loss = margin_term_node(g, pair_energy_node(g, u, v, t.beta, t.space), t.positive, t.alpha);
      break;
    case LossKind::Disentangle: {
      std::vector<NodeId> neg;
      for (const Sentence& s : t.negatives) neg.push_back(dist(u, enc(s)));
      loss = disentangle_loss_node(g, dist(u, v), neg);
      break;
    }
    case LossKind::Order:
      loss = margin_term_node(g, order_energy_node(g, u, v), t.positive, t.alpha);
      break;
  }
  return backward(g, loss);
}

void corrupt(GradientRecord& grads) {
  for (auto* part : {&grads.hyperbolic, &grads.euclidean})
    for (auto& [id, g] : *part)
      for (double& x : g) x = x * (1.0 + 1e-3) + 1e-6;
}

}  // namespace

std::string_view to_string(LossKind loss) {
  switch (loss) {
    case LossKind::CrossEntropy: return "cross-entropy";
    case LossKind::Margin: return "margin";
    case LossKind::Disentangle: return "disentangle";
    case LossKind::Order: return "order";
  }
  return "?";
}

std::string GradcheckCase::name() const {
  std::string out = std::string(to_string(method)) + "/" + std::string(to_string(loss));
  if (loss == LossKind::CrossEntropy) out += "[" + features + "]";
  return out;
}

std::vector<GradcheckCase> default_cases() {
  std::vector<GradcheckCase> cases;
  for (CompositionMethod m : kHyperbolicMethods) {
    for (const char* f : kHyperbolicFeatures) cases.push_back({m, LossKind::CrossEntropy, f});
    cases.push_back({m, LossKind::Margin, {}});
    cases.push_back({m, LossKind::Disentangle, {}});
  }
  for (CompositionMethod m : kEuclideanMethods) {
    for (const char* f : kEuclideanFeatures) cases.push_back({m, LossKind::CrossEntropy, f});
    cases.push_back({m, LossKind::Order, {}});
  }
  return cases;
}

CaseReport check_case(const GradcheckCase& spec, const GradcheckOptions& opt) {
  CaseReport report{spec, 0, 0, 0.0};
  const std::string name = spec.name();
  std::vector<std::uint32_t> name_seed(name.begin(), name.end());
  for (std::size_t trial = 0; trial < opt.trials; ++trial) {
    std::vector<std::uint32_t> words = name_seed;
    words.push_back(static_cast<std::uint32_t>(opt.seed));
    words.push_back(static_cast<std::uint32_t>(opt.seed >> 32));
    words.push_back(static_cast<std::uint32_t>(trial));
    std::seed_seq seq(words.begin(), words.end());
    Rng rng(seq);
    Trial t = make_trial(spec, opt, rng);
    while (near_kink(spec, t)) t = make_trial(spec, opt, rng);

    std::vector<ParamBlock> blocks;
    for (std::size_t r = 0; r < t.embeddings.rows(); ++r)
      blocks.push_back({{ParamKind::Embedding, r}, t.embeddings.row(static_cast<TokenId>(r))});
    if (spec.loss == LossKind::CrossEntropy)
      for (const ParamBlock& b : t.ffnn.param_blocks()) blocks.push_back(b);

    const Objective objective{
        [&] { return plain_loss(spec, t); },
        [&] {
          GradientRecord g = graph_gradient(spec, t);
          if (opt.corrupt) corrupt(g);
          return g;
        },
    };
    double err;
    try {
      const double floor = std::max(1e-8, opt.noise_floor * std::max(1.0, std::fabs(plain_loss(spec, t))));
      err = finite_diff_check(objective, blocks, opt.h, floor);
    } catch (const std::exception&) {
      err = std::numeric_limits<double>::infinity();
    }
    ++report.trials;
    if (!(err < opt.tolerance)) ++report.failures;
    if (!(err <= report.max_error)) report.max_error = err;
  }
  return report;
}

GradcheckReport run_gradcheck(std::span<const GradcheckCase> cases, const GradcheckOptions& opt) {
  GradcheckReport report;
  report.tolerance = opt.tolerance;
  for (const GradcheckCase& c : cases) {
    report.cases.push_back(check_case(c, opt));
    report.max_error = std::max(report.max_error, report.cases.back().max_error);
  }
  return report;
}

nlohmann::json to_json(const GradcheckReport& report) {
  nlohmann::json cases = nlohmann::json::array();
  for (const CaseReport& c : report.cases) {
    cases.push_back({{"case", c.spec.name()},
                     {"trials", c.trials},
                     {"failures", c.failures},
                     {"max_error", std::isfinite(c.max_error) ? nlohmann::json(c.max_error)
                                                              : nlohmann::json("inf")}});
  }
  return {{"cases", cases},
          {"max_error", std::isfinite(report.max_error) ? nlohmann::json(report.max_error)
                                                        : nlohmann::json("inf")},
          {"tolerance", report.tolerance},
          {"passed", report.passed()}};
}

}  // namespace hypersent
