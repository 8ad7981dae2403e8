#include "hypersent/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <cctype>
#include <stdexcept>

namespace hypersent {

namespace {

struct BlockInfo {
  FeatureBlock block;
  std::string_view token;
  bool scalar;
  bool hyperbolic;
};

constexpr BlockInfo kBlocks[] = {
    {FeatureBlock::U, "u", false, false},
    {FeatureBlock::V, "v", false, false},
    {FeatureBlock::MobiusDiff, "mdiff", false, true},
    {FeatureBlock::AbsMobiusDiff, "absmdiff", false, true},
    {FeatureBlock::Cosine, "cos", true, false},
    {FeatureBlock::HypDist, "dist", true, true},
    {FeatureBlock::EuclidAbsDiff, "absdiff", false, false},
    {FeatureBlock::Hadamard, "hadamard", false, false},
    {FeatureBlock::Dot, "dot", true, false},
    {FeatureBlock::EuclidDist, "edist", true, false},
};

const BlockInfo& info(FeatureBlock block) {
  for (const auto& b : kBlocks)
    if (b.block == block) return b;
  throw std::invalid_argument("unknown feature block");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view feature_token(FeatureBlock block) { return info(block).token; }
bool is_scalar_block(FeatureBlock block) { return info(block).scalar; }
bool is_hyperbolic_block(FeatureBlock block) { return info(block).hyperbolic; }

FeatureSpec FeatureSpec::parse(std::string_view text) {
  FeatureSpec spec;
  while (true) {
    const auto comma = text.find(',');
    const std::string_view token = trim(text.substr(0, comma));
    bool found = false;
    for (const auto& b : kBlocks) {
      if (b.token == token) {
        spec.blocks.push_back(b.block);
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("unknown feature block '" + std::string(token) + "'");
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return spec;
}

std::string FeatureSpec::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) out += ',';
    out += feature_token(blocks[i]);
  }
  return out;
}

std::size_t FeatureSpec::length(std::size_t dim) const {
  std::size_t n = 0;
  for (FeatureBlock b : blocks) n += is_scalar_block(b) ? 1 : dim;
  return n;
}

bool FeatureSpec::uses_hyperbolic() const {
  return std::any_of(blocks.begin(), blocks.end(), is_hyperbolic_block);
}

std::vector<FeatureBlock> FeatureSpec::layout() const {
  std::vector<FeatureBlock> out;
  for (FeatureBlock b : blocks)
    if (!is_scalar_block(b)) out.push_back(b);
  for (FeatureBlock b : blocks)
    if (is_scalar_block(b)) out.push_back(b);
  return out;
}

void check_feature_space(const FeatureSpec& spec, const CurvatureSpace& space) {
  if (spec.blocks.empty()) throw std::invalid_argument("feature spec is empty");
  if (spec.uses_hyperbolic() && !space.hyperbolic())
    throw std::invalid_argument("feature spec '" + spec.to_string() +
                                "' uses hyperbolic blocks but the space is Euclidean (c = 0)");
}

Vector build_features(std::span<const double> u, std::span<const double> v,
                      const FeatureSpec& spec, const CurvatureSpace& space) {
  check_feature_space(spec, space);
  space.validate(u);
  space.validate(v);
  const std::size_t d = space.dim;

  Vector mdiff;
  if (std::any_of(spec.blocks.begin(), spec.blocks.end(), [](FeatureBlock b) {
        return b == FeatureBlock::MobiusDiff || b == FeatureBlock::AbsMobiusDiff ||
               b == FeatureBlock::HypDist;
      })) {
    mdiff.resize(d);
    kernel::mobius_add(space.c, negate(u), v, mdiff);
  }

  Vector out;
  out.reserve(spec.length(d));
  for (FeatureBlock b : spec.layout()) {
    switch (b) {
      case FeatureBlock::U: out.insert(out.end(), u.begin(), u.end()); break;
      case FeatureBlock::V: out.insert(out.end(), v.begin(), v.end()); break;
      case FeatureBlock::MobiusDiff: out.insert(out.end(), mdiff.begin(), mdiff.end()); break;
      case FeatureBlock::AbsMobiusDiff:
        for (double x : mdiff) out.push_back(std::fabs(x));
        break;
      case FeatureBlock::Cosine: out.push_back(cosine(u, v)); break;
      case FeatureBlock::HypDist: out.push_back(kernel::distance_from_norm(space.c, norm(mdiff))); break;
      case FeatureBlock::EuclidAbsDiff:
        for (std::size_t i = 0; i < d; ++i) out.push_back(std::fabs(u[i] - v[i]));
        break;
      case FeatureBlock::Hadamard:
        for (std::size_t i = 0; i < d; ++i) out.push_back(u[i] * v[i]);
        break;
      case FeatureBlock::Dot: out.push_back(dot(u, v)); break;
      case FeatureBlock::EuclidDist: {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += (u[i] - v[i]) * (u[i] - v[i]);
        out.push_back(std::sqrt(s));
        break;
      }
    }
  }
  return out;
}

NodeId build_features_node(Graph& graph, NodeId u, NodeId v, const FeatureSpec& spec,
                           const CurvatureSpace& space) {
  check_feature_space(spec, space);
  std::optional<NodeId> mdiff, diff;
  auto mobius_diff = [&] {
    if (!mdiff) mdiff = graph.mobius_add(space.c, graph.neg(u), v);
    return *mdiff;
  };
  auto euclid_diff = [&] {
    if (!diff) diff = graph.sub(u, v);
    return *diff;
  };

  std::vector<NodeId> parts;
  for (FeatureBlock b : spec.layout()) {
    switch (b) {
      case FeatureBlock::U: parts.push_back(u); break;
      case FeatureBlock::V: parts.push_back(v); break;
      case FeatureBlock::MobiusDiff: parts.push_back(mobius_diff()); break;
      case FeatureBlock::AbsMobiusDiff: parts.push_back(graph.abs(mobius_diff())); break;
      case FeatureBlock::Cosine: parts.push_back(graph.cosine(u, v)); break;
      case FeatureBlock::HypDist:
        parts.push_back(graph.distance_from_norm(space.c, graph.norm(mobius_diff())));
        break;
      case FeatureBlock::EuclidAbsDiff: parts.push_back(graph.abs(euclid_diff())); break;
      case FeatureBlock::Hadamard: parts.push_back(graph.hadamard(u, v)); break;
      case FeatureBlock::Dot: parts.push_back(graph.dot(u, v)); break;
      case FeatureBlock::EuclidDist: parts.push_back(graph.norm(euclid_diff())); break;
    }
  }
  return graph.concat(parts);
}

FfnnParams::FfnnParams(std::size_t inputs_, std::size_t hidden_, std::size_t classes_)
    : inputs(inputs_),
      hidden(hidden_),
      classes(classes_),
      w_hidden(hidden_ * inputs_, 0.0),
      b_hidden(hidden_, 0.0),
      w_out(classes_ * hidden_, 0.0),
      b_out(classes_, 0.0) {}

FfnnParams FfnnParams::glorot(std::size_t inputs, std::size_t hidden, std::size_t classes,
                              std::mt19937_64& rng) {
  FfnnParams p(inputs, hidden, classes);
  auto fill = [&](Vector& w, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& x : w) x = dist(rng);
  };
  fill(p.w_hidden, inputs, hidden);
  fill(p.w_out, hidden, classes);
  return p;
}

Vector& FfnnParams::block(std::size_t index) {
  switch (index) {
    case kWHidden: return w_hidden;
    case kBHidden: return b_hidden;
    case kWOut: return w_out;
    case kBOut: return b_out;
  }
  throw std::out_of_range("FfnnParams: no such block");
}

const Vector& FfnnParams::block(std::size_t index) const {
  return const_cast<FfnnParams*>(this)->block(index);
}

std::array<ParamBlock, 4> FfnnParams::param_blocks() {
  std::array<ParamBlock, 4> out;
  for (std::size_t i = 0; i < 4; ++i) out[i] = {{ParamKind::Euclidean, i}, block(i)};
  return out;
}

void FfnnParams::validate() const {
  if (inputs == 0 || hidden == 0 || classes < 2)
    throw std::invalid_argument("FfnnParams: empty layer or fewer than 2 classes");
  if (w_hidden.size() != hidden * inputs || b_hidden.size() != hidden ||
      w_out.size() != classes * hidden || b_out.size() != classes)
    throw std::invalid_argument("FfnnParams: inconsistent shapes");
}

namespace {

Vector affine(const Vector& w, const Vector& b, std::span<const double> x, std::size_t cols) {
  Vector out(b);
  for (std::size_t r = 0; r < out.size(); ++r) {
    const double* row = w.data() + r * cols;
    double s = 0.0;
    for (std::size_t k = 0; k < cols; ++k) s += row[k] * x[k];
    out[r] += s;
  }
  return out;
}

}  // namespace

Vector ffnn_logits(const FfnnParams& params, std::span<const double> features) {
  if (features.size() != params.inputs)
    throw std::invalid_argument("ffnn: feature length " + std::to_string(features.size()) +
                                " does not match input width " + std::to_string(params.inputs));
  Vector hidden = affine(params.w_hidden, params.b_hidden, features, params.inputs);
  for (double& h : hidden) h = h > 0.0 ? h : 0.0;
  return affine(params.w_out, params.b_out, hidden, params.hidden);
}

Vector ffnn_forward(const FfnnParams& params, std::span<const double> features) {
  Vector z = ffnn_logits(params, features);
  const double zmax = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& x : z) {
    x = std::exp(x - zmax);
    total += x;
  }
  for (double& x : z) x /= total;
  return z;
}

NodeId ffnn_logits_node(Graph& graph, const FfnnParams& params, NodeId features) {
  using B = FfnnParams::Block;
  auto leaf = [&](std::size_t b) {
    return graph.parameter({ParamKind::Euclidean, b}, params.block(b));
  };
  const NodeId hidden = graph.relu(
      graph.dense(leaf(B::kWHidden), features, leaf(B::kBHidden), params.hidden, params.inputs));
  return graph.dense(leaf(B::kWOut), hidden, leaf(B::kBOut), params.classes, params.hidden);
}

void LossConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("margin alpha must be > 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
  if (classes != 2 && classes != 3) throw std::invalid_argument("classes must be 2 or 3");
}

double cross_entropy(std::span<const double> probs, std::size_t gold) {
  if (gold >= probs.size()) throw std::out_of_range("cross_entropy: gold class out of range");
  return -std::log(std::max(probs[gold], 1e-12));
}

double pair_energy(std::span<const double> u, std::span<const double> v, double beta,
                   const CurvatureSpace& space) {
  const double d = distance(space, u, v);
  return beta * d + (1.0 - beta) * std::max(0.0, norm(v) - norm(u));
}

NodeId pair_energy_node(Graph& graph, NodeId u, NodeId v, double beta,
                        const CurvatureSpace& space) {
  const NodeId d = graph.distance_from_norm(space.c, graph.norm(graph.mobius_add(space.c, graph.neg(u), v)));
  const NodeId hinge = graph.relu(graph.sub(graph.norm(v), graph.norm(u)));
  const NodeId in[] = {d, hinge};
  const double w[] = {beta, 1.0 - beta};
  return graph.weighted_sum(in, w);
}

double margin_term(double energy, bool positive, double alpha) {
  return positive ? energy : std::max(0.0, alpha - energy);
}

NodeId margin_term_node(Graph& graph, NodeId energy, bool positive, double alpha) {
  if (positive) return energy;
  return graph.relu(graph.scale(energy, -1.0, alpha));
}

double margin_loss(std::span<const SentencePair> positives,
                   std::span<const SentencePair> negatives, double alpha, double beta,
                   const CurvatureSpace& space) {
  double total = 0.0;
  for (const auto& p : positives)
    total += margin_term(pair_energy(p.premise, p.hypothesis, beta, space), true, alpha);
  for (const auto& n : negatives)
    total += margin_term(pair_energy(n.premise, n.hypothesis, beta, space), false, alpha);
  return total;
}

double order_energy(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("order_energy: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double gap = std::max(0.0, y[i] - x[i]);
    s += gap * gap;
  }
  return s;
}

NodeId order_energy_node(Graph& graph, NodeId x, NodeId y) {
  return graph.squared_norm(graph.relu(graph.sub(y, x)));
}

double disentangle_loss(double pair_dist, std::span<const double> negative_dists) {
  // -log softmax, shifted by the smallest distance for stability.
  double lo = pair_dist;
  for (double d : negative_dists) lo = std::min(lo, d);
  double total = std::exp(-(pair_dist - lo));
  for (double d : negative_dists) total += std::exp(-(d - lo));
  return pair_dist - lo + std::log(total);
}

NodeId disentangle_loss_node(Graph& graph, NodeId pair_dist,
                             std::span<const NodeId> negative_dists) {
  std::vector<NodeId> parts;
  parts.push_back(graph.neg(pair_dist));
  for (NodeId d : negative_dists) parts.push_back(graph.neg(d));
  const NodeId lse = graph.log_sum_exp(graph.concat(parts));
  return graph.add(pair_dist, lse);
}

ThresholdChoice select_threshold(std::span<const double> scores,
                                 const std::vector<bool>& entails) {
  if (scores.empty()) throw std::invalid_argument("select_threshold: no samples");
  if (scores.size() != entails.size())
    throw std::invalid_argument("select_threshold: scores and labels differ in length");
  for (double s : scores)
    if (std::isnan(s)) throw std::invalid_argument("select_threshold: NaN score");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  const auto positives = static_cast<std::size_t>(std::count(entails.begin(), entails.end(), true));
  const std::size_t n = scores.size();
  const double inf = std::numeric_limits<double>::infinity();

  // Threshold -inf: everything predicted non-entailment.
  std::size_t correct = n - positives;
  ThresholdChoice best{-inf, 0.0, correct};
  std::size_t i = 0;
  while (i < n) {
    const double s = scores[order[i]];
    while (i < n && scores[order[i]] == s) {
      correct += entails[order[i]] ? 1 : 0;
      correct -= entails[order[i]] ? 0 : 1;
      ++i;
    }
    const double threshold = i < n ? 0.5 * (s + scores[order[i]]) : inf;
    if (correct > best.correct) best = {threshold, 0.0, correct};
  }
  best.accuracy = static_cast<double>(best.correct) / static_cast<double>(n);
  return best;
}

}  // namespace hypersent
