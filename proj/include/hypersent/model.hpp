#pragma once

#include <array>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hypersent/autodiff.hpp"
#include "hypersent/geometry.hpp"

namespace hypersent {

enum class FeatureBlock {
  U,              // u
  V,              // v
  MobiusDiff,     // (-u) + v, Mobius
  AbsMobiusDiff,  // |(-u) + v| coordinate-wise
  Cosine,         // cos(u, v)
  HypDist,        // d(u, v)
  EuclidAbsDiff,  // |u - v|
  Hadamard,       // u * v
  Dot,            // <u, v>
  EuclidDist,     // |u - v|_2
};

std::string_view feature_token(FeatureBlock block);
bool is_scalar_block(FeatureBlock block);
bool is_hyperbolic_block(FeatureBlock block);

/// Ordered list of feature blocks. Vector blocks are laid out first, in
/// their listed order, followed by the scalar blocks in their listed order.
struct FeatureSpec {
  std::vector<FeatureBlock> blocks;

  /// Comma-separated tokens: u, v, mdiff, absmdiff, cos, dist, absdiff,
  /// hadamard, dot, edist.
  static FeatureSpec parse(std::string_view text);
  std::string to_string() const;
  std::size_t length(std::size_t dim) const;
  bool uses_hyperbolic() const;
  std::vector<FeatureBlock> layout() const;

  bool operator==(const FeatureSpec&) const = default;
};

/// Throws if spec requests a hyperbolic block in a Euclidean space.
void check_feature_space(const FeatureSpec& spec, const CurvatureSpace& space);

Vector build_features(std::span<const double> u, std::span<const double> v,
                      const FeatureSpec& spec, const CurvatureSpace& space);
NodeId build_features_node(Graph& graph, NodeId u, NodeId v, const FeatureSpec& spec,
                           const CurvatureSpace& space);

/// One hidden ReLU layer followed by a softmax output layer.
struct FfnnParams {
  static constexpr std::size_t kDefaultHidden = 256;
  enum Block : std::size_t { kWHidden = 0, kBHidden = 1, kWOut = 2, kBOut = 3 };

  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::size_t classes = 0;
  Vector w_hidden;  // hidden x inputs
  Vector b_hidden;  // hidden
  Vector w_out;     // classes x hidden
  Vector b_out;     // classes

  FfnnParams() = default;
  FfnnParams(std::size_t inputs, std::size_t hidden, std::size_t classes);

  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static FfnnParams glorot(std::size_t inputs, std::size_t hidden, std::size_t classes,
                           std::mt19937_64& rng);

  Vector& block(std::size_t index);
  const Vector& block(std::size_t index) const;
  std::array<ParamBlock, 4> param_blocks();
  void validate() const;

  bool operator==(const FfnnParams&) const = default;
};

Vector ffnn_logits(const FfnnParams& params, std::span<const double> features);
Vector ffnn_forward(const FfnnParams& params, std::span<const double> features);
NodeId ffnn_logits_node(Graph& graph, const FfnnParams& params, NodeId features);

struct LossConfig {
  double alpha = 0.05;
  double beta = 0.5;
  std::size_t classes = 2;

  void validate() const;
};

double cross_entropy(std::span<const double> probs, std::size_t gold);

/// beta * d(u, v) + (1 - beta) * max(0, |v| - |u|); u is the premise.
double pair_energy(std::span<const double> u, std::span<const double> v, double beta,
                   const CurvatureSpace& space);
NodeId pair_energy_node(Graph& graph, NodeId u, NodeId v, double beta,
                        const CurvatureSpace& space);

struct SentencePair {
  Vector premise;
  Vector hypothesis;
};

/// sum_P E(p, h) + sum_N max(0, alpha - E(p', h'))
double margin_loss(std::span<const SentencePair> positives,
                   std::span<const SentencePair> negatives, double alpha, double beta,
                   const CurvatureSpace& space);
/// Margin contribution of one pair given its energy.
double margin_term(double energy, bool positive, double alpha);
NodeId margin_term_node(Graph& graph, NodeId energy, bool positive, double alpha);

/// |max(0, y - x)|^2; zero iff y <= x coordinate-wise.
double order_energy(std::span<const double> x, std::span<const double> y);
NodeId order_energy_node(Graph& graph, NodeId x, NodeId y);

/// -log(exp(-d) / (sum_S exp(-d') + exp(-d)))
double disentangle_loss(double pair_dist, std::span<const double> negative_dists);
NodeId disentangle_loss_node(Graph& graph, NodeId pair_dist,
                             std::span<const NodeId> negative_dists);

struct ThresholdChoice {
  double threshold = 0.0;
  double accuracy = 0.0;
  std::size_t correct = 0;
};

/// Picks the threshold maximising accuracy of "score < threshold means
/// entailment" among -inf, +inf and midpoints of consecutive distinct
/// scores. Ties go to the smallest threshold.
ThresholdChoice select_threshold(std::span<const double> scores,
                                 const std::vector<bool>& entails);

}  // namespace hypersent
