#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "hypersent/geometry.hpp"

namespace hypersent {

enum class ParamKind { Embedding, Euclidean };

/// Identifies a trainable parameter block: an embedding row (index = word id)
/// or a Euclidean block (index = block number, e.g. an FFNN weight matrix).
struct ParamRef {
  ParamKind kind = ParamKind::Embedding;
  std::size_t index = 0;

  friend auto operator<=>(const ParamRef&, const ParamRef&) = default;
};

/// Euclidean gradients of one scalar loss. Hyperbolic (embedding) and
/// Euclidean (FFNN) parameters are kept apart because they are updated
/// differently.
struct GradientRecord {
  std::map<std::size_t, Vector> hyperbolic;
  std::map<std::size_t, Vector> euclidean;

  const Vector* find(const ParamRef& ref) const;
  Vector& slot(const ParamRef& ref, std::size_t size);

  bool operator==(const GradientRecord&) const = default;
};

using NodeId = std::size_t;

class AutodiffError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-sample computation graph. Nodes are appended in evaluation order, so
/// insertion order is a topological order and every input precedes its user.
/// Values are computed eagerly when a node is added. Scalars are vectors of
/// length one.
class Graph {
 public:
  enum class Op {
    Parameter,
    Constant,
    WeightedSum,
    MobiusAdd,
    MobiusScale,
    Norm,
    SquaredNorm,
    DistanceFromNorm,
    Cosine,
    Dot,
    Hadamard,
    Abs,
    Relu,
    Concat,
    Dense,
    SoftmaxCrossEntropy,
    LogSumExp,
  };

  /// The parameter storage must outlive the graph; it is referenced, not
  /// copied.
  NodeId parameter(ParamRef ref, std::span<const double> value);
  NodeId constant(Vector value);
  NodeId scalar_constant(double value) { return constant(Vector{value}); }

  /// bias + sum_i weights[i] * inputs[i]; all inputs share one size.
  NodeId weighted_sum(std::span<const NodeId> inputs, std::span<const double> weights,
                      double bias = 0.0);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId neg(NodeId a);
  NodeId scale(NodeId a, double k, double bias = 0.0);

  NodeId mobius_add(double c, NodeId u, NodeId v);
  NodeId mobius_scale(double c, double r, NodeId v);
  NodeId norm(NodeId a);
  NodeId squared_norm(NodeId a);
  /// Poincare distance given |(-u) + v|.
  NodeId distance_from_norm(double c, NodeId n);
  NodeId cosine(NodeId u, NodeId v);
  NodeId dot(NodeId u, NodeId v);
  NodeId hadamard(NodeId u, NodeId v);
  NodeId abs(NodeId a);
  NodeId relu(NodeId a);
  NodeId concat(std::span<const NodeId> inputs);
  /// weights (rows x cols, row-major) * x + bias
  NodeId dense(NodeId weights, NodeId x, NodeId bias, std::size_t rows, std::size_t cols);
  NodeId softmax_cross_entropy(NodeId logits, std::size_t gold);
  NodeId log_sum_exp(NodeId a);

  std::span<const double> value(NodeId id) const;
  double scalar(NodeId id) const;
  /// Class probabilities cached by a SoftmaxCrossEntropy node.
  std::span<const double> probabilities(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  friend GradientRecord backward(const Graph& graph, NodeId loss);

 private:
  struct Node {
    Op op = Op::Constant;
    std::vector<NodeId> inputs;
    Vector value;
    std::span<const double> external;
    Vector coeffs;  // weights (WeightedSum) or probabilities (softmax)
    double curvature = 0.0;
    double real = 0.0;  // bias or scalar multiplier
    std::size_t rows = 0, cols = 0, gold = 0;
    ParamRef param;
  };

  NodeId push(Node node);
  const Node& node(NodeId id) const;
  void require_same_size(NodeId a, NodeId b, const char* what) const;

  std::vector<Node> nodes_;
};

/// Reverse sweep from a scalar loss node. Gradients of parameters referenced
/// by several leaves are summed.
GradientRecord backward(const Graph& graph, NodeId loss);

/// grad * (1 - c|theta|^2)^2 / 4, the inverse metric applied to a Euclidean
/// gradient.
Vector riemannian_rescale(const CurvatureSpace& space, std::span<const double> theta,
                          std::span<const double> grad);

/// project(theta - eta * riemannian_rescale(theta, grad))
Vector rsgd_step(const CurvatureSpace& space, std::span<const double> theta,
                 std::span<const double> grad, double eta);

/// Mutable view of a parameter block, used to perturb coordinates.
struct ParamBlock {
  ParamRef ref;
  std::span<double> values;
};

struct Objective {
  std::function<double()> value;
  std::function<GradientRecord()> gradient;
};

/// Central-difference check of objective.gradient() over every coordinate of
/// every block. Returns the worst |a - b| / max(|a|, |b|, floor). Parameters
/// are restored on return.
double finite_diff_check(const Objective& objective, std::span<const ParamBlock> params,
                         double h, double floor = 1e-8);

}  // namespace hypersent
