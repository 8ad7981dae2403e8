#include "hypersent/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hypersent {

const Vector* GradientRecord::find(const ParamRef& ref) const {
  const auto& table = ref.kind == ParamKind::Embedding ? hyperbolic : euclidean;
  auto it = table.find(ref.index);
  return it == table.end() ? nullptr : &it->second;
}

Vector& GradientRecord::slot(const ParamRef& ref, std::size_t size) {
  auto& table = ref.kind == ParamKind::Embedding ? hyperbolic : euclidean;
  auto [it, inserted] = table.try_emplace(ref.index);
  if (inserted) it->second.assign(size, 0.0);
  return it->second;
}

NodeId Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

const Graph::Node& Graph::node(NodeId id) const {
  if (id >= nodes_.size()) throw AutodiffError("node id out of range");
  return nodes_[id];
}

std::span<const double> Graph::value(NodeId id) const {
  const Node& n = node(id);
  if (n.op == Op::Parameter) return n.external;
  return n.value;
}

double Graph::scalar(NodeId id) const {
  auto v = value(id);
  if (v.size() != 1) throw AutodiffError("node is not scalar");
  return v[0];
}

std::span<const double> Graph::probabilities(NodeId id) const {
  const Node& n = node(id);
  if (n.op != Op::SoftmaxCrossEntropy) throw AutodiffError("node is not a softmax loss");
  return n.coeffs;
}

void Graph::require_same_size(NodeId a, NodeId b, const char* what) const {
  if (value(a).size() != value(b).size())
    throw AutodiffError(std::string(what) + ": operand size mismatch");
}

NodeId Graph::parameter(ParamRef ref, std::span<const double> v) {
  Node n;
  n.op = Op::Parameter;
  n.external = v;
  n.param = ref;
  return push(std::move(n));
}

NodeId Graph::constant(Vector v) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(v);
  return push(std::move(n));
}

NodeId Graph::weighted_sum(std::span<const NodeId> inputs, std::span<const double> weights,
                           double bias) {
  if (inputs.empty() || inputs.size() != weights.size())
    throw AutodiffError("weighted_sum: need one weight per input");
  const std::size_t size = value(inputs[0]).size();
  Node n;
  n.op = Op::WeightedSum;
  n.inputs.assign(inputs.begin(), inputs.end());
  n.coeffs.assign(weights.begin(), weights.end());
  n.real = bias;
  n.value.assign(size, bias);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto x = value(inputs[k]);
    if (x.size() != size) throw AutodiffError("weighted_sum: operand size mismatch");
    for (std::size_t i = 0; i < size; ++i) n.value[i] += weights[k] * x[i];
  }
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const NodeId in[] = {a, b};
  const double w[] = {1.0, 1.0};
  return weighted_sum(in, w);
}

NodeId Graph::sub(NodeId a, NodeId b) {
  const NodeId in[] = {a, b};
  const double w[] = {1.0, -1.0};
  return weighted_sum(in, w);
}

NodeId Graph::neg(NodeId a) { return scale(a, -1.0); }

NodeId Graph::scale(NodeId a, double k, double bias) {
  const NodeId in[] = {a};
  const double w[] = {k};
  return weighted_sum(in, w, bias);
}

NodeId Graph::mobius_add(double c, NodeId u, NodeId v) {
  require_same_size(u, v, "mobius_add");
  Node n;
  n.op = Op::MobiusAdd;
  n.inputs = {u, v};
  n.curvature = c;
  n.value.resize(value(u).size());
  kernel::mobius_add(c, value(u), value(v), n.value);
  return push(std::move(n));
}

NodeId Graph::mobius_scale(double c, double r, NodeId v) {
  Node n;
  n.op = Op::MobiusScale;
  n.inputs = {v};
  n.curvature = c;
  n.real = r;
  n.value.resize(value(v).size());
  kernel::mobius_scalar_mul(c, r, value(v), n.value);
  return push(std::move(n));
}

NodeId Graph::norm(NodeId a) {
  Node n;
  n.op = Op::Norm;
  n.inputs = {a};
  n.value = {hypersent::norm(value(a))};
  return push(std::move(n));
}

NodeId Graph::squared_norm(NodeId a) {
  Node n;
  n.op = Op::SquaredNorm;
  n.inputs = {a};
  n.value = {hypersent::squared_norm(value(a))};
  return push(std::move(n));
}

NodeId Graph::distance_from_norm(double c, NodeId nrm) {
  Node n;
  n.op = Op::DistanceFromNorm;
  n.inputs = {nrm};
  n.curvature = c;
  n.value = {kernel::distance_from_norm(c, scalar(nrm))};
  return push(std::move(n));
}

NodeId Graph::cosine(NodeId u, NodeId v) {
  require_same_size(u, v, "cosine");
  Node n;
  n.op = Op::Cosine;
  n.inputs = {u, v};
  const double nu = hypersent::norm(value(u));
  const double nv = hypersent::norm(value(v));
  n.value = {nu == 0.0 || nv == 0.0 ? 0.0 : hypersent::dot(value(u), value(v)) / (nu * nv)};
  return push(std::move(n));
}

NodeId Graph::dot(NodeId u, NodeId v) {
  require_same_size(u, v, "dot");
  Node n;
  n.op = Op::Dot;
  n.inputs = {u, v};
  n.value = {hypersent::dot(value(u), value(v))};
  return push(std::move(n));
}

NodeId Graph::hadamard(NodeId u, NodeId v) {
  require_same_size(u, v, "hadamard");
  Node n;
  n.op = Op::Hadamard;
  n.inputs = {u, v};
  auto a = value(u);
  auto b = value(v);
  n.value.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) n.value[i] = a[i] * b[i];
  return push(std::move(n));
}

NodeId Graph::abs(NodeId a) {
  Node n;
  n.op = Op::Abs;
  n.inputs = {a};
  auto x = value(a);
  n.value.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = std::fabs(x[i]);
  return push(std::move(n));
}

NodeId Graph::relu(NodeId a) {
  Node n;
  n.op = Op::Relu;
  n.inputs = {a};
  auto x = value(a);
  n.value.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = x[i] > 0.0 ? x[i] : 0.0;
  return push(std::move(n));
}

NodeId Graph::concat(std::span<const NodeId> inputs) {
  if (inputs.empty()) throw AutodiffError("concat: no inputs");
  Node n;
  n.op = Op::Concat;
  n.inputs.assign(inputs.begin(), inputs.end());
  for (NodeId id : inputs) {
    auto x = value(id);
    n.value.insert(n.value.end(), x.begin(), x.end());
  }
  return push(std::move(n));
}

NodeId Graph::dense(NodeId weights, NodeId x, NodeId bias, std::size_t rows,
                    std::size_t cols) {
  auto w = value(weights);
  auto in = value(x);
  auto b = value(bias);
  if (w.size() != rows * cols || in.size() != cols || b.size() != rows)
    throw AutodiffError("dense: shape mismatch");
  Node n;
  n.op = Op::Dense;
  n.inputs = {weights, x, bias};
  n.rows = rows;
  n.cols = cols;
  n.value.assign(b.begin(), b.end());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w.data() + r * cols;
    double s = 0.0;
    for (std::size_t k = 0; k < cols; ++k) s += row[k] * in[k];
    n.value[r] += s;
  }
  return push(std::move(n));
}

NodeId Graph::softmax_cross_entropy(NodeId logits, std::size_t gold) {
  auto z = value(logits);
  if (gold >= z.size()) throw AutodiffError("softmax_cross_entropy: gold class out of range");
  Node n;
  n.op = Op::SoftmaxCrossEntropy;
  n.inputs = {logits};
  n.gold = gold;
  const double zmax = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  n.coeffs.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    n.coeffs[i] = std::exp(z[i] - zmax);
    total += n.coeffs[i];
  }
  for (double& p : n.coeffs) p /= total;
  const double log_p = z[gold] - zmax - std::log(total);
  n.value = {-std::max(log_p, std::log(1e-12))};
  return push(std::move(n));
}

NodeId Graph::log_sum_exp(NodeId a) {
  auto x = value(a);
  if (x.empty()) throw AutodiffError("log_sum_exp: empty input");
  Node n;
  n.op = Op::LogSumExp;
  n.inputs = {a};
  const double xmax = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  n.coeffs.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    n.coeffs[i] = std::exp(x[i] - xmax);
    total += n.coeffs[i];
  }
  for (double& p : n.coeffs) p /= total;
  n.value = {xmax + std::log(total)};
  return push(std::move(n));
}

GradientRecord backward(const Graph& graph, NodeId loss) {
  if (graph.value(loss).size() != 1) throw AutodiffError("backward: loss node is not scalar");

  using Op = Graph::Op;
  std::vector<Vector> adj(loss + 1);
  adj[loss] = {1.0};
  auto grad_of = [&](NodeId id) -> Vector& {
    if (adj[id].empty()) adj[id].assign(graph.value(id).size(), 0.0);
    return adj[id];
  };

  GradientRecord record;
  for (std::size_t step = loss + 1; step-- > 0;) {
    const NodeId id = step;
    if (adj[id].empty()) continue;
    const Vector& g = adj[id];
    const auto& n = graph.nodes_[id];
    switch (n.op) {
      case Op::Parameter: {
        Vector& slot = record.slot(n.param, g.size());
        for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i];
        break;
      }
      case Op::Constant:
        break;
      case Op::WeightedSum:
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          Vector& gi = grad_of(n.inputs[k]);
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += n.coeffs[k] * g[i];
        }
        break;
      case Op::MobiusAdd: {
        auto u = graph.value(n.inputs[0]);
        auto v = graph.value(n.inputs[1]);
        Vector& gu = grad_of(n.inputs[0]);
        Vector& gv = grad_of(n.inputs[1]);
        const double c = n.curvature;
        if (c == 0.0) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            gu[i] += g[i];
            gv[i] += g[i];
          }
          break;
        }
        const double uv = hypersent::dot(u, v);
        const double uu = hypersent::squared_norm(u);
        const double vv = hypersent::squared_norm(v);
        const double a = 1.0 + 2.0 * c * uv + c * vv;
        const double b = 1.0 - c * uu;
        const double den = 1.0 + 2.0 * c * uv + c * c * uu * vv + constants::kDenominatorGuard;
        const double g_den = -hypersent::dot(g, n.value) / den;
        const double gp_u = hypersent::dot(g, u) / den;
        const double gp_v = hypersent::dot(g, v) / den;
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double gp = g[i] / den;
          gu[i] += a * gp + 2.0 * c * gp_u * v[i] - 2.0 * c * gp_v * u[i] +
                   g_den * (2.0 * c * v[i] + 2.0 * c * c * vv * u[i]);
          gv[i] += b * gp + gp_u * (2.0 * c * u[i] + 2.0 * c * v[i]) +
                   g_den * (2.0 * c * u[i] + 2.0 * c * c * uu * v[i]);
        }
        break;
      }
      case Op::MobiusScale: {
        auto v = graph.value(n.inputs[0]);
        Vector& gv = grad_of(n.inputs[0]);
        const double c = n.curvature;
        const double r = n.real;
        const double nv = hypersent::norm(v);
        if (c == 0.0 || nv == 0.0) {
          for (std::size_t i = 0; i < g.size(); ++i) gv[i] += r * g[i];
          break;
        }
        const double sc = std::sqrt(c);
        const double s = sc * nv;
        const double t = std::tanh(r * kernel::clamped_atanh(s));
        const double f = t / s;
        const double dt_dn = s >= constants::kAtanhClamp ? 0.0 : (1.0 - t * t) * r * sc / (1.0 - s * s);
        const double df_dn = dt_dn / s - t / (s * nv);
        const double coef = df_dn * hypersent::dot(g, v) / nv;
        for (std::size_t i = 0; i < g.size(); ++i) gv[i] += f * g[i] + coef * v[i];
        break;
      }
      case Op::Norm: {
        auto x = graph.value(n.inputs[0]);
        const double nx = n.value[0];
        if (nx == 0.0) break;
        Vector& gx = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g[0] * x[i] / nx;
        break;
      }
      case Op::SquaredNorm: {
        auto x = graph.value(n.inputs[0]);
        Vector& gx = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < x.size(); ++i) gx[i] += 2.0 * g[0] * x[i];
        break;
      }
      case Op::DistanceFromNorm: {
        const double nn = graph.scalar(n.inputs[0]);
        grad_of(n.inputs[0])[0] += g[0] * kernel::distance_from_norm_derivative(n.curvature, nn);
        break;
      }
      case Op::Cosine: {
        auto u = graph.value(n.inputs[0]);
        auto v = graph.value(n.inputs[1]);
        const double nu = hypersent::norm(u);
        const double nv = hypersent::norm(v);
        if (nu == 0.0 || nv == 0.0) break;
        const double cs = n.value[0];
        Vector& gu = grad_of(n.inputs[0]);
        Vector& gv = grad_of(n.inputs[1]);
        for (std::size_t i = 0; i < u.size(); ++i) {
          gu[i] += g[0] * (v[i] / (nu * nv) - cs * u[i] / (nu * nu));
          gv[i] += g[0] * (u[i] / (nu * nv) - cs * v[i] / (nv * nv));
        }
        break;
      }
      case Op::Dot: {
        auto u = graph.value(n.inputs[0]);
        auto v = graph.value(n.inputs[1]);
        Vector& gu = grad_of(n.inputs[0]);
        Vector& gv = grad_of(n.inputs[1]);
        for (std::size_t i = 0; i < u.size(); ++i) {
          gu[i] += g[0] * v[i];
          gv[i] += g[0] * u[i];
        }
        break;
      }
      case Op::Hadamard: {
        auto u = graph.value(n.inputs[0]);
        auto v = graph.value(n.inputs[1]);
        Vector& gu = grad_of(n.inputs[0]);
        Vector& gv = grad_of(n.inputs[1]);
        for (std::size_t i = 0; i < u.size(); ++i) {
          gu[i] += g[i] * v[i];
          gv[i] += g[i] * u[i];
        }
        break;
      }
      case Op::Abs: {
        auto x = graph.value(n.inputs[0]);
        Vector& gx = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < x.size(); ++i)
          gx[i] += x[i] > 0.0 ? g[i] : (x[i] < 0.0 ? -g[i] : 0.0);
        break;
      }
      case Op::Relu: {
        auto x = graph.value(n.inputs[0]);
        Vector& gx = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < x.size(); ++i)
          if (x[i] > 0.0) gx[i] += g[i];
        break;
      }
      case Op::Concat: {
        std::size_t offset = 0;
        for (NodeId in : n.inputs) {
          Vector& gi = grad_of(in);
          for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[offset + i];
          offset += gi.size();
        }
        break;
      }
      case Op::Dense: {
        auto w = graph.value(n.inputs[0]);
        auto x = graph.value(n.inputs[1]);
        Vector& gw = grad_of(n.inputs[0]);
        Vector& gx = grad_of(n.inputs[1]);
        Vector& gb = grad_of(n.inputs[2]);
        for (std::size_t r = 0; r < n.rows; ++r) {
          const double gr = g[r];
          gb[r] += gr;
          if (gr == 0.0) continue;
          const double* row = w.data() + r * n.cols;
          double* grow = gw.data() + r * n.cols;
          for (std::size_t k = 0; k < n.cols; ++k) {
            grow[k] += gr * x[k];
            gx[k] += gr * row[k];
          }
        }
        break;
      }
      case Op::SoftmaxCrossEntropy: {
        const auto& p = n.coeffs;
        // Clamped region: the loss is locally constant.
        if (p[n.gold] < 1e-12) break;
        Vector& gz = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < p.size(); ++i)
          gz[i] += g[0] * (p[i] - (i == n.gold ? 1.0 : 0.0));
        break;
      }
      case Op::LogSumExp: {
        Vector& gx = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0] * n.coeffs[i];
        break;
      }
    }
  }
  return record;
}

Vector riemannian_rescale(const CurvatureSpace& space, std::span<const double> theta,
                          std::span<const double> grad) {
  if (theta.size() != grad.size())
    throw GeometryError("riemannian_rescale: dimension mismatch");
  const double shrink = 1.0 - space.c * squared_norm(theta);
  const double factor = shrink * shrink / 4.0;
  Vector out(grad.begin(), grad.end());
  for (double& x : out) x *= factor;
  return out;
}

Vector rsgd_step(const CurvatureSpace& space, std::span<const double> theta,
                 std::span<const double> grad, double eta) {
  Vector step = riemannian_rescale(space, theta, grad);
  for (std::size_t i = 0; i < step.size(); ++i) step[i] = theta[i] - eta * step[i];
  return project(space, step);
}

double finite_diff_check(const Objective& objective, std::span<const ParamBlock> params,
                         double h, double floor) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: step must be positive");
  const GradientRecord analytic = objective.gradient();
  auto checked_value = [&] {
    const double v = objective.value();
    if (!std::isfinite(v)) throw AutodiffError("finite_diff_check: non-finite loss");
    return v;
  };
  checked_value();

  double worst = 0.0;
  for (const ParamBlock& block : params) {
    const Vector* grad = analytic.find(block.ref);
    for (std::size_t i = 0; i < block.values.size(); ++i) {
      const double saved = block.values[i];
      block.values[i] = saved + h;
      const double plus = checked_value();
      block.values[i] = saved - h;
      const double minus = checked_value();
      block.values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double exact = grad ? (*grad)[i] : 0.0;
      const double denom = std::max({std::fabs(numeric), std::fabs(exact), floor});
      worst = std::max(worst, std::fabs(numeric - exact) / denom);
    }
  }
  return worst;
}

}  // namespace hypersent
