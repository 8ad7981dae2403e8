#include "hypersent/compose.hpp"

#include <stdexcept>
#include <string>

namespace hypersent {

EmbeddingTable::EmbeddingTable(std::size_t rows, std::size_t dim)
    : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {}

EmbeddingTable::EmbeddingTable(std::size_t rows, std::size_t dim, std::vector<double> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (data_.size() != rows * dim) throw std::invalid_argument("EmbeddingTable: data size mismatch");
}

EmbeddingTable EmbeddingTable::random_uniform(std::size_t rows, const CurvatureSpace& space,
                                              double scale, std::mt19937_64& rng) {
  EmbeddingTable table(rows, space.dim);
  std::uniform_real_distribution<double> coord(-scale, scale);
  for (double& x : table.data_) x = coord(rng);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto id = static_cast<TokenId>(r);
    table.set_row(id, project(space, table.row(id)));
  }
  return table;
}

std::span<const double> EmbeddingTable::row(TokenId id) const {
  if (!has_row(id)) throw std::out_of_range("embedding lookup: unknown word id " + std::to_string(id));
  return {data_.data() + static_cast<std::size_t>(id) * dim_, dim_};
}

std::span<double> EmbeddingTable::row(TokenId id) {
  if (!has_row(id)) throw std::out_of_range("embedding lookup: unknown word id " + std::to_string(id));
  return {data_.data() + static_cast<std::size_t>(id) * dim_, dim_};
}

void EmbeddingTable::set_row(TokenId id, std::span<const double> value) {
  auto dst = row(id);
  if (value.size() != dim_) throw std::invalid_argument("set_row: dimension mismatch");
  std::copy(value.begin(), value.end(), dst.begin());
}

bool is_hyperbolic(CompositionMethod method) {
  return method != CompositionMethod::EuclideanAverage &&
         method != CompositionMethod::EuclideanSum;
}

std::string_view to_string(CompositionMethod method) {
  switch (method) {
    case CompositionMethod::TreeMobius: return "MS";
    case CompositionMethod::LeftChain: return "LMS";
    case CompositionMethod::RightChain: return "RMS";
    case CompositionMethod::MobiusAverage: return "MA";
    case CompositionMethod::EuclideanAverage: return "EA";
    case CompositionMethod::EuclideanSum: return "ES";
  }
  return "?";
}

Sentence Sentence::from_tree(const ParseTree& tree) {
  Sentence s;
  s.tree = post_order_arrays(tree);
  s.tokens = s.tree->leaves();
  return s;
}

Sentence Sentence::from_tokens(std::vector<TokenId> tokens) {
  Sentence s;
  s.tokens = std::move(tokens);
  return s;
}

namespace {

// Post-order evaluation; intermediate values are cached in `values` so each
// node is combined once.
template <class T, class Leaf, class Combine>
T fold_tree(const TraversalArrays& arrays, Leaf&& leaf, Combine&& combine) {
  if (arrays.size() == 0) throw std::invalid_argument("compose: empty tree");
  std::vector<T> values;
  values.reserve(arrays.size());
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    if (arrays.is_leaf[i]) {
      values.push_back(leaf(arrays.word_ids[i]));
    } else {
      const auto l = static_cast<std::size_t>(arrays.left[i]);
      const auto r = static_cast<std::size_t>(arrays.right[i]);
      if (l >= i || r >= i) throw std::invalid_argument("compose: arrays are not in post order");
      values.push_back(combine(values[l], values[r]));
    }
  }
  return values.back();
}

template <class T, class Leaf, class Combine>
T fold_chain(std::span<const TokenId> tokens, ChainDirection direction, Leaf&& leaf,
             Combine&& combine) {
  if (tokens.empty()) throw std::invalid_argument("compose: empty token sequence");
  if (direction == ChainDirection::Right) {
    T acc = leaf(tokens.front());
    for (std::size_t i = 1; i < tokens.size(); ++i) acc = combine(acc, leaf(tokens[i]));
    return acc;
  }
  T acc = leaf(tokens.back());
  for (std::size_t i = tokens.size() - 1; i-- > 0;) acc = combine(leaf(tokens[i]), acc);
  return acc;
}

void check_space(const EmbeddingTable& embeddings, const CurvatureSpace& space) {
  if (embeddings.dim() != space.dim)
    throw std::invalid_argument("compose: embedding dimension does not match the space");
}

ChainDirection chain_of(CompositionMethod method) {
  return method == CompositionMethod::LeftChain ? ChainDirection::Left : ChainDirection::Right;
}

}  // namespace

Vector compose_tree(const TraversalArrays& arrays, const EmbeddingTable& embeddings,
                    const CurvatureSpace& space) {
  check_space(embeddings, space);
  return fold_tree<Vector>(
      arrays,
      [&](TokenId id) {
        auto r = embeddings.row(id);
        return Vector(r.begin(), r.end());
      },
      [&](const Vector& l, const Vector& r) {
        Vector out(space.dim);
        kernel::mobius_add(space.c, l, r, out);
        return out;
      });
}

Vector compose_chain(std::span<const TokenId> tokens, const EmbeddingTable& embeddings,
                     const CurvatureSpace& space, ChainDirection direction) {
  check_space(embeddings, space);
  return fold_chain<Vector>(
      tokens, direction,
      [&](TokenId id) {
        auto r = embeddings.row(id);
        return Vector(r.begin(), r.end());
      },
      [&](const Vector& l, const Vector& r) {
        Vector out(space.dim);
        kernel::mobius_add(space.c, l, r, out);
        return out;
      });
}

Vector compose_mobius_average(const TraversalArrays& arrays, const EmbeddingTable& embeddings,
                              const CurvatureSpace& space, std::size_t n_tokens) {
  if (n_tokens == 0) throw std::invalid_argument("compose_mobius_average: no tokens");
  const Vector sum = compose_tree(arrays, embeddings, space);
  Vector out(space.dim);
  kernel::mobius_scalar_mul(space.c, 1.0 / static_cast<double>(n_tokens), sum, out);
  return out;
}

Vector compose_euclidean(std::span<const TokenId> tokens, const EmbeddingTable& embeddings,
                         EuclideanMode mode) {
  if (tokens.empty()) throw std::invalid_argument("compose_euclidean: empty token sequence");
  Vector out(embeddings.dim(), 0.0);
  for (TokenId id : tokens) {
    auto r = embeddings.row(id);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += r[i];
  }
  if (mode == EuclideanMode::Average)
    for (double& x : out) x /= static_cast<double>(tokens.size());
  return out;
}

Vector compose(CompositionMethod method, const Sentence& sentence,
               const EmbeddingTable& embeddings, const CurvatureSpace& space) {
  switch (method) {
    case CompositionMethod::TreeMobius:
      if (!sentence.tree) throw std::invalid_argument("MS composition needs a parse tree");
      return compose_tree(*sentence.tree, embeddings, space);
    case CompositionMethod::LeftChain:
    case CompositionMethod::RightChain:
      return compose_chain(sentence.tokens, embeddings, space, chain_of(method));
    case CompositionMethod::MobiusAverage: {
      if (sentence.tree)
        return compose_mobius_average(*sentence.tree, embeddings, space, sentence.tokens.size());
      const Vector sum = compose_chain(sentence.tokens, embeddings, space, ChainDirection::Right);
      Vector out(space.dim);
      kernel::mobius_scalar_mul(space.c, 1.0 / static_cast<double>(sentence.tokens.size()), sum,
                                out);
      return out;
    }
    case CompositionMethod::EuclideanAverage:
      return compose_euclidean(sentence.tokens, embeddings, EuclideanMode::Average);
    case CompositionMethod::EuclideanSum:
      return compose_euclidean(sentence.tokens, embeddings, EuclideanMode::Sum);
  }
  throw std::invalid_argument("unknown composition method");
}

NodeId compose_node(Graph& graph, CompositionMethod method, const Sentence& sentence,
                    const EmbeddingTable& embeddings, const CurvatureSpace& space) {
  check_space(embeddings, space);
  auto leaf = [&](TokenId id) {
    return graph.parameter({ParamKind::Embedding, static_cast<std::size_t>(id)},
                           embeddings.row(id));
  };
  auto mobius = [&](NodeId l, NodeId r) { return graph.mobius_add(space.c, l, r); };

  switch (method) {
    case CompositionMethod::TreeMobius:
      if (!sentence.tree) throw std::invalid_argument("MS composition needs a parse tree");
      return fold_tree<NodeId>(*sentence.tree, leaf, mobius);
    case CompositionMethod::LeftChain:
    case CompositionMethod::RightChain:
      return fold_chain<NodeId>(sentence.tokens, chain_of(method), leaf, mobius);
    case CompositionMethod::MobiusAverage: {
      const NodeId sum = sentence.tree
                             ? fold_tree<NodeId>(*sentence.tree, leaf, mobius)
                             : fold_chain<NodeId>(sentence.tokens, ChainDirection::Right, leaf, mobius);
      return graph.mobius_scale(space.c, 1.0 / static_cast<double>(sentence.tokens.size()), sum);
    }
    case CompositionMethod::EuclideanAverage:
    case CompositionMethod::EuclideanSum: {
      if (sentence.tokens.empty()) throw std::invalid_argument("compose: empty token sequence");
      std::vector<NodeId> leaves;
      for (TokenId id : sentence.tokens) leaves.push_back(leaf(id));
      const double w = method == CompositionMethod::EuclideanAverage
                           ? 1.0 / static_cast<double>(leaves.size())
                           : 1.0;
      const std::vector<double> weights(leaves.size(), w);
      return graph.weighted_sum(leaves, weights);
    }
  }
  throw std::invalid_argument("unknown composition method");
}

}  // namespace hypersent
