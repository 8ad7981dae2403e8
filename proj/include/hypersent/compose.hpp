#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "hypersent/autodiff.hpp"
#include "hypersent/geometry.hpp"
#include "hypersent/treeparse.hpp"

namespace hypersent {

/// Vocabulary-indexed word vectors, row-major.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t rows, std::size_t dim);
  EmbeddingTable(std::size_t rows, std::size_t dim, std::vector<double> data);

  /// Every coordinate uniform in (-scale, scale), then projected into space.
  static EmbeddingTable random_uniform(std::size_t rows, const CurvatureSpace& space,
                                       double scale, std::mt19937_64& rng);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> row(TokenId id) const;
  std::span<double> row(TokenId id);
  void set_row(TokenId id, std::span<const double> value);
  bool has_row(TokenId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < rows_;
  }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const EmbeddingTable&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

enum class CompositionMethod {
  TreeMobius,        // MS
  LeftChain,         // LMS: w1 + (w2 + (... + wN))
  RightChain,        // RMS: ((w1 + w2) + ...) + wN
  MobiusAverage,     // MA: (1/N) x (Mobius sum)
  EuclideanAverage,  // EA
  EuclideanSum,      // ES
};

enum class ChainDirection { Left, Right };
enum class EuclideanMode { Average, Sum };

bool is_hyperbolic(CompositionMethod method);
std::string_view to_string(CompositionMethod method);

/// A sentence as token ids in order plus, when available, its parse.
struct Sentence {
  std::vector<TokenId> tokens;
  std::optional<TraversalArrays> tree;

  static Sentence from_tree(const ParseTree& tree);
  static Sentence from_tokens(std::vector<TokenId> tokens);
};

Vector compose_tree(const TraversalArrays& arrays, const EmbeddingTable& embeddings,
                    const CurvatureSpace& space);
Vector compose_chain(std::span<const TokenId> tokens, const EmbeddingTable& embeddings,
                     const CurvatureSpace& space, ChainDirection direction);
Vector compose_mobius_average(const TraversalArrays& arrays, const EmbeddingTable& embeddings,
                              const CurvatureSpace& space, std::size_t n_tokens);
Vector compose_euclidean(std::span<const TokenId> tokens, const EmbeddingTable& embeddings,
                         EuclideanMode mode);

/// Dispatches on method. MobiusAverage without a parse scales the
/// ((w1 + w2) + ...) chain.
Vector compose(CompositionMethod method, const Sentence& sentence,
               const EmbeddingTable& embeddings, const CurvatureSpace& space);

/// Same as compose(), recorded into graph with one parameter leaf per token
/// occurrence.
NodeId compose_node(Graph& graph, CompositionMethod method, const Sentence& sentence,
                    const EmbeddingTable& embeddings, const CurvatureSpace& space);

}  // namespace hypersent
