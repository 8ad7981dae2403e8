#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hypersent/vocab.hpp"

namespace hypersent {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Tree as read from text, before binarization. Leaves have no children.
struct NaryTree {
  std::string token;
  std::vector<NaryTree> children;

  bool is_leaf() const { return children.empty(); }
};

/// Binary constituency tree. Nodes are stored children-before-parent, so the
/// root is always the last node.
class ParseTree {
 public:
  struct Node {
    std::string token;  // leaves only
    TokenId id = -1;    // leaves only
    int left = -1;
    int right = -1;

    bool is_leaf() const { return left < 0; }
  };

  int add_leaf(std::string token, TokenId id = -1);
  int add_internal(int left, int right);

  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return static_cast<int>(nodes_.size()) - 1; }
  bool empty() const { return nodes_.empty(); }
  std::size_t leaf_count() const;
  /// Leaf ids in sentence order.
  std::vector<TokenId> leaf_ids() const;
  std::vector<std::string> leaf_tokens() const;

  void assign_ids(const std::function<TokenId(const std::string&)>& lookup);

  /// ((t1 t2) t3) ...: the tree whose composition matches a right-parenthesised
  /// chain.
  static ParseTree left_branching(const std::vector<TokenId>& ids);

 private:
  std::vector<Node> nodes_;
};

/// Post-order encoding: index i < j whenever node i is a descendant of node
/// j; the root sits at the last index.
struct TraversalArrays {
  std::vector<std::uint8_t> is_leaf;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<TokenId> word_ids;

  std::size_t size() const { return word_ids.size(); }
  int root() const { return static_cast<int>(word_ids.size()) - 1; }
  std::size_t leaf_count() const;
  /// Leaf word ids in sentence order.
  std::vector<TokenId> leaves() const;

  bool operator==(const TraversalArrays&) const = default;
};

/// Reads a parenthesised tree. "( ( It is ) ( raining today ) )" and
/// Penn-style "(S (NP (PRP It)) ...)" are both accepted; a label glued to an
/// opening parenthesis is discarded. Several top-level items form one node.
NaryTree read_sexpr(std::string_view text);

/// Unary chains collapse to their child; n-ary nodes fold to the left,
/// (a b c) -> ((a b) c).
ParseTree binarize(const NaryTree& tree);

/// read_sexpr + binarize; tokens are normalized and mapped through vocab
/// (unknown -> UNK).
ParseTree parse_sexpr(std::string_view text, const Vocab& vocab);
/// As above, leaving ids unassigned (-1).
ParseTree parse_sexpr(std::string_view text);

TraversalArrays post_order_arrays(const ParseTree& tree);

}  // namespace hypersent
