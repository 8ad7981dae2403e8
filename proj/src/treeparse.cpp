#include "hypersent/treeparse.hpp"

#include <cctype>

namespace hypersent {

ParseError::ParseError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

int ParseTree::add_leaf(std::string token, TokenId id) {
  nodes_.push_back(Node{std::move(token), id, -1, -1});
  return root();
}

int ParseTree::add_internal(int left, int right) {
  const int n = static_cast<int>(nodes_.size());
  if (left < 0 || right < 0 || left >= n || right >= n || left == right)
    throw std::invalid_argument("ParseTree::add_internal: invalid child index");
  nodes_.push_back(Node{{}, -1, left, right});
  return root();
}

std::size_t ParseTree::leaf_count() const {
  std::size_t n = 0;
  for (const Node& node : nodes_) n += node.is_leaf();
  return n;
}

namespace {

template <class Visit>
void visit_leaves(const std::vector<ParseTree::Node>& nodes, int index, Visit&& visit) {
  const auto& node = nodes[static_cast<std::size_t>(index)];
  if (node.is_leaf()) {
    visit(node);
    return;
  }
  visit_leaves(nodes, node.left, visit);
  visit_leaves(nodes, node.right, visit);
}

bool is_token_char(char ch) {
  return ch != '(' && ch != ')' && !std::isspace(static_cast<unsigned char>(ch));
}

class SexprReader {
 public:
  explicit SexprReader(std::string_view text) : text_(text) {}

  NaryTree read() {
    skip_space();
    if (pos_ == text_.size()) throw ParseError("empty input", 0);
    std::vector<NaryTree> items;
    while (true) {
      skip_space();
      if (pos_ == text_.size()) break;
      if (text_[pos_] == ')') throw ParseError("unbalanced parentheses: unexpected ')'", pos_);
      items.push_back(text_[pos_] == '(' ? read_node() : NaryTree{read_token(), {}});
    }
    if (items.size() == 1) return std::move(items.front());
    return NaryTree{{}, std::move(items)};
  }

 private:
  NaryTree read_node() {
    const std::size_t open = pos_++;
    // Penn-style label glued to the parenthesis.
    if (pos_ < text_.size() && is_token_char(text_[pos_])) read_token();
    NaryTree node;
    while (true) {
      skip_space();
      if (pos_ == text_.size()) throw ParseError("unbalanced parentheses", pos_);
      const char ch = text_[pos_];
      if (ch == ')') {
        ++pos_;
        break;
      }
      if (ch == '(')
        node.children.push_back(read_node());
      else
        node.children.push_back(NaryTree{read_token(), {}});
    }
    if (node.children.empty()) throw ParseError("node without children", open);
    return node;
  }

  std::string read_token() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_token_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

int binarize_into(const NaryTree& tree, ParseTree& out) {
  if (tree.is_leaf()) return out.add_leaf(tree.token);
  if (tree.children.size() == 1) return binarize_into(tree.children.front(), out);
  int acc = binarize_into(tree.children[0], out);
  for (std::size_t i = 1; i < tree.children.size(); ++i) {
    const int right = binarize_into(tree.children[i], out);
    acc = out.add_internal(acc, right);
  }
  return acc;
}

void populate(const ParseTree& tree, int index, TraversalArrays& arrays) {
  const auto& node = tree.nodes()[static_cast<std::size_t>(index)];
  if (node.is_leaf()) {
    arrays.is_leaf.push_back(1);
    arrays.left.push_back(-1);
    arrays.right.push_back(-1);
    arrays.word_ids.push_back(node.id);
    return;
  }
  populate(tree, node.left, arrays);
  const int left_index = arrays.root();
  populate(tree, node.right, arrays);
  const int right_index = arrays.root();
  arrays.is_leaf.push_back(0);
  arrays.left.push_back(left_index);
  arrays.right.push_back(right_index);
  arrays.word_ids.push_back(-1);
}

}  // namespace

std::vector<TokenId> ParseTree::leaf_ids() const {
  std::vector<TokenId> out;
  if (!empty()) visit_leaves(nodes_, root(), [&](const Node& n) { out.push_back(n.id); });
  return out;
}

std::vector<std::string> ParseTree::leaf_tokens() const {
  std::vector<std::string> out;
  if (!empty()) visit_leaves(nodes_, root(), [&](const Node& n) { out.push_back(n.token); });
  return out;
}

void ParseTree::assign_ids(const std::function<TokenId(const std::string&)>& lookup) {
  for (Node& node : nodes_)
    if (node.is_leaf()) node.id = lookup(node.token);
}

ParseTree ParseTree::left_branching(const std::vector<TokenId>& ids) {
  if (ids.empty()) throw std::invalid_argument("left_branching: no tokens");
  ParseTree tree;
  int acc = tree.add_leaf({}, ids[0]);
  for (std::size_t i = 1; i < ids.size(); ++i) {
    const int leaf = tree.add_leaf({}, ids[i]);
    acc = tree.add_internal(acc, leaf);
  }
  return tree;
}

std::size_t TraversalArrays::leaf_count() const {
  std::size_t n = 0;
  for (auto leaf : is_leaf) n += leaf;
  return n;
}

std::vector<TokenId> TraversalArrays::leaves() const {
  std::vector<TokenId> out;
  for (std::size_t i = 0; i < size(); ++i)
    if (is_leaf[i]) out.push_back(word_ids[i]);
  return out;
}

NaryTree read_sexpr(std::string_view text) { return SexprReader(text).read(); }

ParseTree binarize(const NaryTree& tree) {
  ParseTree out;
  binarize_into(tree, out);
  return out;
}

ParseTree parse_sexpr(std::string_view text) { return binarize(read_sexpr(text)); }

ParseTree parse_sexpr(std::string_view text, const Vocab& vocab) {
  ParseTree tree = parse_sexpr(text);
  tree.assign_ids([&](const std::string& token) { return vocab.lookup(normalize_token(token)); });
  return tree;
}

TraversalArrays post_order_arrays(const ParseTree& tree) {
  TraversalArrays arrays;
  if (tree.empty()) return arrays;
  const std::size_t n = tree.nodes().size();
  arrays.is_leaf.reserve(n);
  arrays.left.reserve(n);
  arrays.right.reserve(n);
  arrays.word_ids.reserve(n);
  populate(tree, tree.root(), arrays);
  return arrays;
}

}  // namespace hypersent
