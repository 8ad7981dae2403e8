#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hypersent {

using TokenId = int;

/// Token <-> id map. Id 0 is reserved for unknown tokens; the rest are
/// assigned in order of first insertion.
class Vocab {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocab();

  /// Returns the id of token, inserting it if new.
  TokenId add(std::string_view token);
  /// Returns the id of token, or kUnk.
  TokenId lookup(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static Vocab from_tokens(const std::vector<std::string>& tokens);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Lower-cases ASCII letters; no stemming.
std::string normalize_token(std::string_view token);

}  // namespace hypersent
