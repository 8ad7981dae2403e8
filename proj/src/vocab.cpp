#include "hypersent/vocab.hpp"

#include <cctype>
#include <stdexcept>

namespace hypersent {

Vocab::Vocab() {
  tokens_.emplace_back(kUnkToken);
  index_.emplace(std::string(kUnkToken), kUnk);
}

TokenId Vocab::add(std::string_view token) {
  if (auto it = index_.find(std::string(token)); it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

TokenId Vocab::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw std::out_of_range("Vocab::token: id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
  if (tokens.empty() || tokens.front() != kUnkToken)
    throw std::invalid_argument("vocabulary must start with the UNK token");
  Vocab v;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) throw std::invalid_argument("duplicate vocabulary token: " + tokens[i]);
    v.add(tokens[i]);
  }
  return v;
}

std::string normalize_token(std::string_view token) {
  std::string out(token);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace hypersent
