#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace codemine {

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kReserved = 4;

  Vocabulary();

  /// Tokens with frequency >= min_frequency, ordered by descending frequency
  /// then bytewise; ids follow the reserved ones.
  static Vocabulary build(const std::vector<std::vector<std::string>>& sequences,
                          int min_frequency);
  /// Rebuilds from the full id-ordered token list (reserved entries included).
  static Vocabulary from_tokens(const std::vector<std::string>& all_tokens, int min_frequency);

  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(tokens_.size()); }
  int min_frequency() const { return min_frequency_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::uint64_t hash() const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  int min_frequency_ = 1;
};

}  // namespace codemine
