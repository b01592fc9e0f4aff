#include "codemine/vocab.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "codemine/util.hpp"

namespace codemine {

Vocabulary::Vocabulary() {
  tokens_ = {"<pad>", "<unk>", "<s>", "</s>"};
  for (int i = 0; i < kReserved; ++i) ids_[tokens_[static_cast<std::size_t>(i)]] = i;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sequences,
                             int min_frequency) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& seq : sequences)
    for (const auto& t : seq) ++counts[t];
  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (auto& [tok, n] : counts)
    if (n >= min_frequency) kept.emplace_back(tok, n);
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  v.min_frequency_ = min_frequency;
  for (auto& [tok, _] : kept) {
    if (v.ids_.count(tok)) continue;  // a literal "<unk>" in the data
    v.ids_[tok] = static_cast<int>(v.tokens_.size());
    v.tokens_.push_back(tok);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& all_tokens, int min_frequency) {
  Vocabulary v;
  if (all_tokens.size() < static_cast<std::size_t>(kReserved) ||
      !std::equal(v.tokens_.begin(), v.tokens_.end(), all_tokens.begin()))
    throw UserError("vocabulary does not start with the reserved tokens");
  v.min_frequency_ = min_frequency;
  for (std::size_t i = kReserved; i < all_tokens.size(); ++i) {
    if (!v.ids_.emplace(all_tokens[i], static_cast<int>(i)).second)
      throw UserError("duplicate vocabulary token " + all_tokens[i]);
    v.tokens_.push_back(all_tokens[i]);
  }
  return v;
}

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end() || it->second < kReserved) return kUnk;
  return it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = fnv1a64("");
  for (const auto& t : tokens_) {
    h = fnv1a64(t, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

}  // namespace codemine
