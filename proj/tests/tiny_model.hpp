#pragma once

#include <string>
#include <vector>

#include "codemine/encdec.hpp"

namespace codemine::testing {

inline Vocabulary numbered_vocab(int size) {
  std::vector<std::string> tokens = {"<pad>", "<unk>", "<s>", "</s>"};
  for (int i = Vocabulary::kReserved; i < size; ++i) tokens.push_back("w" + std::to_string(i));
  return Vocabulary::from_tokens(tokens, 1);
}

inline EncDecModel tiny_model(CellType cell, std::uint64_t seed, double scale = 0.1,
                              int vocab = 20, int embed = 4, int hidden = 8) {
  ModelDims dims{embed, hidden, cell};
  EncDecModel m = EncDecModel::create(Direction::snippet_given_intent, dims, numbered_vocab(vocab),
                                      numbered_vocab(vocab));
  Rng rng(seed);
  m.params.init_uniform(rng, scale);
  return m;
}

inline std::vector<int> random_ids(Rng& rng, int vocab, int min_len, int max_len) {
  const int len = min_len + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_len - min_len + 1)));
  std::vector<int> ids;
  for (int i = 0; i < len; ++i)
    ids.push_back(Vocabulary::kReserved +
                  static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab - Vocabulary::kReserved))));
  return ids;
}

}  // namespace codemine::testing
