#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqprobe/seq2seq/config.hpp"

namespace seqprobe::training {

using seq2seq::TokenId;

inline constexpr std::string_view kUnkWord = "<unk>";
inline constexpr std::string_view kEosWord = "</s>";
inline constexpr std::string_view kBosWord = "<s>";

/// Word <-> id map. Ids 0..2 are UNK, EOS and BOS; out-of-vocabulary words map to UNK.
class Vocab {
 public:
  /// Only the three reserved entries.
  Vocab();

  /// Keeps the (max_size - 3) most frequent words, ties broken lexicographically.
  static Vocab build(std::span<const std::vector<std::string>> sequences, std::size_t max_size);
  /// Restores a vocabulary from its id-ordered word list (as stored in checkpoints).
  static Vocab from_words(std::vector<std::string> words);

  TokenId id(std::string_view word) const;
  bool contains(std::string_view word) const;
  const std::string& word(TokenId id) const;
  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }

  std::vector<TokenId> encode(std::span<const std::string> tokens) const;
  /// EOS and BOS are dropped; UNK decodes to "<unk>".
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace seqprobe::training
