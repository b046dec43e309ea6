#include "seqprobe/training/vocab.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace seqprobe::training {

Vocab::Vocab() : words_{std::string(kUnkWord), std::string(kEosWord), std::string(kBosWord)} {
  for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], static_cast<TokenId>(i));
}

Vocab Vocab::build(std::span<const std::vector<std::string>> sequences, std::size_t max_size) {
  if (max_size < seq2seq::kReservedTokens + 1)
    throw std::invalid_argument("vocabulary cap must be at least 4, got " + std::to_string(max_size));
  if (sequences.empty()) throw std::invalid_argument("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& seq : sequences)
    for (const auto& w : seq)
      if (w != kUnkWord && w != kEosWord && w != kBosWord) ++counts[w];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // std::map iteration is already lexicographic, so a stable sort on count keeps the tie rule.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words{std::string(kUnkWord), std::string(kEosWord), std::string(kBosWord)};
  for (auto& [w, n] : ranked) {
    if (words.size() >= max_size) break;
    words.push_back(std::move(w));
  }
  return from_words(std::move(words));
}

Vocab Vocab::from_words(std::vector<std::string> words) {
  if (words.size() < seq2seq::kReservedTokens || words[seq2seq::kUnkId] != kUnkWord ||
      words[seq2seq::kEosId] != kEosWord || words[seq2seq::kBosId] != kBosWord)
    throw std::invalid_argument("vocabulary must start with <unk>, </s>, <s>");
  Vocab v;
  v.words_ = std::move(words);
  v.index_.clear();
  for (std::size_t i = 0; i < v.words_.size(); ++i)
    if (!v.index_.emplace(v.words_[i], static_cast<TokenId>(i)).second)
      throw std::invalid_argument("duplicate vocabulary entry '" + v.words_[i] + "'");
  return v;
}

TokenId Vocab::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? seq2seq::kUnkId : it->second;
}

bool Vocab::contains(std::string_view word) const { return index_.count(std::string(word)) != 0; }

const std::string& Vocab::word(TokenId id) const {
  if (id >= words_.size())
    throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of " +
                            std::to_string(words_.size()));
  return words_[id];
}

std::vector<TokenId> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocab::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  for (TokenId i : ids)
    if (i != seq2seq::kEosId && i != seq2seq::kBosId) out.push_back(word(i));
  return out;
}

}  // namespace seqprobe::training
