#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "seqprobe/training/vocab.hpp"

namespace seqprobe::training {

/// Lowercases, strips ASCII punctuation and splits on whitespace.
std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens);

struct TextPair {
  std::vector<std::string> source;
  std::vector<std::string> target;
};

struct PairCorpus {
  std::vector<TextPair> pairs;
  std::string provenance;

  std::vector<std::vector<std::string>> sources() const;
  std::vector<std::vector<std::string>> targets() const;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One pair per line, source and target separated by a tab. Blank lines are
/// skipped; a line with an empty side is an error naming the line number.
PairCorpus read_pair_corpus(std::istream& in, std::string provenance);
PairCorpus load_pair_corpus(const std::filesystem::path& path);

struct EncodedPair {
  std::vector<TokenId> source;
  std::vector<TokenId> target;  // ends with EOS
};

EncodedPair encode_pair(const TextPair& pair, const Vocab& src_vocab, const Vocab& tgt_vocab);
std::vector<EncodedPair> encode_corpus(const PairCorpus& corpus, const Vocab& src_vocab, const Vocab& tgt_vocab);

/// Synthetic copy task: target equals source, words w00..w{n-1}, uniform lengths.
PairCorpus make_copy_corpus(std::size_t pairs, std::size_t words, std::size_t min_len, std::size_t max_len,
                            std::uint64_t seed);

}  // namespace seqprobe::training
