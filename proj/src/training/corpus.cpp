#include "seqprobe/training/corpus.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

namespace seqprobe::training {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 0x80 && std::isspace(u)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (u < 0x80 && std::ispunct(u)) {
      continue;
    } else {
      current.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : ch);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::vector<std::vector<std::string>> PairCorpus::sources() const {
  std::vector<std::vector<std::string>> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.source);
  return out;
}

std::vector<std::vector<std::string>> PairCorpus::targets() const {
  std::vector<std::vector<std::string>> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.target);
  return out;
}

PairCorpus read_pair_corpus(std::istream& in, std::string provenance) {
  PairCorpus corpus;
  corpus.provenance = std::move(provenance);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (tokenize(line).empty()) continue;
    const auto tab = line.find('\t');
    auto where = [&] { return corpus.provenance + ":" + std::to_string(line_no); };
    if (tab == std::string::npos) throw CorpusError(where() + ": expected source<TAB>target");
    TextPair pair{tokenize(std::string_view(line).substr(0, tab)), tokenize(std::string_view(line).substr(tab + 1))};
    if (pair.source.empty()) throw CorpusError(where() + ": empty source side");
    if (pair.target.empty()) throw CorpusError(where() + ": empty target side");
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

PairCorpus load_pair_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus " + path.string());
  return read_pair_corpus(in, path.string());
}

EncodedPair encode_pair(const TextPair& pair, const Vocab& src_vocab, const Vocab& tgt_vocab) {
  if (pair.source.empty()) throw std::invalid_argument("encode_pair: empty source");
  if (pair.target.empty()) throw std::invalid_argument("encode_pair: empty target");
  EncodedPair out{src_vocab.encode(pair.source), tgt_vocab.encode(pair.target)};
  out.target.push_back(seq2seq::kEosId);
  return out;
}

std::vector<EncodedPair> encode_corpus(const PairCorpus& corpus, const Vocab& src_vocab, const Vocab& tgt_vocab) {
  std::vector<EncodedPair> out;
  out.reserve(corpus.pairs.size());
  for (const auto& p : corpus.pairs) out.push_back(encode_pair(p, src_vocab, tgt_vocab));
  return out;
}

PairCorpus make_copy_corpus(std::size_t pairs, std::size_t words, std::size_t min_len, std::size_t max_len,
                            std::uint64_t seed) {
  if (words == 0 || min_len == 0 || min_len > max_len) throw std::invalid_argument("make_copy_corpus: bad shape");
  std::vector<std::string> lexicon;
  for (std::size_t i = 0; i < words; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "w%02zu", i);
    lexicon.emplace_back(buf);
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, words - 1);
  PairCorpus corpus;
  corpus.provenance = "copy-task(seed=" + std::to_string(seed) + ")";
  for (std::size_t i = 0; i < pairs; ++i) {
    TextPair p;
    const std::size_t n = len(rng);
    for (std::size_t k = 0; k < n; ++k) p.source.push_back(lexicon[pick(rng)]);
    p.target = p.source;
    corpus.pairs.push_back(std::move(p));
  }
  return corpus;
}

}  // namespace seqprobe::training
