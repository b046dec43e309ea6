#pragma once

#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace seqprobe::eval {

using Tokens = std::vector<std::string>;

struct NgramPrecision {
  std::size_t matched = 0;  // clipped
  std::size_t total = 0;
};

/// Clipped n-gram counts of `candidate` against the per-n-gram maximum over references.
NgramPrecision modified_precision(std::span<const std::string> candidate, std::span<const Tokens> references,
                                  std::size_t n);

/// Sentence BLEU: geometric mean of clipped precisions for n = 1..max_n times
/// the brevity penalty (closest reference length, shorter on ties). Candidates
/// shorter than max_n tokens get add-one smoothing on the n > 1 precisions.
/// An empty candidate scores 0.
double bleu(std::span<const std::string> candidate, std::span<const Tokens> references, std::size_t max_n = 4);

struct BleuPair {
  Tokens candidate;
  std::vector<Tokens> references;
};

/// Arithmetic mean of sentence scores.
double corpus_bleu(std::span<const BleuPair> pairs, std::size_t max_n = 4);
/// Counts and lengths pooled over the corpus before combining; no smoothing.
double pooled_bleu(std::span<const BleuPair> pairs, std::size_t max_n = 4);

struct ScoredLabel {
  double score;
  bool positive;
};

/// Mann-Whitney rank statistic with midranks: (concordant + ties/2) / (P N).
double auc(std::span<const ScoredLabel> data);

enum class Label { Bad, Fair, Good, Excellent };
Label parse_label(std::string_view text);
std::string_view to_string(Label label);
/// good and excellent are the positive class.
bool is_positive(Label label);
/// Accepts the four judgement labels plus 0/1 and true/false.
bool parse_binary_label(std::string_view text);

/// "candidate<TAB>reference[<TAB>reference...]" per line, tokenized.
std::vector<BleuPair> read_bleu_tsv(std::istream& in, const std::string& source = "input");
/// "score<TAB>label" per line.
std::vector<ScoredLabel> read_auc_tsv(std::istream& in, const std::string& source = "input");

}  // namespace seqprobe::eval
