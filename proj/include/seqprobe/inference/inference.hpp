#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "seqprobe/seq2seq/params.hpp"
#include "seqprobe/training/vocab.hpp"

namespace seqprobe::inference {

using seq2seq::Model;
using seq2seq::TokenId;

enum class Termination { Eos, MaxLen };
std::string_view to_string(Termination t);

struct Rewrite {
  std::vector<TokenId> tokens;       // without EOS
  std::vector<double> probabilities;  // chosen-token probability per step, including the EOS step
  Termination termination = Termination::MaxLen;
};

/// Argmax decoding from BOS until EOS or max_decode_len tokens; ties go to the lowest id.
Rewrite greedy_decode(const Model& model, std::span<const TokenId> source);

struct RelevanceScore {
  double log_likelihood = 0.0;  // ln Pr(target + EOS | source)
  std::size_t length = 0;       // target tokens + EOS
  double normalized() const { return log_likelihood / static_cast<double>(length); }
};

/// Teacher-forced log-likelihood of `target` followed by EOS.
RelevanceScore sequence_log_likelihood(const Model& model, std::span<const TokenId> source,
                                       std::span<const TokenId> target);
/// Log-probability that decoding starts with `prefix` (no EOS appended). An empty prefix gives 0.
double prefix_log_likelihood(const Model& model, std::span<const TokenId> source, std::span<const TokenId> prefix);

struct ScoredCandidate {
  std::size_t index;  // position in the input candidate list
  RelevanceScore score;
};

/// Scores Pr(query | candidate) with each candidate as the source and ranks
/// descending; stable, so equal scores keep input order.
std::vector<ScoredCandidate> score_candidates(const Model& model, std::span<const TokenId> query,
                                              std::span<const std::vector<TokenId>> candidates,
                                              bool length_normalized = false);

/// A model together with the vocabularies it was trained with.
struct ModelBundle {
  Model model;
  training::Vocab src_vocab;
  training::Vocab tgt_vocab;

  std::vector<TokenId> encode_source(std::string_view text) const;
  std::vector<TokenId> encode_target(std::string_view text) const;
};

/// Loads a checkpoint; it must carry both word lists.
ModelBundle load_bundle(const std::filesystem::path& checkpoint);

}  // namespace seqprobe::inference
