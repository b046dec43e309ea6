#include "seqprobe/inference/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "seqprobe/numerics/ops.hpp"
#include "seqprobe/seq2seq/checkpoint.hpp"
#include "seqprobe/seq2seq/model.hpp"
#include "seqprobe/training/corpus.hpp"

namespace seqprobe::inference {

std::string_view to_string(Termination t) { return t == Termination::Eos ? "eos" : "max_len"; }

Rewrite greedy_decode(const Model& model, std::span<const TokenId> source) {
  if (source.empty()) throw std::invalid_argument("greedy_decode: empty source");
  num::Tape tape(false);
  const seq2seq::EncoderOutput enc = seq2seq::encode(tape, source, model);
  seq2seq::DecoderState state = seq2seq::initial_decoder_state(enc, model);
  Rewrite out;
  TokenId prev = seq2seq::kBosId;
  while (out.tokens.size() < model.config.max_decode_len) {
    seq2seq::StepOutput step = seq2seq::decode_step(tape, prev, state, enc, model);
    const auto dist = step.dist.value().data();
    // max_element returns the first maximum, i.e. the lowest id.
    const auto best = static_cast<TokenId>(std::max_element(dist.begin(), dist.end()) - dist.begin());
    out.probabilities.push_back(dist[best]);
    if (best == seq2seq::kEosId) {
      out.termination = Termination::Eos;
      return out;
    }
    out.tokens.push_back(best);
    prev = best;
    state = std::move(step.state);
  }
  out.termination = Termination::MaxLen;
  return out;
}

namespace {

double teacher_forced_log_prob(const Model& model, std::span<const TokenId> source, std::span<const TokenId> target) {
  num::Tape tape(false);
  const auto dists = seq2seq::teacher_forced(tape, source, target, model);
  double total = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const num::Tensor& d = dists[i].value();
    if (target[i] >= d.size())
      throw std::out_of_range("target token " + std::to_string(target[i]) + " outside vocabulary");
    total += std::log(std::max(d[target[i]], num::kProbFloor));
  }
  return total;
}

}  // namespace

RelevanceScore sequence_log_likelihood(const Model& model, std::span<const TokenId> source,
                                       std::span<const TokenId> target) {
  if (source.empty()) throw std::invalid_argument("sequence_log_likelihood: empty source");
  if (target.empty()) throw std::invalid_argument("sequence_log_likelihood: empty target");
  std::vector<TokenId> full(target.begin(), target.end());
  full.push_back(seq2seq::kEosId);
  return RelevanceScore{teacher_forced_log_prob(model, source, full), full.size()};
}

double prefix_log_likelihood(const Model& model, std::span<const TokenId> source, std::span<const TokenId> prefix) {
  if (source.empty()) throw std::invalid_argument("prefix_log_likelihood: empty source");
  if (prefix.empty()) return 0.0;
  return teacher_forced_log_prob(model, source, prefix);
}

std::vector<ScoredCandidate> score_candidates(const Model& model, std::span<const TokenId> query,
                                              std::span<const std::vector<TokenId>> candidates,
                                              bool length_normalized) {
  if (candidates.empty()) throw std::invalid_argument("score_candidates: no candidates");
  std::vector<ScoredCandidate> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    out.push_back({i, sequence_log_likelihood(model, candidates[i], query)});
  auto key = [length_normalized](const ScoredCandidate& c) {
    return length_normalized ? c.score.normalized() : c.score.log_likelihood;
  };
  std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return key(a) > key(b); });
  return out;
}

std::vector<TokenId> ModelBundle::encode_source(std::string_view text) const {
  return src_vocab.encode(training::tokenize(text));
}

std::vector<TokenId> ModelBundle::encode_target(std::string_view text) const {
  return tgt_vocab.encode(training::tokenize(text));
}

ModelBundle load_bundle(const std::filesystem::path& checkpoint) {
  seq2seq::Checkpoint ckpt = seq2seq::load_checkpoint(checkpoint);
  if (ckpt.src_words.empty() || ckpt.tgt_words.empty())
    throw seq2seq::CheckpointError(checkpoint.string() + " has no vocabulary; it cannot map text to tokens");
  return ModelBundle{std::move(ckpt.model), training::Vocab::from_words(std::move(ckpt.src_words)),
                     training::Vocab::from_words(std::move(ckpt.tgt_words))};
}

}  // namespace seqprobe::inference
