#pragma once

#include <span>
#include <vector>

#include "seqprobe/numerics/tape.hpp"
#include "seqprobe/seq2seq/params.hpp"

namespace seqprobe::seq2seq {

using num::Tape;
using num::Var;

struct LstmState {
  Var h;
  Var c;
};

/// i,f,o = sigmoid(W_e e + W_h h + b); c' = f*c + i*tanh(W_ec e + W_hc h + b_c); h' = o*tanh(c').
LstmState lstm_step(Tape& tape, const LstmWeights& w, Var input, const LstmState& prev);

LstmState zero_state(Tape& tape, std::size_t hidden);

struct EncoderOutput {
  /// Top-layer [forward; backward] hidden vectors, one per source token.
  std::vector<Var> top_hidden;
  /// [forward h at the last token; backward h at the first token], and the cell analog.
  LstmState final_state;
};

EncoderOutput encode(Tape& tape, std::span<const TokenId> src, const Model& model);

/// Softmax-normalized attention weights of `query` over `keys`. Rejects Attention::None.
Var attention_weights(Tape& tape, std::span<const Var> keys, Var query, const Model& model);

/// relu(W_c [g; h] + b_c) with g the attention-weighted sum of `keys`.
Var attend_and_combine(Tape& tape, std::span<const Var> keys, Var query, const Model& model);

struct DecoderState {
  std::vector<LstmState> layers;
};

/// Every decoder layer starts from the encoder's final state.
DecoderState initial_decoder_state(const EncoderOutput& enc, const Model& model);

struct StepOutput {
  Var dist;
  DecoderState state;
};

StepOutput decode_step(Tape& tape, TokenId prev_token, const DecoderState& state, const EncoderOutput& enc,
                       const Model& model);

/// Teacher-forced output distributions: the i-th entry predicts tgt[i] from BOS, tgt[0..i).
std::vector<Var> teacher_forced(Tape& tape, std::span<const TokenId> src, std::span<const TokenId> tgt,
                                const Model& model);

/// Sum of per-word cross-entropy. `tgt` must end with EOS.
Var forward_loss(Tape& tape, std::span<const TokenId> src, std::span<const TokenId> tgt, const Model& model);

}  // namespace seqprobe::seq2seq
