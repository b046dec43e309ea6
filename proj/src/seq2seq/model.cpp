#include "seqprobe/seq2seq/model.hpp"

#include <stdexcept>

#include "seqprobe/numerics/ops.hpp"

namespace seqprobe::seq2seq {

using namespace seqprobe::num;

namespace {

Var gate_preactivation(Tape& tape, const GateWeights& g, Var input, Var h_prev) {
  return add(add(matmul(tape.parameter(g.input_weight), input), matmul(tape.parameter(g.recurrent_weight), h_prev)),
             tape.parameter(g.bias));
}

Var embed(Tape& tape, const Tensor& table, TokenId id, const char* side) {
  if (id >= table.dim(1))
    throw std::out_of_range(std::string(side) + " token id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(table.dim(1)));
  return column(tape.parameter(table), id);
}

std::vector<LstmState> run_direction(Tape& tape, const LstmWeights& w, std::span<const Var> inputs, bool reverse) {
  const std::size_t m = inputs.size();
  std::vector<LstmState> out(m);
  LstmState state = zero_state(tape, w.hidden_size());
  for (std::size_t step = 0; step < m; ++step) {
    const std::size_t t = reverse ? m - 1 - step : step;
    state = lstm_step(tape, w, inputs[t], state);
    out[t] = state;
  }
  return out;
}

}  // namespace

LstmState zero_state(Tape& tape, std::size_t hidden) {
  return {tape.constant(Tensor({hidden})), tape.constant(Tensor({hidden}))};
}

LstmState lstm_step(Tape& tape, const LstmWeights& w, Var input, const LstmState& prev) {
  const std::size_t hidden = w.hidden_size();
  if (input.value().rank() != 1 || input.value().size() != w.input_size())
    throw DimensionError("lstm_step: input " + shape_string(input.value().shape()) + " but layer expects [" +
                         std::to_string(w.input_size()) + "]");
  if (prev.h.value().size() != hidden || prev.c.value().size() != hidden)
    throw DimensionError("lstm_step: state " + shape_string(prev.h.value().shape()) + "/" +
                         shape_string(prev.c.value().shape()) + " but layer hidden size is " + std::to_string(hidden));

  Var i = sigmoid(gate_preactivation(tape, w.gates[kInputGate], input, prev.h));
  Var f = sigmoid(gate_preactivation(tape, w.gates[kForgetGate], input, prev.h));
  Var g = tanh(gate_preactivation(tape, w.gates[kCellGate], input, prev.h));
  Var o = sigmoid(gate_preactivation(tape, w.gates[kOutputGate], input, prev.h));
  Var c = add(mul(f, prev.c), mul(i, g));
  Var h = mul(o, tanh(c));
  return {h, c};
}

EncoderOutput encode(Tape& tape, std::span<const TokenId> src, const Model& model) {
  if (src.empty()) throw std::invalid_argument("encode: empty source sequence");
  const ModelParams& p = model.params;
  std::vector<Var> layer_input;
  layer_input.reserve(src.size());
  for (TokenId id : src) layer_input.push_back(embed(tape, p.src_embedding, id, "source"));

  std::vector<LstmState> fwd, bwd;
  for (const BiLstmWeights& layer : p.encoder) {
    fwd = run_direction(tape, layer.forward, layer_input, false);
    bwd = run_direction(tape, layer.backward, layer_input, true);
    for (std::size_t t = 0; t < src.size(); ++t) layer_input[t] = concat(fwd[t].h, bwd[t].h);
  }
  EncoderOutput out;
  out.top_hidden = std::move(layer_input);
  out.final_state = {concat(fwd.back().h, bwd.front().h), concat(fwd.back().c, bwd.front().c)};
  return out;
}

Var attention_weights(Tape& tape, std::span<const Var> keys, Var query, const Model& model) {
  if (keys.empty()) throw std::invalid_argument("attention_weights: no source vectors");
  const AttentionWeights& a = model.params.attention;
  Var scores;
  switch (model.config.attention) {
    case Attention::None: throw std::invalid_argument("attention_weights: model has no attention");
    case Attention::Dot: scores = matmul(stack(keys), query); break;
    case Attention::General: scores = matmul(stack(keys), matmul(tape.parameter(a.general), query)); break;
    case Attention::Concat: {
      std::vector<Var> per_key;
      per_key.reserve(keys.size());
      Var w = tape.parameter(a.concat);
      for (const Var& s : keys) per_key.push_back(matmul(w, concat(s, query)));
      scores = concat(per_key);
      break;
    }
    case Attention::Tensor: {
      const std::size_t d = a.bilinear.dim(0);
      const std::size_t k = a.bilinear.dim(1);
      // W viewed as (d*k) x d gives W h laid out as a d x k matrix R, so s^T R = [s^T W_1 h, ..., s^T W_k h].
      Var r = reshape(matmul(reshape(tape.parameter(a.bilinear), {d * k, d}), query), {d, k});
      Var v = tape.parameter(a.linear);
      Var b = tape.parameter(a.bias);
      Var u = tape.parameter(a.out);
      std::vector<Var> per_key;
      per_key.reserve(keys.size());
      for (const Var& s : keys) per_key.push_back(matmul(u, add(add(matmul(s, r), matmul(v, concat(s, query))), b)));
      scores = concat(per_key);
      break;
    }
  }
  return softmax(scores);
}

Var attend_and_combine(Tape& tape, std::span<const Var> keys, Var query, const Model& model) {
  Var weights = attention_weights(tape, keys, query, model);
  Var context = matmul(weights, stack(keys));
  const ModelParams& p = model.params;
  return relu(add(matmul(tape.parameter(p.combine_weight), concat(context, query)), tape.parameter(p.combine_bias)));
}

DecoderState initial_decoder_state(const EncoderOutput& enc, const Model& model) {
  return DecoderState{std::vector<LstmState>(model.config.dec_layers, enc.final_state)};
}

StepOutput decode_step(Tape& tape, TokenId prev_token, const DecoderState& state, const EncoderOutput& enc,
                       const Model& model) {
  const ModelParams& p = model.params;
  if (state.layers.size() != p.decoder.size())
    throw std::invalid_argument("decode_step: decoder state has " + std::to_string(state.layers.size()) +
                                " layers, model has " + std::to_string(p.decoder.size()));
  StepOutput out;
  out.state.layers.reserve(p.decoder.size());
  Var x = embed(tape, p.tgt_embedding, prev_token, "target");
  for (std::size_t l = 0; l < p.decoder.size(); ++l) {
    LstmState next = lstm_step(tape, p.decoder[l], x, state.layers[l]);
    x = next.h;
    out.state.layers.push_back(next);
  }
  Var top = model.config.attention == Attention::None ? x : attend_and_combine(tape, enc.top_hidden, x, model);
  out.dist = softmax(add(matmul(tape.parameter(p.proj_weight), top), tape.parameter(p.proj_bias)));
  return out;
}

std::vector<Var> teacher_forced(Tape& tape, std::span<const TokenId> src, std::span<const TokenId> tgt,
                                const Model& model) {
  EncoderOutput enc = encode(tape, src, model);
  DecoderState state = initial_decoder_state(enc, model);
  std::vector<Var> dists;
  dists.reserve(tgt.size());
  TokenId prev = kBosId;
  for (TokenId next : tgt) {
    StepOutput step = decode_step(tape, prev, state, enc, model);
    dists.push_back(step.dist);
    state = std::move(step.state);
    prev = next;
  }
  return dists;
}

Var forward_loss(Tape& tape, std::span<const TokenId> src, std::span<const TokenId> tgt, const Model& model) {
  if (tgt.empty()) throw std::invalid_argument("forward_loss: empty target sequence");
  if (tgt.back() != kEosId) throw std::invalid_argument("forward_loss: target must end with EOS");
  std::vector<Var> dists = teacher_forced(tape, src, tgt, model);
  Var loss = cross_entropy(dists[0], tgt[0]);
  for (std::size_t i = 1; i < tgt.size(); ++i) loss = add(loss, cross_entropy(dists[i], tgt[i]));
  return loss;
}

}  // namespace seqprobe::seq2seq
