#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "seqprobe/numerics/tensor.hpp"
#include "seqprobe/seq2seq/config.hpp"

namespace seqprobe::seq2seq {

using num::Tensor;

enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kCellGate = 2, kOutputGate = 3 };

/// One gate of an LSTM block: W_e* (from below), W_h* (recurrent) and b_*.
struct GateWeights {
  Tensor input_weight;
  Tensor recurrent_weight;
  Tensor bias;
};

struct LstmWeights {
  std::array<GateWeights, 4> gates;

  std::size_t hidden_size() const { return gates[0].bias.size(); }
  std::size_t input_size() const { return gates[0].input_weight.dim(1); }
};

struct BiLstmWeights {
  LstmWeights forward;
  LstmWeights backward;
};

/// Only the tensors for the configured variant are allocated.
struct AttentionWeights {
  Tensor general;   // W_g, d_h x d_h
  Tensor concat;    // W_cc, 1 x 2d_h
  Tensor bilinear;  // W, d_h x k x d_h
  Tensor linear;    // V, k x 2d_h
  Tensor bias;      // b, k
  Tensor out;       // U, 1 x k
};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

struct ConstNamedTensor {
  std::string name;
  const Tensor* tensor;
};

struct ModelParams {
  Tensor src_embedding;  // d_emb x |V_src|
  Tensor tgt_embedding;  // d_emb x |V_tgt|
  std::vector<BiLstmWeights> encoder;
  std::vector<LstmWeights> decoder;
  AttentionWeights attention;
  Tensor combine_weight;  // W_c, d_h x 2d_h (attention only)
  Tensor combine_bias;    // b_c, d_h
  Tensor proj_weight;     // W_p, |V_tgt| x d_h
  Tensor proj_bias;       // b_p, |V_tgt|

  /// Every tensor zero-filled, shapes fixed by the config.
  static ModelParams zeros(const ModelConfig& config);
  /// Glorot-uniform matrices, zero biases, forget-gate bias 1.
  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);

  /// Stable, ordered view of every tensor with a dotted name.
  std::vector<NamedTensor> named();
  std::vector<ConstNamedTensor> named() const;
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::size_t parameter_count() const;
};

/// Parameter count implied by a config, computed from the layer formulas alone.
std::size_t expected_parameter_count(const ModelConfig& config);

struct Model {
  ModelConfig config;
  ModelParams params;
};

}  // namespace seqprobe::seq2seq
