#include "seqprobe/seq2seq/params.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace seqprobe::seq2seq {
namespace {

constexpr const char* kGateNames[4] = {"input_gate", "forget_gate", "cell", "output_gate"};

LstmWeights zero_lstm(std::size_t input, std::size_t hidden) {
  LstmWeights w;
  for (auto& g : w.gates) {
    g.input_weight = Tensor({hidden, input});
    g.recurrent_weight = Tensor({hidden, hidden});
    g.bias = Tensor({hidden});
  }
  return w;
}

void name_lstm(std::vector<NamedTensor>& out, const std::string& prefix, LstmWeights& w) {
  for (std::size_t g = 0; g < 4; ++g) {
    const std::string base = prefix + "." + kGateNames[g];
    out.push_back({base + ".input_weight", &w.gates[g].input_weight});
    out.push_back({base + ".recurrent_weight", &w.gates[g].recurrent_weight});
    out.push_back({base + ".bias", &w.gates[g].bias});
  }
}

}  // namespace

std::string_view to_string(Attention a) {
  switch (a) {
    case Attention::None: return "none";
    case Attention::Dot: return "dot";
    case Attention::General: return "general";
    case Attention::Concat: return "concat";
    case Attention::Tensor: return "tensor";
  }
  return "?";
}

Attention parse_attention(std::string_view name) {
  for (Attention a : {Attention::None, Attention::Dot, Attention::General, Attention::Concat, Attention::Tensor})
    if (to_string(a) == name) return a;
  throw std::invalid_argument("unknown attention variant '" + std::string(name) +
                              "' (expected none|dot|general|concat|tensor)");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("model config: " + msg); };
  if (src_vocab_size <= kReservedTokens || tgt_vocab_size <= kReservedTokens)
    fail("vocabulary sizes must exceed the 3 reserved tokens");
  if (d_emb == 0) fail("d_emb must be positive");
  if (d_h == 0 || d_h % 2 != 0) fail("d_h must be positive and even, got " + std::to_string(d_h));
  if (enc_layers == 0 || dec_layers == 0) fail("layer counts must be positive");
  if (attention == Attention::Tensor && tensor_k == 0) fail("tensor attention needs k >= 1");
  if (max_decode_len == 0) fail("max_decode_len must be positive");
}

ModelParams ModelParams::zeros(const ModelConfig& c) {
  c.validate();
  ModelParams p;
  p.src_embedding = Tensor({c.d_emb, c.src_vocab_size});
  p.tgt_embedding = Tensor({c.d_emb, c.tgt_vocab_size});
  const std::size_t half = c.encoder_hidden();
  for (std::size_t l = 0; l < c.enc_layers; ++l) {
    const std::size_t in = l == 0 ? c.d_emb : c.d_h;
    p.encoder.push_back({zero_lstm(in, half), zero_lstm(in, half)});
  }
  for (std::size_t l = 0; l < c.dec_layers; ++l) p.decoder.push_back(zero_lstm(l == 0 ? c.d_emb : c.d_h, c.d_h));
  switch (c.attention) {
    case Attention::None:
    case Attention::Dot: break;
    case Attention::General: p.attention.general = Tensor({c.d_h, c.d_h}); break;
    case Attention::Concat: p.attention.concat = Tensor({1, 2 * c.d_h}); break;
    case Attention::Tensor:
      p.attention.bilinear = Tensor({c.d_h, c.tensor_k, c.d_h});
      p.attention.linear = Tensor({c.tensor_k, 2 * c.d_h});
      p.attention.bias = Tensor({c.tensor_k});
      p.attention.out = Tensor({1, c.tensor_k});
      break;
  }
  if (c.attention != Attention::None) {
    p.combine_weight = Tensor({c.d_h, 2 * c.d_h});
    p.combine_bias = Tensor({c.d_h});
  }
  p.proj_weight = Tensor({c.tgt_vocab_size, c.d_h});
  p.proj_bias = Tensor({c.tgt_vocab_size});
  return p;
}

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = zeros(config);
  std::mt19937_64 rng(seed);
  for (auto& [name, t] : p.named()) {
    if (t->rank() < 2) continue;
    const double fan_out = static_cast<double>(t->shape().front());
    const double fan_in = static_cast<double>(t->shape().back());
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double r = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : t->data()) v = r * u(rng);
  }
  auto forget_one = [](LstmWeights& w) {
    for (double& v : w.gates[kForgetGate].bias.data()) v = 1.0;
  };
  for (auto& layer : p.encoder) {
    forget_one(layer.forward);
    forget_one(layer.backward);
  }
  for (auto& layer : p.decoder) forget_one(layer);
  return p;
}

std::vector<NamedTensor> ModelParams::named() {
  std::vector<NamedTensor> out;
  out.push_back({"src_embedding", &src_embedding});
  out.push_back({"tgt_embedding", &tgt_embedding});
  for (std::size_t l = 0; l < encoder.size(); ++l) {
    name_lstm(out, "encoder." + std::to_string(l) + ".forward", encoder[l].forward);
    name_lstm(out, "encoder." + std::to_string(l) + ".backward", encoder[l].backward);
  }
  for (std::size_t l = 0; l < decoder.size(); ++l) name_lstm(out, "decoder." + std::to_string(l), decoder[l]);
  auto maybe = [&out](const char* name, Tensor& t) {
    if (!t.empty()) out.push_back({name, &t});
  };
  maybe("attention.general", attention.general);
  maybe("attention.concat", attention.concat);
  maybe("attention.bilinear", attention.bilinear);
  maybe("attention.linear", attention.linear);
  maybe("attention.bias", attention.bias);
  maybe("attention.out", attention.out);
  maybe("combine.weight", combine_weight);
  maybe("combine.bias", combine_bias);
  out.push_back({"projection.weight", &proj_weight});
  out.push_back({"projection.bias", &proj_bias});
  return out;
}

std::vector<ConstNamedTensor> ModelParams::named() const {
  std::vector<ConstNamedTensor> out;
  for (auto& n : const_cast<ModelParams*>(this)->named()) out.push_back({std::move(n.name), n.tensor});
  return out;
}

std::vector<Tensor*> ModelParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& n : named()) out.push_back(n.tensor);
  return out;
}

std::vector<const Tensor*> ModelParams::tensors() const {
  std::vector<const Tensor*> out;
  for (const auto& n : named()) out.push_back(n.tensor);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : tensors()) n += t->size();
  return n;
}

std::size_t expected_parameter_count(const ModelConfig& c) {
  // 4 gates, each W_e (h x in) + W_h (h x h) + b (h).
  auto lstm = [](std::size_t in, std::size_t h) { return 4 * (h * in + h * h + h); };
  std::size_t n = c.d_emb * (c.src_vocab_size + c.tgt_vocab_size);
  const std::size_t half = c.d_h / 2;
  n += 2 * lstm(c.d_emb, half) + 2 * (c.enc_layers - 1) * lstm(c.d_h, half);
  n += lstm(c.d_emb, c.d_h) + (c.dec_layers - 1) * lstm(c.d_h, c.d_h);
  switch (c.attention) {
    case Attention::None:
    case Attention::Dot: break;
    case Attention::General: n += c.d_h * c.d_h; break;
    case Attention::Concat: n += 2 * c.d_h; break;
    case Attention::Tensor: n += c.d_h * c.tensor_k * c.d_h + c.tensor_k * 2 * c.d_h + 2 * c.tensor_k; break;
  }
  if (c.attention != Attention::None) n += c.d_h * 2 * c.d_h + c.d_h;
  n += c.tgt_vocab_size * c.d_h + c.tgt_vocab_size;
  return n;
}

}  // namespace seqprobe::seq2seq
