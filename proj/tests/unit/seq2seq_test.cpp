#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "doctest.h"
#include "seqprobe/numerics/grad_check.hpp"
#include "seqprobe/numerics/ops.hpp"
#include "seqprobe/seq2seq/checkpoint.hpp"
#include "seqprobe/seq2seq/model.hpp"

using namespace seqprobe;
using namespace seqprobe::seq2seq;
using num::Tensor;

namespace {

constexpr Attention kAllVariants[] = {Attention::None, Attention::Dot, Attention::General, Attention::Concat,
                                      Attention::Tensor};

ModelConfig small_config(Attention attention) {
  ModelConfig c;
  c.src_vocab_size = 9;
  c.tgt_vocab_size = 7;
  c.d_emb = 5;
  c.d_h = 6;
  c.enc_layers = 2;
  c.dec_layers = 2;
  c.attention = attention;
  c.tensor_k = 3;
  c.max_decode_len = 6;
  return c;
}

// Random values in every tensor, biases included, so no gradient path is trivially zero.
Model random_model(const ModelConfig& c, std::uint64_t seed, double spread = 0.6) {
  Model m{c, ModelParams::zeros(c)};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-spread, spread);
  for (Tensor* t : m.params.tensors())
    for (double& v : t->data()) v = u(rng);
  return m;
}

Tensor random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor t({n});
  for (double& v : t.data()) v = u(rng);
  return t;
}

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar-loop recomputation of one LSTM step straight from the gate equations.
void reference_lstm(const LstmWeights& w, const Tensor& e, const Tensor& h, const Tensor& c, std::vector<double>& h_out,
                    std::vector<double>& c_out) {
  const std::size_t H = w.hidden_size();
  auto pre = [&](Gate g, std::size_t r) {
    double s = w.gates[g].bias[r];
    for (std::size_t k = 0; k < e.size(); ++k) s += w.gates[g].input_weight.at(r, k) * e[k];
    for (std::size_t k = 0; k < H; ++k) s += w.gates[g].recurrent_weight.at(r, k) * h[k];
    return s;
  };
  h_out.assign(H, 0.0);
  c_out.assign(H, 0.0);
  for (std::size_t r = 0; r < H; ++r) {
    const double i = sigm(pre(kInputGate, r));
    const double f = sigm(pre(kForgetGate, r));
    const double g = std::tanh(pre(kCellGate, r));
    const double o = sigm(pre(kOutputGate, r));
    c_out[r] = f * c[r] + i * g;
    h_out[r] = o * std::tanh(c_out[r]);
  }
}

std::vector<double> values(const num::Var& v) { return {v.value().data().begin(), v.value().data().end()}; }

}  // namespace

TEST_CASE("config validation") {
  ModelConfig c = small_config(Attention::General);
  CHECK_NOTHROW(c.validate());
  c.d_h = 7;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config(Attention::Tensor);
  c.tensor_k = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(parse_attention("tensor") == Attention::Tensor);
  CHECK_THROWS_AS(parse_attention("cosine"), std::invalid_argument);
}

TEST_CASE("parameter shapes follow the config for a sweep of configs") {
  for (Attention a : kAllVariants)
    for (std::size_t enc = 1; enc <= 3; ++enc)
      for (std::size_t dec = 1; dec <= 3; ++dec)
        for (std::size_t dh : {2, 4, 10}) {
          ModelConfig c = small_config(a);
          c.enc_layers = enc;
          c.dec_layers = dec;
          c.d_h = dh;
          c.tensor_k = 4;
          const ModelParams p = ModelParams::zeros(c);
          CHECK(p.parameter_count() == expected_parameter_count(c));
          CHECK(p.src_embedding.shape() == num::Shape{c.d_emb, c.src_vocab_size});
          CHECK(p.tgt_embedding.shape() == num::Shape{c.d_emb, c.tgt_vocab_size});
          REQUIRE(p.encoder.size() == enc);
          REQUIRE(p.decoder.size() == dec);
          for (std::size_t l = 0; l < enc; ++l)
            for (const LstmWeights* w : {&p.encoder[l].forward, &p.encoder[l].backward}) {
              CHECK(w->hidden_size() == dh / 2);
              CHECK(w->input_size() == (l == 0 ? c.d_emb : dh));
              for (const auto& g : w->gates) CHECK(g.recurrent_weight.shape() == num::Shape{dh / 2, dh / 2});
            }
          for (std::size_t l = 0; l < dec; ++l) {
            CHECK(p.decoder[l].hidden_size() == dh);
            CHECK(p.decoder[l].input_size() == (l == 0 ? c.d_emb : dh));
          }
          CHECK(p.proj_weight.shape() == num::Shape{c.tgt_vocab_size, dh});
          if (a == Attention::None) {
            CHECK(p.combine_weight.empty());
          } else {
            CHECK(p.combine_weight.shape() == num::Shape{dh, 2 * dh});
          }
          if (a == Attention::General) CHECK(p.attention.general.shape() == num::Shape{dh, dh});
          if (a == Attention::Concat) CHECK(p.attention.concat.shape() == num::Shape{1, 2 * dh});
          if (a == Attention::Tensor) {
            CHECK(p.attention.bilinear.shape() == num::Shape{dh, 4, dh});
            CHECK(p.attention.linear.shape() == num::Shape{4, 2 * dh});
            CHECK(p.attention.bias.shape() == num::Shape{4});
            CHECK(p.attention.out.shape() == num::Shape{1, 4});
          }
        }
}

TEST_CASE("initialization") {
  const ModelConfig c = small_config(Attention::General);
  const ModelParams a = ModelParams::initialize(c, 5);
  const ModelParams b = ModelParams::initialize(c, 5);
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  for (std::size_t i = 0; i < ta.size(); ++i) CHECK(*ta[i] == *tb[i]);
  for (double v : a.decoder[0].gates[kForgetGate].bias.data()) CHECK(v == 1.0);
  for (double v : a.decoder[0].gates[kInputGate].bias.data()) CHECK(v == 0.0);
  const double r = std::sqrt(6.0 / (c.d_h + 2 * c.d_h));
  for (double v : a.combine_weight.data()) CHECK(std::abs(v) <= r);
}

TEST_CASE("lstm_step") {
  SUBCASE("all zero") {
    LstmWeights w = ModelParams::zeros(small_config(Attention::None)).decoder[1];
    num::Tape tape;
    auto s = lstm_step(tape, w, tape.constant(Tensor({6})), zero_state(tape, 6));
    for (double v : s.h.value().data()) CHECK(v == 0.0);
    for (double v : s.c.value().data()) CHECK(v == 0.0);
  }
  SUBCASE("zero params halve the previous cell") {
    LstmWeights w = ModelParams::zeros(small_config(Attention::None)).decoder[1];
    num::Tape tape;
    const Tensor c0 = Tensor::vector({1.0, -2.0, 0.5, 3.0, 0.0, -0.25});
    auto s = lstm_step(tape, w, tape.constant(Tensor({6})), {tape.constant(Tensor({6})), tape.constant(c0)});
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(s.c.value()[i] == doctest::Approx(0.5 * c0[i]));
      CHECK(s.h.value()[i] == doctest::Approx(0.5 * std::tanh(0.5 * c0[i])));
    }
  }
  SUBCASE("matches scalar-loop recomputation") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
      const Model m = random_model(small_config(Attention::None), 100 + trial, 1.0);
      const LstmWeights& w = m.params.decoder[0];
      const Tensor e = random_vector(5, rng), h = random_vector(6, rng), c = random_vector(6, rng);
      num::Tape tape;
      auto s = lstm_step(tape, w, tape.constant(e), {tape.constant(h), tape.constant(c)});
      std::vector<double> h_ref, c_ref;
      reference_lstm(w, e, h, c, h_ref, c_ref);
      for (std::size_t i = 0; i < 6; ++i) {
        CHECK(std::abs(s.h.value()[i] - h_ref[i]) < 1e-12);
        CHECK(std::abs(s.c.value()[i] - c_ref[i]) < 1e-12);
      }
    }
  }
  SUBCASE("dimension mismatch") {
    LstmWeights w = ModelParams::zeros(small_config(Attention::None)).decoder[0];
    num::Tape tape;
    CHECK_THROWS_AS(lstm_step(tape, w, tape.constant(Tensor({4})), zero_state(tape, 6)), num::DimensionError);
    CHECK_THROWS_AS(lstm_step(tape, w, tape.constant(Tensor({5})), zero_state(tape, 3)), num::DimensionError);
  }
}

TEST_CASE("encode") {
  const std::vector<TokenId> src = {3, 5, 4, 8};
  SUBCASE("zero params give zero outputs") {
    const Model m{small_config(Attention::Dot), ModelParams::zeros(small_config(Attention::Dot))};
    num::Tape tape(false);
    auto enc = encode(tape, src, m);
    REQUIRE(enc.top_hidden.size() == src.size());
    for (auto& s : enc.top_hidden) {
      CHECK(s.value().size() == 6);
      for (double v : s.value().data()) CHECK(v == 0.0);
    }
  }
  SUBCASE("single token sees one step in both directions") {
    ModelConfig c = small_config(Attention::Dot);
    c.enc_layers = 1;
    const Model m = random_model(c, 3);
    num::Tape tape(false);
    const std::vector<TokenId> one = {4};
    auto enc = encode(tape, one, m);
    Var e = num::column(tape.parameter(m.params.src_embedding), 4);
    auto f = lstm_step(tape, m.params.encoder[0].forward, e, zero_state(tape, 3));
    auto b = lstm_step(tape, m.params.encoder[0].backward, e, zero_state(tape, 3));
    std::vector<double> expect = values(f.h);
    const auto bh = values(b.h);
    expect.insert(expect.end(), bh.begin(), bh.end());
    CHECK(values(enc.top_hidden[0]) == expect);
    CHECK(values(enc.final_state.h) == expect);
  }
  SUBCASE("backward direction on reversed input mirrors the forward run") {
    ModelConfig c = small_config(Attention::Dot);
    c.enc_layers = 1;
    Model m = random_model(c, 4);
    m.params.encoder[0].backward = m.params.encoder[0].forward;
    const std::vector<TokenId> seq = {3, 7, 5};
    const std::vector<TokenId> rev = {5, 7, 3};
    num::Tape tape(false);
    auto a = encode(tape, seq, m);
    auto b = encode(tape, rev, m);
    for (std::size_t t = 0; t < 3; ++t) {
      const auto fwd = values(a.top_hidden[t]);
      const auto bwd = values(b.top_hidden[2 - t]);
      for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(bwd[3 + i] - fwd[i]) < 1e-14);
    }
  }
  SUBCASE("final state concatenates forward-last and backward-first") {
    const Model m = random_model(small_config(Attention::Dot), 8);
    num::Tape tape(false);
    auto enc = encode(tape, src, m);
    const auto last = values(enc.top_hidden.back());
    const auto first = values(enc.top_hidden.front());
    const auto fin = values(enc.final_state.h);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(fin[i] == last[i]);
      CHECK(fin[3 + i] == first[3 + i]);
    }
  }
  SUBCASE("errors") {
    const Model m{small_config(Attention::Dot), ModelParams::zeros(small_config(Attention::Dot))};
    num::Tape tape(false);
    CHECK_THROWS_AS(encode(tape, std::vector<TokenId>{}, m), std::invalid_argument);
    CHECK_THROWS_AS(encode(tape, std::vector<TokenId>{3, 9}, m), std::out_of_range);
  }
}

TEST_CASE("attention weights") {
  std::mt19937_64 rng(9);
  SUBCASE("identical keys give uniform weights for every variant") {
    for (Attention a : kAllVariants) {
      if (a == Attention::None) continue;
      const Model m = random_model(small_config(a), 12);
      num::Tape tape(false);
      Var s = tape.constant(random_vector(6, rng));
      std::vector<Var> keys(4, s);
      const Tensor w = attention_weights(tape, keys, tape.constant(random_vector(6, rng)), m).value();
      for (double v : w.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));
    }
  }
  SUBCASE("general with identity equals dot") {
    Model g = random_model(small_config(Attention::General), 13);
    g.params.attention.general = Tensor({6, 6});
    for (std::size_t i = 0; i < 6; ++i) g.params.attention.general.at(i, i) = 1.0;
    const Model d{small_config(Attention::Dot), g.params};
    num::Tape tape(false);
    std::vector<Var> keys;
    for (int j = 0; j < 5; ++j) keys.push_back(tape.constant(random_vector(6, rng)));
    Var h = tape.constant(random_vector(6, rng));
    CHECK(attention_weights(tape, keys, h, g).value() == attention_weights(tape, keys, h, d).value());
    CHECK(attend_and_combine(tape, keys, h, g).value() == attend_and_combine(tape, keys, h, d).value());
  }
  SUBCASE("tensor with zero U is uniform") {
    Model m = random_model(small_config(Attention::Tensor), 14);
    m.params.attention.out = Tensor({1, 3});
    num::Tape tape(false);
    std::vector<Var> keys;
    for (int j = 0; j < 3; ++j) keys.push_back(tape.constant(random_vector(6, rng)));
    const Tensor w = attention_weights(tape, keys, tape.constant(random_vector(6, rng)), m).value();
    for (double v : w.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  }
  SUBCASE("weights sum to one and are permutation-equivariant") {
    for (Attention a : kAllVariants) {
      if (a == Attention::None) continue;
      const Model m = random_model(small_config(a), 15);
      for (int trial = 0; trial < 10; ++trial) {
        num::Tape tape(false);
        std::vector<Var> keys;
        for (int j = 0; j < 5; ++j) keys.push_back(tape.constant(random_vector(6, rng)));
        Var h = tape.constant(random_vector(6, rng));
        const Tensor w = attention_weights(tape, keys, h, m).value();
        CHECK(std::accumulate(w.data().begin(), w.data().end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        std::vector<std::size_t> perm(5);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Var> permuted;
        for (auto p : perm) permuted.push_back(keys[p]);
        const Tensor wp = attention_weights(tape, permuted, h, m).value();
        for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(wp[j] - w[perm[j]]) < 1e-14);
      }
    }
  }
  SUBCASE("None variant is rejected") {
    const Model m = random_model(small_config(Attention::None), 16);
    num::Tape tape(false);
    std::vector<Var> keys{tape.constant(random_vector(6, rng))};
    CHECK_THROWS_AS(attention_weights(tape, keys, keys[0], m), std::invalid_argument);
  }
}

TEST_CASE("attend_and_combine") {
  std::mt19937_64 rng(10);
  SUBCASE("equal keys give g = s") {
    // With W_c = [I 0] and b_c = 0, relu(W_c [g; h]) = relu(g).
    Model m = random_model(small_config(Attention::Concat), 17);
    m.params.combine_weight = Tensor({6, 12});
    for (std::size_t i = 0; i < 6; ++i) m.params.combine_weight.at(i, i) = 1.0;
    m.params.combine_bias = Tensor({6});
    num::Tape tape(false);
    const Tensor s = Tensor::vector({0.3, 0.1, 0.7, 0.2, 0.9, 0.4});
    std::vector<Var> keys(3, tape.constant(s));
    const Tensor out = attend_and_combine(tape, keys, tape.constant(random_vector(6, rng)), m).value();
    for (std::size_t i = 0; i < 6; ++i) CHECK(out[i] == doctest::Approx(s[i]).epsilon(1e-14));
  }
  SUBCASE("zero combination layer gives zero") {
    Model m = random_model(small_config(Attention::Dot), 18);
    m.params.combine_weight = Tensor({6, 12});
    m.params.combine_bias = Tensor({6});
    num::Tape tape(false);
    std::vector<Var> keys{tape.constant(random_vector(6, rng)), tape.constant(random_vector(6, rng))};
    for (double v : attend_and_combine(tape, keys, keys[1], m).value().data()) CHECK(v == 0.0);
  }
  SUBCASE("matches direct formula recomputation") {
    const Model m = random_model(small_config(Attention::General), 19, 1.0);
    const auto& P = m.params;
    std::vector<Tensor> s;
    for (int j = 0; j < 4; ++j) s.push_back(random_vector(6, rng));
    const Tensor h = random_vector(6, rng);
    // scores s_j^T W_g h, softmax, g = sum a_j s_j, relu(W_c [g;h] + b_c)
    std::vector<double> score(4);
    for (int j = 0; j < 4; ++j)
      for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t c = 0; c < 6; ++c) score[j] += s[j][r] * P.attention.general.at(r, c) * h[c];
    const double mx = *std::max_element(score.begin(), score.end());
    double z = 0;
    for (double& x : score) z += (x = std::exp(x - mx));
    std::vector<double> g(6, 0.0);
    for (int j = 0; j < 4; ++j)
      for (std::size_t i = 0; i < 6; ++i) g[i] += score[j] / z * s[j][i];
    std::vector<double> expect(6);
    for (std::size_t r = 0; r < 6; ++r) {
      double acc = P.combine_bias[r];
      for (std::size_t i = 0; i < 6; ++i) acc += P.combine_weight.at(r, i) * g[i] + P.combine_weight.at(r, 6 + i) * h[i];
      expect[r] = std::max(0.0, acc);
    }
    num::Tape tape(false);
    std::vector<Var> keys;
    for (auto& t : s) keys.push_back(tape.constant(t));
    const Tensor out = attend_and_combine(tape, keys, tape.constant(h), m).value();
    for (std::size_t r = 0; r < 6; ++r) CHECK(std::abs(out[r] - expect[r]) < 1e-12);
  }
}

TEST_CASE("decode_step") {
  const std::vector<TokenId> src = {3, 4, 5};
  SUBCASE("zero params give a uniform distribution") {
    for (Attention a : kAllVariants) {
      const Model m{small_config(a), ModelParams::zeros(small_config(a))};
      num::Tape tape(false);
      auto enc = encode(tape, src, m);
      auto step = decode_step(tape, kBosId, initial_decoder_state(enc, m), enc, m);
      for (double v : step.dist.value().data()) CHECK(v == doctest::Approx(1.0 / 7.0).epsilon(1e-14));
    }
  }
  SUBCASE("distributions are valid and match the unrolled forward") {
    const std::vector<TokenId> tgt = {4, 6, 3, 5, kEosId};
    for (Attention a : kAllVariants) {
      const Model m = random_model(small_config(a), 30, 1.5);
      num::Tape unrolled(false);
      auto dists = teacher_forced(unrolled, src, tgt, m);
      num::Tape stepwise(false);
      auto enc = encode(stepwise, src, m);
      DecoderState state = initial_decoder_state(enc, m);
      TokenId prev = kBosId;
      for (std::size_t i = 0; i < tgt.size(); ++i) {
        auto step = decode_step(stepwise, prev, state, enc, m);
        const Tensor& d = step.dist.value();
        double total = 0.0;
        for (double v : d.data()) {
          CHECK(v > 0.0);
          total += v;
        }
        CHECK(std::abs(total - 1.0) < 1e-9);
        for (std::size_t k = 0; k < d.size(); ++k) CHECK(std::abs(d[k] - dists[i].value()[k]) <= 1e-12);
        state = step.state;
        prev = tgt[i];
      }
    }
  }
  SUBCASE("out-of-range token") {
    const Model m{small_config(Attention::Dot), ModelParams::zeros(small_config(Attention::Dot))};
    num::Tape tape(false);
    auto enc = encode(tape, src, m);
    CHECK_THROWS_AS(decode_step(tape, 7, initial_decoder_state(enc, m), enc, m), std::out_of_range);
  }
}

TEST_CASE("forward_loss") {
  const std::vector<TokenId> src = {3, 4, 5, 6};
  SUBCASE("zero params give n ln V") {
    for (Attention a : kAllVariants) {
      const Model m{small_config(a), ModelParams::zeros(small_config(a))};
      num::Tape tape(false);
      const std::vector<TokenId> tgt = {3, 4, 5, kEosId};
      CHECK(forward_loss(tape, src, tgt, m).value().item() == doctest::Approx(4 * std::log(7.0)).epsilon(1e-13));
      const std::vector<TokenId> eos = {kEosId};
      CHECK(forward_loss(tape, src, eos, m).value().item() == doctest::Approx(std::log(7.0)).epsilon(1e-13));
    }
  }
  SUBCASE("target must end with EOS") {
    const Model m{small_config(Attention::Dot), ModelParams::zeros(small_config(Attention::Dot))};
    num::Tape tape;
    CHECK_THROWS_AS(forward_loss(tape, src, std::vector<TokenId>{3, 4}, m), std::invalid_argument);
    CHECK_THROWS_AS(forward_loss(tape, src, std::vector<TokenId>{}, m), std::invalid_argument);
  }
  SUBCASE("gradients match central differences for every variant") {
    for (Attention a : kAllVariants) {
      CAPTURE(to_string(a));
      Model m = random_model(small_config(a), 40);
      const std::vector<TokenId> tgt = {5, 3, 6, kEosId};
      auto params = m.params.tensors();
      const auto report = num::grad_check_parameters(
          [&](num::Tape& t) { return forward_loss(t, src, tgt, m); }, params);
      CHECK(report.checked > 0);
      CHECK(report.max_rel_error < 1e-4);
      // Every parameter tensor receives a gradient.
      num::Tape tape;
      tape.backward(forward_loss(tape, src, tgt, m));
      for (const Tensor* p : params) CHECK(tape.gradient_of(*p) != nullptr);
    }
  }
}

TEST_CASE("checkpoint round trip and validation") {
  const Model m = random_model(small_config(Attention::Tensor), 50);
  Checkpoint ckpt{m, {}, {}};
  const auto path = std::filesystem::temp_directory_path() / "seqprobe_ckpt_test.json";
  save_checkpoint(ckpt, path);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.model.config == m.config);
  const auto a = m.params.tensors();
  const auto b = back.model.params.tensors();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);

  auto j = checkpoint_to_json(ckpt);
  j["tensors"]["projection.bias"]["shape"] = {8};
  j["tensors"]["projection.bias"]["data"] = std::vector<double>(8, 0.0);
  CHECK_THROWS_AS(checkpoint_from_json(j), CheckpointError);
  j = checkpoint_to_json(ckpt);
  j["tensors"].erase("attention.out");
  CHECK_THROWS_AS(checkpoint_from_json(j), CheckpointError);
  j = checkpoint_to_json(ckpt);
  j["config"]["d_h"] = 5;
  CHECK_THROWS(checkpoint_from_json(j));
  std::filesystem::remove(path);
}
