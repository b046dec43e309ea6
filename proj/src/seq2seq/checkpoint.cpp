#include "seqprobe/seq2seq/checkpoint.hpp"

#include <fstream>

namespace seqprobe::seq2seq {

using nlohmann::json;

namespace {
constexpr const char* kFormat = "seqprobe-checkpoint";
constexpr int kVersion = 1;
}  // namespace

json config_to_json(const ModelConfig& c) {
  return json{{"src_vocab_size", c.src_vocab_size},
              {"tgt_vocab_size", c.tgt_vocab_size},
              {"d_emb", c.d_emb},
              {"d_h", c.d_h},
              {"enc_layers", c.enc_layers},
              {"dec_layers", c.dec_layers},
              {"attention", std::string(to_string(c.attention))},
              {"tensor_k", c.tensor_k},
              {"max_decode_len", c.max_decode_len}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  try {
    c.src_vocab_size = j.at("src_vocab_size").get<std::size_t>();
    c.tgt_vocab_size = j.at("tgt_vocab_size").get<std::size_t>();
    c.d_emb = j.at("d_emb").get<std::size_t>();
    c.d_h = j.at("d_h").get<std::size_t>();
    c.enc_layers = j.at("enc_layers").get<std::size_t>();
    c.dec_layers = j.at("dec_layers").get<std::size_t>();
    c.attention = parse_attention(j.at("attention").get<std::string>());
    c.tensor_k = j.value("tensor_k", std::size_t{8});
    c.max_decode_len = j.value("max_decode_len", std::size_t{20});
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed model config: ") + e.what());
  }
  c.validate();
  return c;
}

json tensor_to_json(const num::Tensor& t) {
  return json{{"shape", t.shape()}, {"data", std::vector<double>(t.data().begin(), t.data().end())}};
}

num::Tensor tensor_from_json(const json& j) {
  return num::Tensor(j.at("shape").get<num::Shape>(), j.at("data").get<std::vector<double>>());
}

json checkpoint_to_json(const Checkpoint& ckpt) {
  json tensors = json::object();
  for (const auto& [name, t] : ckpt.model.params.named()) tensors[name] = tensor_to_json(*t);
  json j{{"format", kFormat},
         {"version", kVersion},
         {"config", config_to_json(ckpt.model.config)},
         {"tensors", std::move(tensors)}};
  if (!ckpt.src_words.empty()) j["src_vocab"] = ckpt.src_words;
  if (!ckpt.tgt_words.empty()) j["tgt_vocab"] = ckpt.tgt_words;
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  if (j.value("format", std::string()) != kFormat) throw CheckpointError("not a seqprobe checkpoint");
  if (j.value("version", 0) != kVersion)
    throw CheckpointError("unsupported checkpoint version " + j.value("version", json()).dump());
  Checkpoint ckpt;
  ckpt.model.config = config_from_json(j.at("config"));
  ckpt.model.params = ModelParams::zeros(ckpt.model.config);
  const json& tensors = j.at("tensors");
  auto named = ckpt.model.params.named();
  if (tensors.size() != named.size())
    throw CheckpointError("checkpoint holds " + std::to_string(tensors.size()) + " tensors, config implies " +
                          std::to_string(named.size()));
  for (auto& [name, t] : named) {
    if (!tensors.contains(name)) throw CheckpointError("checkpoint is missing tensor '" + name + "'");
    num::Tensor loaded;
    try {
      loaded = tensor_from_json(tensors.at(name));
    } catch (const std::exception& e) {
      throw CheckpointError("tensor '" + name + "': " + e.what());
    }
    if (loaded.shape() != t->shape())
      throw CheckpointError("tensor '" + name + "' has shape " + num::shape_string(loaded.shape()) + ", expected " +
                            num::shape_string(t->shape()));
    if (!loaded.all_finite()) throw CheckpointError("tensor '" + name + "' contains non-finite values");
    *t = std::move(loaded);
  }
  ckpt.src_words = j.value("src_vocab", std::vector<std::string>{});
  ckpt.tgt_words = j.value("tgt_vocab", std::vector<std::string>{});
  if (!ckpt.src_words.empty() && ckpt.src_words.size() != ckpt.model.config.src_vocab_size)
    throw CheckpointError("source vocabulary size disagrees with config");
  if (!ckpt.tgt_words.empty() && ckpt.tgt_words.size() != ckpt.model.config.tgt_vocab_size)
    throw CheckpointError("target vocabulary size disagrees with config");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out << checkpoint_to_json(ckpt).dump();
    if (!out) throw CheckpointError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CheckpointError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace seqprobe::seq2seq
