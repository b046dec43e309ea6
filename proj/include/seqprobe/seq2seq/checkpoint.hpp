#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "seqprobe/seq2seq/params.hpp"

namespace seqprobe::seq2seq {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// On-disk model: config, every named tensor and, optionally, the word lists
/// of the source and target vocabularies (index = token id).
struct Checkpoint {
  Model model;
  std::vector<std::string> src_words;
  std::vector<std::string> tgt_words;
};

nlohmann::json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
/// Validates every tensor shape against the embedded config.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json tensor_to_json(const num::Tensor& t);
num::Tensor tensor_from_json(const nlohmann::json& j);

}  // namespace seqprobe::seq2seq
