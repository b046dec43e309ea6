#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "seqprobe/seq2seq/params.hpp"
#include "seqprobe/training/adadelta.hpp"
#include "seqprobe/training/corpus.hpp"

namespace seqprobe::training {

struct TrainConfig {
  seq2seq::ModelConfig model;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  std::size_t batch_size = 1;
  double rho = 0.95;
  double eps = 1e-6;
  double clip_norm = 5.0;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_token_loss = 0.0;
  std::size_t tokens = 0;
  double max_grad_norm = 0.0;
};

struct TrainOptions {
  /// When set, epoch-NNN.json model checkpoints and train-state.json are written here.
  std::optional<std::filesystem::path> checkpoint_dir;
  /// Continue from checkpoint_dir/train-state.json if it exists.
  bool resume = false;
  /// Stored in every checkpoint so it is self-contained.
  const Vocab* src_vocab = nullptr;
  const Vocab* tgt_vocab = nullptr;
  std::function<void(const EpochStats&)> on_epoch;
};

struct TrainResult {
  seq2seq::Model model;
  std::vector<EpochStats> epochs;
};

inline constexpr const char* kTrainStateFile = "train-state.json";

std::filesystem::path epoch_checkpoint_path(const std::filesystem::path& dir, std::size_t epoch);

/// Deterministic given config.seed: fixed initialization and a per-epoch
/// shuffle seeded from (seed, epoch), so a resumed run matches an uninterrupted one.
TrainResult train(std::span<const EncodedPair> data, const TrainConfig& config, const TrainOptions& options = {});

}  // namespace seqprobe::training
