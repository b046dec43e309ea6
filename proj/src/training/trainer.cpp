#include "seqprobe/training/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"
#include "seqprobe/numerics/ops.hpp"
#include "seqprobe/seq2seq/checkpoint.hpp"
#include "seqprobe/seq2seq/model.hpp"

namespace seqprobe::training {
namespace {

using nlohmann::json;
using seq2seq::CheckpointError;

json train_config_to_json(const TrainConfig& c) {
  return json{{"model", seq2seq::config_to_json(c.model)}, {"seed", c.seed},   {"batch_size", c.batch_size},
              {"rho", c.rho},                               {"eps", c.eps},     {"clip_norm", c.clip_norm}};
}

json stats_to_json(const EpochStats& s) {
  return json{{"epoch", s.epoch}, {"mean_token_loss", s.mean_token_loss}, {"tokens", s.tokens},
              {"max_grad_norm", s.max_grad_norm}};
}

EpochStats stats_from_json(const json& j) {
  return EpochStats{j.at("epoch").get<std::size_t>(), j.at("mean_token_loss").get<double>(),
                    j.at("tokens").get<std::size_t>(), j.at("max_grad_norm").get<double>()};
}

seq2seq::Checkpoint make_checkpoint(const seq2seq::Model& model, const TrainOptions& o) {
  seq2seq::Checkpoint c{model, {}, {}};
  if (o.src_vocab) c.src_words = o.src_vocab->words();
  if (o.tgt_vocab) c.tgt_words = o.tgt_vocab->words();
  return c;
}

void write_json_atomic(const json& j, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp);
    out << j.dump();
    if (!out) throw CheckpointError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_state(const std::filesystem::path& path, const TrainConfig& config, const seq2seq::Model& model,
                const AdadeltaState& opt, const std::vector<EpochStats>& epochs, const TrainOptions& o) {
  json acc_g = json::array(), acc_d = json::array();
  for (const auto& t : opt.mean_sq_grad) acc_g.push_back(seq2seq::tensor_to_json(t));
  for (const auto& t : opt.mean_sq_delta) acc_d.push_back(seq2seq::tensor_to_json(t));
  json log = json::array();
  for (const auto& e : epochs) log.push_back(stats_to_json(e));
  write_json_atomic(json{{"format", "seqprobe-train-state"},
                         {"config", train_config_to_json(config)},
                         {"epochs", std::move(log)},
                         {"checkpoint", seq2seq::checkpoint_to_json(make_checkpoint(model, o))},
                         {"mean_sq_grad", std::move(acc_g)},
                         {"mean_sq_delta", std::move(acc_d)}},
                    path);
}

bool load_state(const std::filesystem::path& path, const TrainConfig& config, seq2seq::Model& model,
                AdadeltaState& opt, std::vector<EpochStats>& epochs) {
  std::ifstream in(path);
  if (!in) return false;
  const json j = json::parse(in);
  if (j.value("format", std::string()) != "seqprobe-train-state") throw CheckpointError(path.string() + ": not a training state");
  if (j.at("config") != train_config_to_json(config))
    throw CheckpointError(path.string() + ": training config differs from the saved run; refusing to resume");
  model = seq2seq::checkpoint_from_json(j.at("checkpoint")).model;
  const auto& g = j.at("mean_sq_grad");
  const auto& d = j.at("mean_sq_delta");
  if (g.size() != opt.mean_sq_grad.size() || d.size() != opt.mean_sq_delta.size())
    throw CheckpointError(path.string() + ": optimizer state does not match the model");
  for (std::size_t i = 0; i < g.size(); ++i) {
    opt.mean_sq_grad[i] = seq2seq::tensor_from_json(g[i]);
    opt.mean_sq_delta[i] = seq2seq::tensor_from_json(d[i]);
  }
  epochs.clear();
  for (const auto& e : j.at("epochs")) epochs.push_back(stats_from_json(e));
  return true;
}

}  // namespace

std::filesystem::path epoch_checkpoint_path(const std::filesystem::path& dir, std::size_t epoch) {
  char name[32];
  std::snprintf(name, sizeof name, "epoch-%03zu.json", epoch);
  return dir / name;
}

TrainResult train(std::span<const EncodedPair> data, const TrainConfig& config, const TrainOptions& options) {
  if (data.empty()) throw std::invalid_argument("train: empty corpus");
  if (config.batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
  for (const auto& p : data)
    if (p.source.empty() || p.target.empty() || p.target.back() != seq2seq::kEosId)
      throw std::invalid_argument("train: every pair needs a non-empty source and an EOS-terminated target");

  TrainResult result{seq2seq::Model{config.model, seq2seq::ModelParams::initialize(config.model, config.seed)}, {}};
  seq2seq::Model& model = result.model;
  std::vector<Tensor*> params = model.params.tensors();
  AdadeltaState opt =
      AdadeltaState::for_params(std::vector<const Tensor*>(params.begin(), params.end()), config.rho, config.eps);

  std::optional<std::filesystem::path> state_path;
  if (options.checkpoint_dir) {
    std::filesystem::create_directories(*options.checkpoint_dir);
    state_path = *options.checkpoint_dir / kTrainStateFile;
    if (options.resume && load_state(*state_path, config, model, opt, result.epochs)) {
      params = model.params.tensors();
      if (result.epochs.size() > config.epochs)
        throw CheckpointError("saved run already has " + std::to_string(result.epochs.size()) +
                              " epochs, more than requested");
    }
  }

  std::vector<std::size_t> order(data.size());
  std::vector<Tensor> grads(params.size());
  std::vector<const Tensor*> grad_ptrs(params.size());
  for (std::size_t epoch = result.epochs.size() + 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(epoch)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);

    EpochStats stats;
    stats.epoch = epoch;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      num::Tape tape;
      std::vector<num::Var> losses;
      for (std::size_t b = start; b < end; ++b) {
        const EncodedPair& p = data[order[b]];
        losses.push_back(seq2seq::forward_loss(tape, p.source, p.target, model));
        loss_sum += losses.back().value().item();
        stats.tokens += p.target.size();
      }
      // Mean over the pairs of the batch of each pair's summed token loss.
      num::Var batch_loss = num::scale(num::sum(num::concat(losses)), 1.0 / static_cast<double>(losses.size()));
      tape.backward(batch_loss);
      for (std::size_t i = 0; i < params.size(); ++i) {
        const Tensor* g = tape.gradient_of(*params[i]);
        grads[i] = g ? *g : Tensor(params[i]->shape());
        grad_ptrs[i] = &grads[i];
      }
      stats.max_grad_norm = std::max(stats.max_grad_norm, clip_global_norm(grads, config.clip_norm));
      adadelta_step(params, grad_ptrs, opt);
    }
    stats.mean_token_loss = loss_sum / static_cast<double>(stats.tokens);
    result.epochs.push_back(stats);
    if (options.checkpoint_dir) {
      seq2seq::save_checkpoint(make_checkpoint(model, options), epoch_checkpoint_path(*options.checkpoint_dir, epoch));
      save_state(*state_path, config, model, opt, result.epochs, options);
    }
    if (options.on_epoch) options.on_epoch(stats);
  }
  return result;
}

}  // namespace seqprobe::training
