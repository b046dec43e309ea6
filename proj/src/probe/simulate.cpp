#include "seqprobe/probe/simulate.hpp"

#include <algorithm>
#include <random>

#include "seqprobe/training/corpus.hpp"

namespace seqprobe::probe {

LikelihoodFn make_model_likelihood(std::shared_ptr<const inference::ModelBundle> bundle, const Catalog& catalog) {
  std::vector<std::vector<seq2seq::TokenId>> titles;
  for (const auto& item : catalog.items()) {
    if (item.title_tokens.empty()) throw CatalogError("item '" + item.id + "' has no title to score against");
    titles.push_back(bundle->src_vocab.encode(item.title_tokens));
  }
  return [bundle = std::move(bundle), titles = std::move(titles)](std::span<const std::string> input,
                                                                   std::size_t item) {
    if (input.empty()) throw std::invalid_argument("cannot score an empty input");
    const auto target = bundle->tgt_vocab.encode(input);
    return inference::sequence_log_likelihood(bundle->model, titles.at(item), target).log_likelihood;
  };
}

SimulationResult simulate_user(const Catalog& catalog, std::size_t target, const SimulationOptions& options,
                               PosteriorState start) {
  if (target >= catalog.size()) throw std::out_of_range("simulation target outside the catalog");
  PosteriorState state = start.posterior.empty() ? PosteriorState::uniform(catalog.size()) : std::move(start);
  SimulationResult result;
  result.target = target;
  for (std::size_t turn = 0; turn < options.max_turns; ++turn) {
    Decision d = decide(catalog, state, options.decide);
    if (d.kind != Decision::Kind::Ask) {
      result.identified = !d.items.empty() && d.items.front().index == target;
      result.final_decision = std::move(d);
      return result;
    }
    result.questions.push_back(d.attribute);
    state = state.with_asked(d.attribute);
    state = apply_answer(catalog, state, d.attribute, training::tokenize(catalog.value(target, d.attribute)),
                         options.answer);
  }
  throw std::runtime_error("simulation did not finish within " + std::to_string(options.max_turns) + " turns");
}

Catalog make_bisection_catalog(std::size_t bits, std::uint64_t seed) {
  if (bits == 0 || bits > 16) throw std::invalid_argument("bisection catalog needs 1..16 attributes");
  std::mt19937_64 rng(seed);
  const std::size_t n = std::size_t{1} << bits;
  std::vector<std::size_t> codes(n);
  for (std::size_t i = 0; i < n; ++i) codes[i] = i;
  std::shuffle(codes.begin(), codes.end(), rng);
  std::vector<bool> flip(bits);
  for (std::size_t b = 0; b < bits; ++b) flip[b] = rng() & 1;
  std::vector<Item> items;
  for (std::size_t i = 0; i < n; ++i) {
    Item item;
    item.id = "item" + std::to_string(i);
    for (std::size_t b = 0; b < bits; ++b) {
      const bool bit = ((codes[i] >> b) & 1) != flip[b];
      item.attributes["attr" + std::to_string(b)] = bit ? "yes" : "no";
      item.title += (b ? " " : "") + std::string(bit ? "yes" : "no") + std::to_string(b);
    }
    items.push_back(std::move(item));
  }
  return Catalog(std::move(items));
}

}  // namespace seqprobe::probe
