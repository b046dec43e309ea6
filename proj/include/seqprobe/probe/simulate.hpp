#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "seqprobe/inference/inference.hpp"
#include "seqprobe/probe/posterior.hpp"

namespace seqprobe::probe {

/// ln Pr(input | item title) under a trained scorer, item title as the source.
LikelihoodFn make_model_likelihood(std::shared_ptr<const inference::ModelBundle> bundle, const Catalog& catalog);

struct SimulationOptions {
  DecideOptions decide;
  AnswerOptions answer;
  std::size_t max_turns = 32;
};

struct SimulationResult {
  std::size_t target = 0;
  std::vector<std::string> questions;  // attributes asked, in order
  Decision final_decision;
  bool identified = false;  // the top recommendation is the target
};

/// Runs the decide-or-ask loop against a user who answers every question with
/// the target's true attribute value.
SimulationResult simulate_user(const Catalog& catalog, std::size_t target, const SimulationOptions& options = {},
                               PosteriorState start = {});

/// 2^bits items whose `bits` binary attributes split the catalog in halves;
/// item order and value names are permuted by `seed`.
Catalog make_bisection_catalog(std::size_t bits, std::uint64_t seed);

}  // namespace seqprobe::probe
