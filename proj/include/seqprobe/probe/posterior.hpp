#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqprobe/probe/catalog.hpp"

namespace seqprobe::probe {

/// Per-input log-likelihoods are clamped here so that one zero cannot erase an item.
inline constexpr double kLogLikelihoodFloor = -27.631021115928547;  // ln(1e-12)

class DegeneratePosterior : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable value; every update returns a new state.
struct PosteriorState {
  std::vector<double> log_prior;
  std::vector<std::vector<std::string>> inputs;
  std::vector<double> log_weights;  // ln prior + sum of clamped per-input log-likelihoods
  std::vector<double> posterior;
  std::vector<std::string> asked;  // attributes already asked, in order

  static PosteriorState uniform(std::size_t items);
  /// Unnormalized non-negative weights, at least one positive.
  static PosteriorState with_prior(std::span<const double> weights);

  bool was_asked(const std::string& attribute) const;
  PosteriorState with_asked(const std::string& attribute) const;
};

/// ln Pr(input | item).
using LikelihoodFn = std::function<double(std::span<const std::string> input, std::size_t item)>;

PosteriorState posterior_update(const PosteriorState& state, std::vector<std::string> input, const LikelihoodFn& fn);
/// Same update from precomputed per-item log-likelihoods.
PosteriorState posterior_update(const PosteriorState& state, std::vector<std::string> input,
                                std::span<const double> log_likelihoods);

/// Shannon entropy in bits; rejects vectors whose mass is off 1 by more than 1e-6.
double entropy(std::span<const double> dist);

struct ValueDistribution {
  std::vector<std::string> values;  // schema order
  std::vector<double> probabilities;
};

ValueDistribution attribute_predictive(const Catalog& catalog, const PosteriorState& state,
                                       const std::string& attribute);
/// Sum over values v of Pr(v) H(Item | Attr = v); zero-probability values contribute nothing.
double expected_conditional_entropy(const Catalog& catalog, const PosteriorState& state, const std::string& attribute);
/// H(Item | inputs) - expected_conditional_entropy.
double question_information_gain(const Catalog& catalog, const PosteriorState& state, const std::string& attribute);

struct QuestionChoice {
  std::string attribute;
  double gain = 0.0;
};

/// Gains within this distance count as equal; the lexicographically first attribute wins.
inline constexpr double kGainTieTolerance = 1e-12;

/// Best unasked attribute by information gain, or nullopt when none has positive gain.
std::optional<QuestionChoice> select_question(const Catalog& catalog, const PosteriorState& state);

struct DecideOptions {
  double threshold_bits = 1.0;
  std::size_t top_k = 3;
  std::string question_template = "What {attribute} do you want?";
};

std::string render_question(const std::string& question_template, const std::string& attribute);

struct RankedItem {
  std::size_t index;
  std::string id;
  double probability;
};

struct Decision {
  enum class Kind { Recommend, Ask, ForcedRecommend };
  Kind kind = Kind::Recommend;
  std::vector<RankedItem> items;  // Recommend / ForcedRecommend
  std::string attribute;          // Ask
  std::string question;           // Ask
  double gain = 0.0;              // Ask
  double entropy_before = 0.0;
  double threshold = 0.0;
  bool low_confidence() const { return kind == Kind::ForcedRecommend; }
};

std::string_view to_string(Decision::Kind kind);

/// Top-k items by posterior, ties by item id.
std::vector<RankedItem> top_items(const Catalog& catalog, const PosteriorState& state, std::size_t k);

Decision decide(const Catalog& catalog, const PosteriorState& state, const DecideOptions& options = {});

enum class AnswerMode { AttributeExact, SequenceLikelihood };

struct AnswerOptions {
  AnswerMode mode = AnswerMode::AttributeExact;
  double epsilon = 0.01;
  /// Required for SequenceLikelihood.
  LikelihoodFn likelihood;
};

/// Schema value matched case-insensitively (after tokenization), else "unknown".
std::string match_value(const Catalog& catalog, const std::string& attribute, std::span<const std::string> answer);

PosteriorState apply_answer(const Catalog& catalog, const PosteriorState& state, const std::string& attribute,
                            std::vector<std::string> answer, const AnswerOptions& options = {});

}  // namespace seqprobe::probe
