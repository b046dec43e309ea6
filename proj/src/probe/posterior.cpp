#include "seqprobe/probe/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seqprobe/numerics/ops.hpp"
#include "seqprobe/training/corpus.hpp"

namespace seqprobe::probe {
namespace {

void normalize_into(const std::vector<double>& log_weights, std::vector<double>& posterior) {
  const double z = num::log_sum_exp(log_weights);
  posterior.resize(log_weights.size());
  for (std::size_t i = 0; i < log_weights.size(); ++i) posterior[i] = std::exp(log_weights[i] - z);
}

// -sum p log2 p over an already-normalized vector.
double raw_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

void check_size(const Catalog& catalog, const PosteriorState& state) {
  if (state.posterior.size() != catalog.size())
    throw std::invalid_argument("posterior covers " + std::to_string(state.posterior.size()) +
                                " items, catalog has " + std::to_string(catalog.size()));
}

}  // namespace

PosteriorState PosteriorState::uniform(std::size_t items) {
  if (items == 0) throw std::invalid_argument("posterior over an empty catalog");
  PosteriorState s;
  s.log_prior.assign(items, -std::log(static_cast<double>(items)));
  s.log_weights = s.log_prior;
  s.posterior.assign(items, 1.0 / static_cast<double>(items));
  return s;
}

PosteriorState PosteriorState::with_prior(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("posterior over an empty catalog");
  for (double w : weights)
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("prior weights must be positive and finite");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  PosteriorState s;
  for (double w : weights) s.log_prior.push_back(std::log(w / total));
  s.log_weights = s.log_prior;
  normalize_into(s.log_weights, s.posterior);
  return s;
}

bool PosteriorState::was_asked(const std::string& attribute) const {
  return std::find(asked.begin(), asked.end(), attribute) != asked.end();
}

PosteriorState PosteriorState::with_asked(const std::string& attribute) const {
  PosteriorState s = *this;
  if (!s.was_asked(attribute)) s.asked.push_back(attribute);
  return s;
}

PosteriorState posterior_update(const PosteriorState& state, std::vector<std::string> input,
                                std::span<const double> log_likelihoods) {
  if (log_likelihoods.size() != state.log_weights.size())
    throw std::invalid_argument("likelihood vector has " + std::to_string(log_likelihoods.size()) +
                                " entries, posterior has " + std::to_string(state.log_weights.size()));
  PosteriorState next = state;
  bool all_floored = true;
  for (std::size_t i = 0; i < log_likelihoods.size(); ++i) {
    const double ll = log_likelihoods[i];
    if (std::isnan(ll)) throw std::invalid_argument("likelihood for item " + std::to_string(i) + " is NaN");
    all_floored = all_floored && ll <= kLogLikelihoodFloor;
    next.log_weights[i] += std::max(ll, kLogLikelihoodFloor);
  }
  if (all_floored) throw DegeneratePosterior("every item has negligible likelihood for the new input");
  next.inputs.push_back(std::move(input));
  normalize_into(next.log_weights, next.posterior);
  return next;
}

PosteriorState posterior_update(const PosteriorState& state, std::vector<std::string> input, const LikelihoodFn& fn) {
  std::vector<double> ll(state.log_weights.size());
  for (std::size_t i = 0; i < ll.size(); ++i) ll[i] = fn(input, i);
  return posterior_update(state, std::move(input), ll);
}

double entropy(std::span<const double> dist) {
  if (dist.empty()) throw std::invalid_argument("entropy of an empty distribution");
  double total = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0)) throw std::invalid_argument("entropy: negative or NaN probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw std::invalid_argument("entropy: distribution sums to " + std::to_string(total) + ", not 1");
  return raw_entropy(dist);
}

ValueDistribution attribute_predictive(const Catalog& catalog, const PosteriorState& state,
                                       const std::string& attribute) {
  check_size(catalog, state);
  ValueDistribution out;
  out.values = catalog.values_of(attribute);
  out.probabilities.assign(out.values.size(), 0.0);
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const auto& v = catalog.value(i, attribute);
    const auto pos = std::lower_bound(out.values.begin(), out.values.end(), v) - out.values.begin();
    out.probabilities[pos] += state.posterior[i];
  }
  return out;
}

double expected_conditional_entropy(const Catalog& catalog, const PosteriorState& state, const std::string& attribute) {
  const ValueDistribution pv = attribute_predictive(catalog, state, attribute);
  double expected = 0.0;
  std::vector<double> conditional(catalog.size());
  for (std::size_t k = 0; k < pv.values.size(); ++k) {
    const double mass = pv.probabilities[k];
    if (mass <= 0.0) continue;
    for (std::size_t i = 0; i < catalog.size(); ++i)
      conditional[i] = catalog.value(i, attribute) == pv.values[k] ? state.posterior[i] / mass : 0.0;
    expected += mass * raw_entropy(conditional);
  }
  return expected;
}

double question_information_gain(const Catalog& catalog, const PosteriorState& state, const std::string& attribute) {
  check_size(catalog, state);
  return entropy(state.posterior) - expected_conditional_entropy(catalog, state, attribute);
}

std::optional<QuestionChoice> select_question(const Catalog& catalog, const PosteriorState& state) {
  std::optional<QuestionChoice> best;
  for (const auto& name : catalog.attribute_names()) {
    if (state.was_asked(name)) continue;
    const double gain = question_information_gain(catalog, state, name);
    if (gain > kGainTieTolerance && (!best || gain > best->gain + kGainTieTolerance)) best = QuestionChoice{name, gain};
  }
  return best;
}

std::string render_question(const std::string& question_template, const std::string& attribute) {
  static const std::string kSlot = "{attribute}";
  std::string out = question_template;
  for (auto pos = out.find(kSlot); pos != std::string::npos; pos = out.find(kSlot, pos + attribute.size()))
    out.replace(pos, kSlot.size(), attribute);
  return out;
}

std::string_view to_string(Decision::Kind kind) {
  switch (kind) {
    case Decision::Kind::Recommend: return "recommend";
    case Decision::Kind::Ask: return "ask";
    case Decision::Kind::ForcedRecommend: return "forced_recommend";
  }
  return "?";
}

std::vector<RankedItem> top_items(const Catalog& catalog, const PosteriorState& state, std::size_t k) {
  check_size(catalog, state);
  std::vector<std::size_t> order(catalog.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (state.posterior[a] != state.posterior[b]) return state.posterior[a] > state.posterior[b];
    return catalog.item(a).id < catalog.item(b).id;
  });
  order.resize(std::min(k, order.size()));
  std::vector<RankedItem> out;
  for (std::size_t i : order) out.push_back({i, catalog.item(i).id, state.posterior[i]});
  return out;
}

Decision decide(const Catalog& catalog, const PosteriorState& state, const DecideOptions& options) {
  check_size(catalog, state);
  Decision d;
  d.entropy_before = entropy(state.posterior);
  d.threshold = options.threshold_bits;
  if (d.entropy_before < options.threshold_bits) {
    d.kind = Decision::Kind::Recommend;
    d.items = top_items(catalog, state, options.top_k);
    return d;
  }
  if (auto q = select_question(catalog, state)) {
    d.kind = Decision::Kind::Ask;
    d.attribute = q->attribute;
    d.gain = q->gain;
    d.question = render_question(options.question_template, q->attribute);
    return d;
  }
  d.kind = Decision::Kind::ForcedRecommend;
  d.items = top_items(catalog, state, options.top_k);
  return d;
}

std::string match_value(const Catalog& catalog, const std::string& attribute, std::span<const std::string> answer) {
  const std::string wanted = training::join_tokens(training::tokenize(training::join_tokens(answer)));
  if (wanted.empty()) return kUnknownValue;
  for (const auto& v : catalog.values_of(attribute))
    if (training::join_tokens(training::tokenize(v)) == wanted) return v;
  return kUnknownValue;
}

PosteriorState apply_answer(const Catalog& catalog, const PosteriorState& state, const std::string& attribute,
                            std::vector<std::string> answer, const AnswerOptions& options) {
  check_size(catalog, state);
  if (options.mode == AnswerMode::SequenceLikelihood) {
    if (!options.likelihood) throw std::invalid_argument("sequence-likelihood answers need a likelihood model");
    return posterior_update(state, std::move(answer), options.likelihood);
  }
  if (!(options.epsilon > 0.0 && options.epsilon < 0.5))
    throw std::invalid_argument("answer epsilon must lie in (0, 0.5)");
  if (!state.was_asked(attribute)) throw std::invalid_argument("attribute '" + attribute + "' was not asked");
  const std::string value = match_value(catalog, attribute, answer);
  std::vector<double> ll(catalog.size(), 0.0);
  if (value != kUnknownValue) {
    const double hit = std::log1p(-options.epsilon);
    const double miss = std::log(options.epsilon);
    for (std::size_t i = 0; i < catalog.size(); ++i) ll[i] = catalog.value(i, attribute) == value ? hit : miss;
  }
  return posterior_update(state, std::move(answer), ll);
}

}  // namespace seqprobe::probe
