#include "seqprobe/eval/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "seqprobe/training/corpus.hpp"

namespace seqprobe::eval {
namespace {

using Counts = std::map<std::span<const std::string>, std::size_t,
                        decltype([](std::span<const std::string> a, std::span<const std::string> b) {
                          return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
                        })>;

Counts ngram_counts(std::span<const std::string> tokens, std::size_t n) {
  Counts counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++counts[tokens.subspan(i, n)];
  return counts;
}

std::size_t closest_ref_length(std::size_t c, std::span<const Tokens> references) {
  std::size_t best = references.front().size();
  for (const auto& r : references) {
    const auto d = [c](std::size_t len) { return len > c ? len - c : c - len; };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  return best;
}

double brevity_penalty(double c, double r) { return c > r ? 1.0 : std::exp(1.0 - r / c); }

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) return out;
    start = tab + 1;
  }
}

}  // namespace

NgramPrecision modified_precision(std::span<const std::string> candidate, std::span<const Tokens> references,
                                  std::size_t n) {
  if (n == 0) throw std::invalid_argument("n-gram order must be positive");
  if (references.empty()) throw std::invalid_argument("BLEU needs at least one reference");
  const Counts cand = ngram_counts(candidate, n);
  Counts max_ref;
  for (const auto& ref : references)
    for (const auto& [g, k] : ngram_counts(ref, n)) max_ref[g] = std::max(max_ref[g], k);
  NgramPrecision p;
  for (const auto& [g, k] : cand) {
    p.total += k;
    auto it = max_ref.find(g);
    if (it != max_ref.end()) p.matched += std::min(k, it->second);
  }
  return p;
}

double bleu(std::span<const std::string> candidate, std::span<const Tokens> references, std::size_t max_n) {
  if (references.empty()) throw std::invalid_argument("BLEU needs at least one reference");
  if (max_n == 0) throw std::invalid_argument("BLEU order must be positive");
  if (candidate.empty()) return 0.0;
  const bool smooth = candidate.size() < max_n;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const NgramPrecision p = modified_precision(candidate, references, n);
    double num = static_cast<double>(p.matched);
    double den = static_cast<double>(p.total);
    if (smooth && n > 1) {
      num += 1.0;
      den += 1.0;
    }
    if (num == 0.0) return 0.0;
    log_sum += std::log(num / den);
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(closest_ref_length(candidate.size(), references));
  return brevity_penalty(c, r) * std::exp(log_sum / static_cast<double>(max_n));
}

double corpus_bleu(std::span<const BleuPair> pairs, std::size_t max_n) {
  if (pairs.empty()) throw std::invalid_argument("corpus BLEU over an empty corpus");
  double total = 0.0;
  for (const auto& p : pairs) total += bleu(p.candidate, p.references, max_n);
  return total / static_cast<double>(pairs.size());
}

double pooled_bleu(std::span<const BleuPair> pairs, std::size_t max_n) {
  if (pairs.empty()) throw std::invalid_argument("corpus BLEU over an empty corpus");
  std::vector<double> matched(max_n + 1, 0.0), totals(max_n + 1, 0.0);
  double c = 0.0, r = 0.0;
  for (const auto& p : pairs) {
    if (p.references.empty()) throw std::invalid_argument("BLEU needs at least one reference");
    c += static_cast<double>(p.candidate.size());
    r += static_cast<double>(closest_ref_length(p.candidate.size(), p.references));
    for (std::size_t n = 1; n <= max_n; ++n) {
      const auto np = modified_precision(p.candidate, p.references, n);
      matched[n] += static_cast<double>(np.matched);
      totals[n] += static_cast<double>(np.total);
    }
  }
  if (c == 0.0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    if (matched[n] == 0.0) return 0.0;
    log_sum += std::log(matched[n] / totals[n]);
  }
  return brevity_penalty(c, r) * std::exp(log_sum / static_cast<double>(max_n));
}

double auc(std::span<const ScoredLabel> data) {
  std::size_t positives = 0;
  for (const auto& d : data) {
    if (std::isnan(d.score)) throw std::invalid_argument("AUC: NaN score");
    positives += d.positive;
  }
  const std::size_t negatives = data.size() - positives;
  if (positives == 0 || negatives == 0) throw std::invalid_argument("AUC needs both positive and negative examples");
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data[a].score < data[b].score; });
  // Twice the positive rank sum, so midranks of tied groups stay integral.
  std::size_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t group_pos = 0;
    while (j < order.size() && data[order[j]].score == data[order[i]].score) group_pos += data[order[j++]].positive;
    twice_rank_sum += group_pos * (i + 1 + j);  // midrank = (i+1 + j) / 2
    i = j;
  }
  const double twice_u = static_cast<double>(twice_rank_sum) - static_cast<double>(positives * (positives + 1));
  return twice_u / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

Label parse_label(std::string_view text) {
  const auto t = training::join_tokens(training::tokenize(text));
  if (t == "bad") return Label::Bad;
  if (t == "fair") return Label::Fair;
  if (t == "good") return Label::Good;
  if (t == "excellent") return Label::Excellent;
  throw std::invalid_argument("unknown label '" + std::string(text) + "' (expected bad|fair|good|excellent)");
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::Bad: return "bad";
    case Label::Fair: return "fair";
    case Label::Good: return "good";
    case Label::Excellent: return "excellent";
  }
  return "?";
}

bool is_positive(Label label) { return label == Label::Good || label == Label::Excellent; }

bool parse_binary_label(std::string_view text) {
  const auto t = training::join_tokens(training::tokenize(text));
  if (t == "1" || t == "true") return true;
  if (t == "0" || t == "false") return false;
  return is_positive(parse_label(text));
}

std::vector<BleuPair> read_bleu_tsv(std::istream& in, const std::string& source) {
  std::vector<BleuPair> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() < 2)
      throw std::invalid_argument(source + ":" + std::to_string(line_no) + ": expected candidate<TAB>reference");
    BleuPair p{training::tokenize(fields[0]), {}};
    for (std::size_t i = 1; i < fields.size(); ++i) p.references.push_back(training::tokenize(fields[i]));
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ScoredLabel> read_auc_tsv(std::istream& in, const std::string& source) {
  std::vector<ScoredLabel> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto fields = split_tabs(line);
    if (fields.size() != 2) throw std::invalid_argument(where + ": expected score<TAB>label");
    double score = 0.0;
    const auto& f = fields[0];
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), score);
    if (ec != std::errc() || ptr != f.data() + f.size()) throw std::invalid_argument(where + ": bad score '" + f + "'");
    try {
      out.push_back({score, parse_binary_label(fields[1])});
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace seqprobe::eval
