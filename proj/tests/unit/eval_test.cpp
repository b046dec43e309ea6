#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "../common/metric_oracles.hpp"
#include "doctest.h"
#include "seqprobe/eval/metrics.hpp"

using namespace seqprobe::eval;
using seqprobe::testing::pairwise_auc;
using seqprobe::testing::reference_bleu;

namespace {

Tokens words(const std::string& s) {
  Tokens out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

Tokens random_tokens(std::mt19937_64& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<int> w(0, 5);
  Tokens t(len(rng));
  for (auto& x : t) x = "w" + std::to_string(w(rng));
  return t;
}

}  // namespace

TEST_CASE("modified_precision") {
  const std::vector<Tokens> refs{words("the cat is on the mat")};
  const auto p = modified_precision(words("the the the the the the the"), refs, 1);
  CHECK(p.matched == 2);
  CHECK(p.total == 7);
  const std::vector<Tokens> two{words("the cat is on the mat"), words("there is a cat on the mat")};
  const auto q = modified_precision(words("the cat the cat on the mat"), two, 2);
  CHECK(q.matched == 4);  // "the cat" clipped to 1, "cat on", "on the", "the mat"
  CHECK(q.total == 6);
}

TEST_CASE("bleu") {
  const std::vector<Tokens> refs{words("the cat is on the mat")};
  CHECK(bleu(words("the cat is on the mat"), refs) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(bleu(words("a b"), std::vector<Tokens>{words("a b")}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(bleu(words("dog runs far away now"), refs) == 0.0);
  CHECK(bleu(words("dog"), refs) == 0.0);
  CHECK(bleu(Tokens{}, refs) == 0.0);
  CHECK_THROWS_AS(bleu(words("a"), std::vector<Tokens>{}), std::invalid_argument);
  // 2/7 unigram precision, no matching 4-gram, so the unsmoothed score is 0.
  CHECK(bleu(words("the the the the the the the"), refs) == 0.0);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const Tokens cand = random_tokens(rng, 9);
    std::vector<Tokens> rs;
    for (int k = 1 + trial % 3; k > 0; --k) rs.push_back(random_tokens(rng, 9));
    const double b = bleu(cand, rs);
    CHECK(b >= 0.0);
    CHECK(b <= 1.0 + 1e-15);
    CHECK(std::abs(b - reference_bleu(cand, rs)) < 1e-6);
    std::shuffle(rs.begin(), rs.end(), rng);
    CHECK(bleu(cand, rs) == b);
  }
}

TEST_CASE("corpus_bleu") {
  const BleuPair perfect{words("a b c d e"), {words("a b c d e")}};
  const BleuPair miss{words("x y z w"), {words("a b c d")}};
  CHECK(corpus_bleu(std::vector<BleuPair>{perfect, perfect}) == doctest::Approx(1.0));
  CHECK(corpus_bleu(std::vector<BleuPair>{perfect, miss, miss, perfect}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(corpus_bleu(std::vector<BleuPair>{}), std::invalid_argument);

  std::mt19937_64 rng(9);
  std::vector<BleuPair> corpus;
  double oracle = 0;
  for (int i = 0; i < 200; ++i) {
    BleuPair p{random_tokens(rng, 8), {random_tokens(rng, 8), random_tokens(rng, 8)}};
    oracle += reference_bleu(p.candidate, p.references);
    corpus.push_back(std::move(p));
    const std::vector<BleuPair> one{corpus.back()};
    CHECK(corpus_bleu(one) == bleu(corpus.back().candidate, corpus.back().references));
  }
  CHECK(std::abs(corpus_bleu(corpus) - oracle / 200) < 1e-6);
  CHECK(pooled_bleu(std::vector<BleuPair>{perfect, perfect}) == doctest::Approx(1.0));
  const double pooled = pooled_bleu(corpus);
  CHECK(pooled >= 0.0);
  CHECK(pooled <= 1.0);
}

TEST_CASE("auc") {
  CHECK(auc(std::vector<ScoredLabel>{{0.9, true}, {0.8, false}, {0.7, true}, {0.1, false}}) == 0.75);
  CHECK(auc(std::vector<ScoredLabel>{{3, true}, {2, true}, {1, false}}) == 1.0);
  CHECK(auc(std::vector<ScoredLabel>{{1, true}, {1, false}, {1, false}, {1, true}}) == 0.5);
  CHECK_THROWS_AS(auc(std::vector<ScoredLabel>{{1, true}, {2, true}}), std::invalid_argument);
  CHECK_THROWS_AS(auc(std::vector<ScoredLabel>{}), std::invalid_argument);

  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> coarse(0, 6);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<ScoredLabel> d;
    const std::size_t n = 2 + trial % 40;
    for (std::size_t i = 0; i < n; ++i) d.push_back({coarse(rng) * 0.25 - 0.5, (rng() & 1) != 0});
    d[0].positive = true;
    d[1].positive = false;
    const double a = auc(d);
    CHECK(std::abs(a - pairwise_auc(d)) < 1e-12);
    auto neg = d;
    for (auto& x : neg) x.score = -x.score;
    CHECK(a + auc(neg) == 1.0);
    auto mono = d;
    for (auto& x : mono) x.score = std::exp(3.0 * x.score) + x.score;
    CHECK(auc(mono) == a);
  }
}

TEST_CASE("labels and readers") {
  CHECK(is_positive(parse_label("Excellent")));
  CHECK(is_positive(parse_label("good")));
  CHECK_FALSE(is_positive(parse_label("fair")));
  CHECK_FALSE(is_positive(parse_label("bad")));
  CHECK_THROWS_AS(parse_label("great"), std::invalid_argument);
  CHECK(parse_binary_label("1"));
  CHECK_FALSE(parse_binary_label("false"));

  std::istringstream a("0.9\tgood\n0.8\tbad\n\n0.7\texcellent\n0.1\tfair\n");
  const auto rows = read_auc_tsv(a);
  CHECK(rows.size() == 4);
  CHECK(auc(rows) == 0.75);
  std::istringstream bad("0.9\tgood\nabc\tbad\n");
  CHECK_THROWS_WITH_AS(read_auc_tsv(bad, "f"), doctest::Contains("f:2"), std::invalid_argument);

  std::istringstream b("The cat sat\tthe cat sat\ta cat sat\nx\n");
  CHECK_THROWS_WITH_AS(read_bleu_tsv(b, "g"), doctest::Contains("g:2"), std::invalid_argument);
  std::istringstream c("The cat sat\tthe cat sat\ta cat sat\n");
  const auto pairs = read_bleu_tsv(c);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].references.size() == 2);
  CHECK(corpus_bleu(pairs) == doctest::Approx(1.0));
}
