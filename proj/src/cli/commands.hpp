#pragma once

// Per-subcommand option structs and entry points; wired to flags in cli.cpp.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqprobe::cli {

enum class Format { Json, Tsv };

/// Bad input the user can fix; reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainArgs {
  std::string corpus;
  std::string out_dir;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  std::string attention = "general";
  std::size_t d_emb = 64;
  std::size_t d_h = 128;
  std::size_t enc_layers = 1;
  std::size_t dec_layers = 1;
  std::size_t tensor_k = 8;
  std::size_t max_decode_len = 20;
  std::size_t src_vocab = 20000;
  std::size_t tgt_vocab = 20000;
  std::size_t batch_size = 1;
  bool resume = false;
  Format format = Format::Tsv;
};

struct RewriteArgs {
  std::string model;
  std::string input;  // empty: stdin
  Format format = Format::Tsv;
};

struct ScoreArgs {
  std::string model;
  std::string catalog;             // rank catalog titles per query
  std::vector<std::string> query;  // empty: one query per stdin line
  std::string pairs;               // score "title<TAB>query" lines instead
  std::size_t top_k = 5;
  bool normalize = false;
  Format format = Format::Tsv;
};

struct EvalArgs {
  std::string input;  // empty: stdin
  Format format = Format::Json;
};

struct ProbeSimArgs {
  std::string catalog;
  std::size_t bisection_bits = 0;
  std::vector<double> thresholds{1.0};
  std::size_t trials = 100;
  std::size_t top_k = 3;
  double epsilon = 0.01;
  std::size_t max_turns = 32;
  std::uint64_t seed = 1;
  Format format = Format::Json;
};

struct ServeArgs {
  std::string catalog;
  std::string scorer;
  std::string rewriter;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string transcripts;
  std::string cors_origin = "*";
  double threshold = 1.0;
  std::size_t top_k = 3;
  std::string answer_mode = "attribute_exact";
  double epsilon = 0.01;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err);
int cmd_rewrite(const RewriteArgs& a, std::istream& in, std::ostream& out);
int cmd_score(const ScoreArgs& a, std::istream& in, std::ostream& out);
int cmd_eval_bleu(const EvalArgs& a, std::istream& in, std::ostream& out);
int cmd_eval_auc(const EvalArgs& a, std::istream& in, std::ostream& out);
int cmd_probe_sim(const ProbeSimArgs& a, std::ostream& out);
int cmd_serve(const ServeArgs& a, std::ostream& out);

}  // namespace seqprobe::cli
