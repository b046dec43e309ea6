#include "commands.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <random>

#include "json.hpp"
#include "seqprobe/eval/metrics.hpp"
#include "seqprobe/inference/inference.hpp"
#include "seqprobe/probe/simulate.hpp"
#include "seqprobe/seq2seq/checkpoint.hpp"
#include "seqprobe/service/http_server.hpp"
#include "seqprobe/training/trainer.hpp"

namespace seqprobe::cli {

using nlohmann::json;

namespace {

// Shortest round-trip text, same digits the JSON writer produces.
std::string num(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// Opens `path`, or hands back `fallback` when the path is empty.
class InputSource {
 public:
  InputSource(const std::string& path, std::istream& fallback) : name_(path.empty() ? "<stdin>" : path) {
    if (path.empty()) {
      stream_ = &fallback;
    } else {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open " + path);
      stream_ = &file_;
    }
  }
  std::istream& stream() { return *stream_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::ifstream file_;
  std::istream* stream_ = nullptr;
};

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

std::shared_ptr<const inference::ModelBundle> load_shared_bundle(const std::string& path) {
  return std::make_shared<const inference::ModelBundle>(inference::load_bundle(path));
}

}  // namespace

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const training::PairCorpus corpus = training::load_pair_corpus(a.corpus);
  if (corpus.pairs.empty()) throw UsageError(a.corpus + " holds no pairs");
  const auto sources = corpus.sources();
  const auto targets = corpus.targets();
  const training::Vocab src = training::Vocab::build(sources, a.src_vocab);
  const training::Vocab tgt = training::Vocab::build(targets, a.tgt_vocab);
  const auto data = training::encode_corpus(corpus, src, tgt);

  training::TrainConfig config;
  config.model.src_vocab_size = src.size();
  config.model.tgt_vocab_size = tgt.size();
  config.model.d_emb = a.d_emb;
  config.model.d_h = a.d_h;
  config.model.enc_layers = a.enc_layers;
  config.model.dec_layers = a.dec_layers;
  try {
    config.model.attention = seq2seq::parse_attention(a.attention);
    config.model.tensor_k = a.tensor_k;
    config.model.max_decode_len = a.max_decode_len;
    config.model.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  config.epochs = a.epochs;
  config.seed = a.seed;
  config.batch_size = a.batch_size;

  const std::filesystem::path dir = a.out_dir;
  std::filesystem::create_directories(dir);
  std::ofstream log(dir / "train-log.tsv", a.resume ? std::ios::app : std::ios::trunc);
  if (!a.resume) log << "epoch\tmean_token_loss\ttokens\tmax_grad_norm\n";

  if (a.format == Format::Tsv) out << "epoch\tmean_token_loss\ttokens\tmax_grad_norm\n";
  training::TrainOptions opts;
  opts.checkpoint_dir = dir;
  opts.resume = a.resume;
  opts.src_vocab = &src;
  opts.tgt_vocab = &tgt;
  opts.on_epoch = [&](const training::EpochStats& s) {
    const std::string row = std::to_string(s.epoch) + "\t" + num(s.mean_token_loss) + "\t" +
                            std::to_string(s.tokens) + "\t" + num(s.max_grad_norm);
    log << row << '\n' << std::flush;
    if (a.format == Format::Tsv)
      out << row << '\n';
    else
      out << json{{"v", 1}, {"epoch", s.epoch}, {"mean_token_loss", s.mean_token_loss}, {"tokens", s.tokens},
                  {"max_grad_norm", s.max_grad_norm}}
                 .dump()
          << '\n';
    out.flush();
  };
  err << "training on " << data.size() << " pairs, vocab " << src.size() << "/" << tgt.size() << "\n";
  const training::TrainResult result = training::train(data, config, opts);
  seq2seq::save_checkpoint({result.model, src.words(), tgt.words()}, dir / "model.json");
  err << "wrote " << (dir / "model.json").string() << "\n";
  return 0;
}

int cmd_rewrite(const RewriteArgs& a, std::istream& in, std::ostream& out) {
  const inference::ModelBundle bundle = inference::load_bundle(a.model);
  InputSource src(a.input, in);
  for (const std::string& line : read_lines(src.stream())) {
    const auto ids = bundle.encode_source(line);
    if (ids.empty()) {
      if (a.format == Format::Tsv)
        out << line << "\t\tempty\n";
      else
        out << json{{"v", 1}, {"input", line}, {"rewrite", ""}, {"termination", "empty"}}.dump() << '\n';
      continue;
    }
    const inference::Rewrite r = inference::greedy_decode(bundle.model, ids);
    const auto words = bundle.tgt_vocab.decode(r.tokens);
    const std::string text = training::join_tokens(words);
    if (a.format == Format::Tsv) {
      out << line << '\t' << text << '\t' << inference::to_string(r.termination) << '\n';
    } else {
      out << json{{"v", 1},
                  {"input", line},
                  {"rewrite", text},
                  {"termination", inference::to_string(r.termination)},
                  {"probabilities", r.probabilities}}
                 .dump()
          << '\n';
    }
  }
  return 0;
}

int cmd_score(const ScoreArgs& a, std::istream& in, std::ostream& out) {
  const inference::ModelBundle bundle = inference::load_bundle(a.model);
  if (!a.pairs.empty() || a.catalog.empty()) {
    if (a.pairs.empty()) throw UsageError("score needs --catalog or --pairs");
    // One score per "title<TAB>query" line.
    InputSource src(a.pairs == "-" ? std::string() : a.pairs, in);
    const training::PairCorpus corpus = training::read_pair_corpus(src.stream(), src.name());
    if (a.format == Format::Tsv) out << "line\tlog_likelihood\tlength\tnormalized\n";
    std::size_t n = 0;
    for (const auto& p : corpus.pairs) {
      const auto s = inference::sequence_log_likelihood(bundle.model, bundle.src_vocab.encode(p.source),
                                                        bundle.tgt_vocab.encode(p.target));
      ++n;
      if (a.format == Format::Tsv)
        out << n << '\t' << num(s.log_likelihood) << '\t' << s.length << '\t' << num(s.normalized()) << '\n';
      else
        out << json{{"v", 1}, {"line", n}, {"log_likelihood", s.log_likelihood}, {"length", s.length},
                    {"normalized", s.normalized()}}
                   .dump()
            << '\n';
    }
    return 0;
  }

  const probe::Catalog catalog = probe::load_catalog(a.catalog);
  std::vector<std::vector<inference::TokenId>> titles;
  for (std::size_t i = 0; i < catalog.size(); ++i) titles.push_back(bundle.src_vocab.encode(catalog.item(i).title_tokens));
  std::vector<std::string> queries = a.query;
  if (queries.empty()) queries = read_lines(in);
  if (a.format == Format::Tsv) out << "query\trank\titem\tlog_likelihood\tnormalized\n";
  for (const std::string& q : queries) {
    const auto ids = bundle.encode_target(q);
    if (ids.empty()) throw UsageError("query '" + q + "' has no tokens");
    const auto ranked = inference::score_candidates(bundle.model, ids, titles, a.normalize);
    json rows = json::array();
    for (std::size_t r = 0; r < std::min(a.top_k, ranked.size()); ++r) {
      const auto& c = ranked[r];
      const std::string& id = catalog.item(c.index).id;
      if (a.format == Format::Tsv)
        out << q << '\t' << r + 1 << '\t' << id << '\t' << num(c.score.log_likelihood) << '\t'
            << num(c.score.normalized()) << '\n';
      else
        rows.push_back({{"rank", r + 1}, {"item", id}, {"log_likelihood", c.score.log_likelihood},
                        {"normalized", c.score.normalized()}});
    }
    if (a.format == Format::Json) out << json{{"v", 1}, {"query", q}, {"ranking", rows}}.dump() << '\n';
  }
  return 0;
}

int cmd_eval_bleu(const EvalArgs& a, std::istream& in, std::ostream& out) {
  InputSource src(a.input, in);
  const auto pairs = eval::read_bleu_tsv(src.stream(), src.name());
  if (pairs.empty()) throw UsageError(src.name() + " holds no rows");
  const double mean = eval::corpus_bleu(pairs);
  const double pooled = eval::pooled_bleu(pairs);
  if (a.format == Format::Json)
    out << json{{"v", 1}, {"metric", "bleu"}, {"rows", pairs.size()}, {"bleu", mean}, {"pooled_bleu", pooled}}.dump(2)
        << '\n';
  else
    out << "metric\tvalue\nrows\t" << pairs.size() << "\nbleu\t" << num(mean) << "\npooled_bleu\t" << num(pooled)
        << '\n';
  return 0;
}

int cmd_eval_auc(const EvalArgs& a, std::istream& in, std::ostream& out) {
  InputSource src(a.input, in);
  const auto rows = eval::read_auc_tsv(src.stream(), src.name());
  std::size_t pos = 0;
  for (const auto& r : rows) pos += r.positive;
  if (pos == 0 || pos == rows.size()) throw UsageError("AUC needs at least one positive and one negative row");
  const double value = eval::auc(rows);
  if (a.format == Format::Json)
    out << json{{"v", 1}, {"metric", "auc"}, {"rows", rows.size()}, {"positives", pos}, {"negatives", rows.size() - pos},
                {"auc", value}}
               .dump(2)
        << '\n';
  else
    out << "metric\tvalue\nrows\t" << rows.size() << "\npositives\t" << pos << "\nnegatives\t" << rows.size() - pos
        << "\nauc\t" << num(value) << '\n';
  return 0;
}

int cmd_probe_sim(const ProbeSimArgs& a, std::ostream& out) {
  if (a.catalog.empty() == (a.bisection_bits == 0))
    throw UsageError("probe-sim needs exactly one of --catalog or --bisection");
  if (a.trials == 0) throw UsageError("--trials must be positive");
  const probe::Catalog catalog =
      a.catalog.empty() ? probe::make_bisection_catalog(a.bisection_bits, a.seed) : probe::load_catalog(a.catalog);

  std::mt19937_64 rng(a.seed);
  std::uniform_int_distribution<std::size_t> pick(0, catalog.size() - 1);
  std::vector<std::size_t> targets(a.trials);
  for (auto& t : targets) t = pick(rng);

  json results = json::array();
  if (a.format == Format::Tsv)
    out << "threshold_bits\ttrials\tmean_questions\tmin_questions\tmax_questions\tidentified_rate\tforced_rate\n";
  for (double threshold : a.thresholds) {
    probe::SimulationOptions opts;
    opts.decide.threshold_bits = threshold;
    opts.decide.top_k = a.top_k;
    opts.answer.epsilon = a.epsilon;
    opts.max_turns = a.max_turns;
    std::map<std::size_t, std::size_t> histogram;
    std::size_t total = 0, identified = 0, forced = 0;
    for (std::size_t target : targets) {
      const auto r = probe::simulate_user(catalog, target, opts);
      const std::size_t q = r.questions.size();
      ++histogram[q];
      total += q;
      identified += r.identified;
      forced += r.final_decision.low_confidence();
    }
    const double n = static_cast<double>(a.trials);
    const double mean = static_cast<double>(total) / n;
    if (a.format == Format::Tsv) {
      out << num(threshold) << '\t' << a.trials << '\t' << num(mean) << '\t' << histogram.begin()->first << '\t'
          << histogram.rbegin()->first << '\t' << num(identified / n) << '\t' << num(forced / n) << '\n';
    } else {
      json hist = json::object();
      for (auto [q, c] : histogram) hist[std::to_string(q)] = c;
      results.push_back({{"threshold_bits", threshold},
                         {"mean_questions", mean},
                         {"min_questions", histogram.begin()->first},
                         {"max_questions", histogram.rbegin()->first},
                         {"question_histogram", hist},
                         {"identified_rate", identified / n},
                         {"forced_rate", forced / n}});
    }
  }
  if (a.format == Format::Json)
    out << json{{"v", 1}, {"items", catalog.size()}, {"trials", a.trials}, {"seed", a.seed}, {"results", results}}
               .dump(2)
        << '\n';
  return 0;
}

int cmd_serve(const ServeArgs& a, std::ostream& out) {
  auto catalog = std::make_shared<const probe::Catalog>(probe::load_catalog(a.catalog));
  auto scorer = a.scorer.empty() ? nullptr : load_shared_bundle(a.scorer);
  auto rewriter = a.rewriter.empty() ? nullptr : load_shared_bundle(a.rewriter);
  service::ServiceOptions opts;
  try {
    opts.defaults = service::SessionConfig::from_json(
        json{{"threshold_bits", a.threshold}, {"top_k", a.top_k}, {"answer_mode", a.answer_mode},
             {"answer_epsilon", a.epsilon}},
        {});
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!a.transcripts.empty()) opts.transcript_dir = a.transcripts;
  service::ChatService svc(catalog, scorer, rewriter, opts);
  service::HttpOptions http;
  http.host = a.host;
  http.port = a.port;
  http.cors_origin = a.cors_origin;
  service::HttpServer server(svc, http);
  const int port = server.bind();
  out << "listening on http://" << a.host << ":" << port << " (" << catalog->size() << " items)" << std::endl;
  server.serve();
  return 0;
}

}  // namespace seqprobe::cli
