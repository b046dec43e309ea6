#include "seqprobe/cli/cli.hpp"

#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "json.hpp"

namespace seqprobe::cli {

namespace {

const std::map<std::string, Format> kFormats{{"json", Format::Json}, {"tsv", Format::Tsv}};

void add_format(CLI::App* cmd, Format& f) {
  cmd->add_option("--format", f, "Report format: json or tsv")
      ->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Seq2seq relevance scoring and information-seeking product dialog", "seqprobe"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a seq2seq model on a tab-separated pair corpus");
  t->add_option("--corpus", train.corpus, "source<TAB>target lines")->required()->check(CLI::ExistingFile);
  t->add_option("--out", train.out_dir, "Checkpoint directory (model.json, epoch-NNN.json, train-log.tsv)")->required();
  t->add_option("--epochs", train.epochs)->capture_default_str();
  t->add_option("--seed", train.seed)->capture_default_str();
  t->add_option("--attention", train.attention, "none|dot|general|concat|tensor")->capture_default_str();
  t->add_option("--d-emb", train.d_emb)->capture_default_str();
  t->add_option("--d-h", train.d_h)->capture_default_str();
  t->add_option("--enc-layers", train.enc_layers)->capture_default_str();
  t->add_option("--dec-layers", train.dec_layers)->capture_default_str();
  t->add_option("--tensor-k", train.tensor_k)->capture_default_str();
  t->add_option("--max-decode-len", train.max_decode_len)->capture_default_str();
  t->add_option("--src-vocab", train.src_vocab, "Source vocabulary cap, reserved tokens included")->capture_default_str();
  t->add_option("--tgt-vocab", train.tgt_vocab, "Target vocabulary cap, reserved tokens included")->capture_default_str();
  t->add_option("--batch-size", train.batch_size)->capture_default_str();
  t->add_flag("--resume", train.resume, "Continue from <out>/train-state.json");
  add_format(t, train.format);

  RewriteArgs rewrite;
  auto* r = app.add_subcommand("rewrite", "Greedy-decode one rewrite per input line");
  r->add_option("--model", rewrite.model)->required()->check(CLI::ExistingFile);
  r->add_option("--input", rewrite.input, "Input file (default stdin)")->check(CLI::ExistingFile);
  add_format(r, rewrite.format);

  ScoreArgs score;
  auto* s = app.add_subcommand("score", "Score queries against item titles: ln Pr(query | title)");
  s->add_option("--model", score.model)->required()->check(CLI::ExistingFile);
  auto* cat_opt = s->add_option("--catalog", score.catalog, "Catalog JSONL to rank")->check(CLI::ExistingFile);
  s->add_option("--query", score.query, "Query text (repeatable; default one per stdin line)")->needs(cat_opt);
  s->add_option("--pairs", score.pairs, "title<TAB>query file ('-' for stdin), one score per line")->excludes(cat_opt);
  s->add_option("--top-k", score.top_k)->capture_default_str();
  s->add_flag("--normalize", score.normalize, "Rank by per-token log-likelihood");
  add_format(s, score.format);

  EvalArgs bleu;
  auto* b = app.add_subcommand("eval-bleu", "BLEU over candidate<TAB>reference[<TAB>reference...] lines");
  b->add_option("--input", bleu.input, "Input file (default stdin)")->check(CLI::ExistingFile);
  add_format(b, bleu.format);

  EvalArgs auc;
  auto* a = app.add_subcommand("eval-auc", "ROC AUC over score<TAB>label lines");
  a->add_option("--input", auc.input, "Input file (default stdin)")->check(CLI::ExistingFile);
  add_format(a, auc.format);

  ProbeSimArgs sim;
  auto* p = app.add_subcommand("probe-sim", "Simulate truthful users against the question-asking policy");
  auto* sim_cat = p->add_option("--catalog", sim.catalog, "Catalog JSONL")->check(CLI::ExistingFile);
  p->add_option("--bisection", sim.bisection_bits, "Use a generated 2^N-item bisection catalog")
      ->check(CLI::Range(1, 16))
      ->excludes(sim_cat);
  p->add_option("--threshold", sim.thresholds, "Entropy threshold in bits (repeatable)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  p->add_option("--trials", sim.trials)->capture_default_str();
  p->add_option("--top-k", sim.top_k)->capture_default_str();
  p->add_option("--epsilon", sim.epsilon, "Answer noise")->check(CLI::Range(1e-9, 0.5))->capture_default_str();
  p->add_option("--max-turns", sim.max_turns)->capture_default_str();
  p->add_option("--seed", sim.seed, "Seeds target draws and the generated catalog")->capture_default_str();
  add_format(p, sim.format);

  ServeArgs serve;
  auto* v = app.add_subcommand("serve", "Run the HTTP+JSON chat service");
  v->add_option("--catalog", serve.catalog)->required()->envname("SEQPROBE_CATALOG")->check(CLI::ExistingFile);
  v->add_option("--scorer", serve.scorer, "Checkpoint scoring free text against titles")
      ->envname("SEQPROBE_SCORER")
      ->check(CLI::ExistingFile);
  v->add_option("--rewriter", serve.rewriter, "Checkpoint rewriting free text before scoring")
      ->envname("SEQPROBE_REWRITER")
      ->check(CLI::ExistingFile);
  v->add_option("--host", serve.host)->envname("SEQPROBE_HOST")->capture_default_str();
  v->add_option("--port", serve.port)->envname("SEQPROBE_PORT")->check(CLI::Range(0, 65535))->capture_default_str();
  v->add_option("--transcripts", serve.transcripts, "Directory for per-session JSONL transcripts");
  v->add_option("--cors-origin", serve.cors_origin)->envname("SEQPROBE_CORS_ORIGIN")->capture_default_str();
  v->add_option("--threshold", serve.threshold)->envname("SEQPROBE_THRESHOLD")->capture_default_str();
  v->add_option("--top-k", serve.top_k)->envname("SEQPROBE_TOP_K")->capture_default_str();
  v->add_option("--answer-mode", serve.answer_mode, "attribute_exact|sequence_likelihood")
      ->envname("SEQPROBE_ANSWER_MODE")
      ->capture_default_str();
  v->add_option("--epsilon", serve.epsilon)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (t->parsed()) return cmd_train(train, out, err);
    if (r->parsed()) return cmd_rewrite(rewrite, in, out);
    if (s->parsed()) return cmd_score(score, in, out);
    if (b->parsed()) return cmd_eval_bleu(bleu, in, out);
    if (a->parsed()) return cmd_eval_auc(auc, in, out);
    if (p->parsed()) return cmd_probe_sim(sim, out);
    if (v->parsed()) return cmd_serve(serve, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace seqprobe::cli
