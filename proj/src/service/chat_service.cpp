#include "seqprobe/service/chat_service.hpp"

#include <fstream>
#include <random>

#include "seqprobe/probe/simulate.hpp"
#include "seqprobe/training/corpus.hpp"

namespace seqprobe::service {

using nlohmann::json;

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string_view mode_name(probe::AnswerMode m) {
  return m == probe::AnswerMode::AttributeExact ? "attribute_exact" : "sequence_likelihood";
}

probe::AnswerMode parse_mode(const std::string& s) {
  if (s == "attribute_exact") return probe::AnswerMode::AttributeExact;
  if (s == "sequence_likelihood") return probe::AnswerMode::SequenceLikelihood;
  throw std::invalid_argument("unknown answer mode '" + s + "' (expected attribute_exact|sequence_likelihood)");
}

json item_cards(const probe::Catalog& catalog, const std::vector<probe::RankedItem>& items) {
  json cards = json::array();
  for (const auto& r : items)
    cards.push_back({{"id", r.id}, {"title", catalog.item(r.index).title}, {"probability", r.probability}});
  return cards;
}

constexpr const char* kClarifyEmpty = "Could you tell me what you are looking for?";
constexpr const char* kClarifyNoMatch = "I could not match that to anything in the catalog. Could you rephrase?";

}  // namespace

json SessionConfig::to_json() const {
  return json{{"threshold_bits", threshold_bits},   {"top_k", top_k},
              {"answer_mode", mode_name(answer_mode)}, {"answer_epsilon", answer_epsilon},
              {"rewrite_input", rewrite_input},     {"question_template", question_template}};
}

SessionConfig SessionConfig::from_json(const json& j, const SessionConfig& base) {
  if (!j.is_object()) throw std::invalid_argument("session config must be a JSON object");
  SessionConfig c = base;
  try {
    c.threshold_bits = j.value("threshold_bits", c.threshold_bits);
    c.top_k = j.value("top_k", c.top_k);
    if (j.contains("answer_mode")) c.answer_mode = parse_mode(j.at("answer_mode").get<std::string>());
    c.answer_epsilon = j.value("answer_epsilon", c.answer_epsilon);
    c.rewrite_input = j.value("rewrite_input", c.rewrite_input);
    c.question_template = j.value("question_template", c.question_template);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad session config: ") + e.what());
  }
  if (!(c.threshold_bits >= 0.0)) throw std::invalid_argument("threshold_bits must be non-negative");
  if (c.top_k == 0) throw std::invalid_argument("top_k must be positive");
  if (!(c.answer_epsilon > 0.0 && c.answer_epsilon < 0.5)) throw std::invalid_argument("answer_epsilon must lie in (0, 0.5)");
  return c;
}

ChatService::ChatService(std::shared_ptr<const probe::Catalog> catalog,
                         std::shared_ptr<const inference::ModelBundle> scorer,
                         std::shared_ptr<const inference::ModelBundle> rewriter, ServiceOptions options)
    : catalog_(std::move(catalog)),
      scorer_(std::move(scorer)),
      rewriter_(std::move(rewriter)),
      options_(std::move(options)) {
  if (!catalog_ || catalog_->empty()) throw std::invalid_argument("service needs a non-empty catalog");
  if (options_.likelihood)
    likelihood_ = options_.likelihood;
  else if (scorer_)
    likelihood_ = probe::make_model_likelihood(scorer_, *catalog_);
  options_.defaults = SessionConfig::from_json(json::object(), options_.defaults);
  if (options_.defaults.answer_mode == probe::AnswerMode::SequenceLikelihood && !likelihood_)
    throw std::invalid_argument("sequence_likelihood answers need a scorer model");
  if (options_.transcript_dir) std::filesystem::create_directories(*options_.transcript_dir);
}

std::string ChatService::fresh_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%016llx%04llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(++counter_ & 0xffff));
  return buf;
}

std::string ChatService::create_session(const json& overrides) {
  auto s = std::make_shared<Session>();
  s->config = SessionConfig::from_json(overrides, options_.defaults);
  if (s->config.answer_mode == probe::AnswerMode::SequenceLikelihood && !likelihood_)
    throw std::invalid_argument("sequence_likelihood answers need a scorer model");
  s->state = probe::PosteriorState::uniform(catalog_->size());
  {
    std::unique_lock lock(sessions_mutex_);
    do s->id = fresh_id();
    while (sessions_.count(s->id));
    sessions_.emplace(s->id, s);
  }
  if (options_.transcript_dir) {
    std::ofstream out(*options_.transcript_dir / (s->id + ".jsonl"), std::ios::app);
    out << json{{"v", kSchemaVersion}, {"event", "session"}, {"id", s->id}, {"config", s->config.to_json()}}.dump()
        << '\n';
  }
  return s->id;
}

std::shared_ptr<ChatService::Session> ChatService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw SessionNotFound("no session '" + id + "'");
  return it->second;
}

std::size_t ChatService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

void ChatService::append(Session& s, TranscriptEntry entry) {
  if (options_.transcript_dir) {
    json line{{"v", kSchemaVersion}, {"event", "turn"}, {"role", entry.role}, {"text", entry.text},
              {"ts", entry.timestamp_ms}};
    if (!entry.reply.is_null()) line["reply"] = entry.reply;
    std::ofstream out(*options_.transcript_dir / (s.id + ".jsonl"), std::ios::app);
    out << line.dump() << '\n';
  }
  s.transcript.push_back(std::move(entry));
}

json ChatService::handle_message(const std::string& session_id, const std::string& text) {
  auto s = find(session_id);
  std::unique_lock lock(s->mutex, std::try_to_lock);
  if (!lock.owns_lock()) throw SessionBusy("session '" + session_id + "' is handling another message");
  append(*s, TranscriptEntry{"user", text, now_ms(), nullptr});
  json reply = respond(*s, text);
  append(*s, TranscriptEntry{"bot", reply.at("text").get<std::string>(), now_ms(), reply});
  return reply;
}

json ChatService::respond(Session& s, const std::string& text) {
  ++s.turn;
  json diagnostics{{"turn", s.turn}, {"threshold_bits", s.config.threshold_bits}};
  auto clarification = [&](const char* message) {
    diagnostics["entropy_bits"] = probe::entropy(s.state.posterior);
    return json{{"v", kSchemaVersion}, {"kind", "clarification"}, {"text", message}, {"diagnostics", diagnostics}};
  };
  std::vector<std::string> tokens = training::tokenize(text);
  if (tokens.empty()) return clarification(kClarifyEmpty);

  if (s.pending_attribute) {
    const std::string attribute = *s.pending_attribute;
    probe::AnswerOptions answer;
    answer.mode = s.config.answer_mode;
    answer.epsilon = s.config.answer_epsilon;
    answer.likelihood = likelihood_;
    diagnostics["answer"] = {{"attribute", attribute},
                             {"value", probe::match_value(*catalog_, attribute, tokens)}};
    try {
      s.state = probe::apply_answer(*catalog_, s.state, attribute, tokens, answer);
    } catch (const probe::DegeneratePosterior&) {
      return clarification(kClarifyNoMatch);
    }
    s.pending_attribute.reset();
  } else if (likelihood_) {
    std::vector<std::string> input = tokens;
    if (rewriter_ && s.config.rewrite_input) {
      const auto rewrite = inference::greedy_decode(rewriter_->model, rewriter_->src_vocab.encode(tokens));
      auto words = rewriter_->tgt_vocab.decode(rewrite.tokens);
      if (!words.empty()) input = std::move(words);
      diagnostics["rewrite"] = training::join_tokens(input);
    }
    try {
      s.state = probe::posterior_update(s.state, input, likelihood_);
    } catch (const probe::DegeneratePosterior&) {
      return clarification(kClarifyNoMatch);
    }
  }

  const probe::Decision d =
      probe::decide(*catalog_, s.state, {s.config.threshold_bits, s.config.top_k, s.config.question_template});
  return decision_reply(s, d, std::move(diagnostics));
}

json ChatService::decision_reply(Session& s, const probe::Decision& d, json diagnostics) {
  diagnostics["entropy_bits"] = d.entropy_before;
  if (d.kind == probe::Decision::Kind::Ask) {
    s.pending_attribute = d.attribute;
    s.state = s.state.with_asked(d.attribute);
    return json{{"v", kSchemaVersion},
                {"kind", "question"},
                {"text", d.question},
                {"question", {{"attribute", d.attribute}, {"gain_bits", d.gain}}},
                {"diagnostics", std::move(diagnostics)}};
  }
  const bool forced = d.low_confidence();
  std::string text = forced ? "I could not narrow it down further. These are my best guesses."
                            : "Here " + std::string(d.items.size() == 1 ? "is my top match." : "are my top matches.");
  return json{{"v", kSchemaVersion},
              {"kind", "recommendation"},
              {"text", std::move(text)},
              {"items", item_cards(*catalog_, d.items)},
              {"low_confidence", forced},
              {"diagnostics", std::move(diagnostics)}};
}

json ChatService::posterior_snapshot(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  json items = item_cards(*catalog_, probe::top_items(*catalog_, s->state, catalog_->size()));
  return json{{"v", kSchemaVersion},
              {"entropy_bits", probe::entropy(s->state.posterior)},
              {"items", std::move(items)},
              {"asked", s->state.asked},
              {"pending_question", s->pending_attribute ? json(*s->pending_attribute) : json(nullptr)},
              {"turns", s->turn}};
}

json ChatService::transcript_json(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  json turns = json::array();
  for (const auto& e : s->transcript) {
    json t{{"role", e.role}, {"text", e.text}, {"ts", e.timestamp_ms}};
    if (!e.reply.is_null()) t["reply"] = e.reply;
    turns.push_back(std::move(t));
  }
  return json{{"v", kSchemaVersion}, {"config", s->config.to_json()}, {"turns", std::move(turns)}};
}

json ChatService::health() const {
  return json{{"v", kSchemaVersion},
              {"status", "ok"},
              {"items", catalog_->size()},
              {"attributes", catalog_->attribute_names()},
              {"scorer", likelihood_ != nullptr},
              {"rewriter", rewriter_ != nullptr},
              {"sessions", session_count()}};
}

ReplayResult replay_transcript(ChatService& service, const std::filesystem::path& transcript) {
  std::ifstream in(transcript);
  if (!in) throw std::runtime_error("cannot open transcript " + transcript.string());
  std::vector<json> lines;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) lines.push_back(json::parse(line));
  if (lines.empty() || lines.front().value("event", "") != "session")
    throw std::runtime_error(transcript.string() + " does not start with a session record");
  const std::string id = service.create_session(lines.front().at("config"));
  ReplayResult result;
  std::optional<std::string> pending_reply;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const json& turn = lines[i];
    if (turn.value("role", "") == "user") {
      ++result.turns;
      result.replies.push_back(service.handle_message(id, turn.at("text").get<std::string>()).dump());
    } else if (turn.value("role", "") == "bot") {
      if (result.replies.empty() || turn.at("reply").dump() != result.replies.back())
        result.mismatched_turns.push_back(result.turns);
    }
  }
  return result;
}

}  // namespace seqprobe::service
