#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "seqprobe/inference/inference.hpp"
#include "seqprobe/probe/posterior.hpp"

namespace seqprobe::service {

inline constexpr int kSchemaVersion = 1;

class SessionNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Another message for the same session is still being processed.
class SessionBusy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SessionConfig {
  double threshold_bits = 1.0;
  std::size_t top_k = 3;
  probe::AnswerMode answer_mode = probe::AnswerMode::AttributeExact;
  double answer_epsilon = 0.01;
  /// Run free-text input through the rewriter before scoring it (when one is loaded).
  bool rewrite_input = true;
  std::string question_template = "What {attribute} do you want?";

  nlohmann::json to_json() const;
  /// Missing fields keep the values of `base`.
  static SessionConfig from_json(const nlohmann::json& j, const SessionConfig& base);
};

struct TranscriptEntry {
  std::string role;  // "user" or "bot"
  std::string text;
  std::int64_t timestamp_ms = 0;
  nlohmann::json reply;  // bot turns only
};

struct ServiceOptions {
  SessionConfig defaults;
  /// When set, each session appends its transcript to <dir>/<id>.jsonl.
  std::optional<std::filesystem::path> transcript_dir;
  /// Replaces the scorer's likelihood for free-text turns when set.
  probe::LikelihoodFn likelihood;
};

/// Session state machine behind the HTTP API. The catalog and models are shared
/// read-only; each session is serialized by its own mutex.
///
/// `scorer` gives ln Pr(text | item title) for free-text turns; without it such
/// turns leave the posterior unchanged. `rewriter` optionally normalizes free
/// text before scoring.
class ChatService {
 public:
  ChatService(std::shared_ptr<const probe::Catalog> catalog, std::shared_ptr<const inference::ModelBundle> scorer,
              std::shared_ptr<const inference::ModelBundle> rewriter = nullptr, ServiceOptions options = {});

  /// Returns the new session id.
  std::string create_session(const nlohmann::json& overrides = nlohmann::json::object());
  /// BotReply JSON. Throws SessionNotFound / SessionBusy.
  nlohmann::json handle_message(const std::string& session_id, const std::string& text);
  nlohmann::json posterior_snapshot(const std::string& session_id) const;
  nlohmann::json transcript_json(const std::string& session_id) const;
  nlohmann::json health() const;

  std::size_t session_count() const;
  const probe::Catalog& catalog() const { return *catalog_; }
  bool has_scorer() const { return scorer_ != nullptr; }

 private:
  struct Session {
    std::string id;
    SessionConfig config;
    probe::PosteriorState state;
    std::optional<std::string> pending_attribute;
    std::vector<TranscriptEntry> transcript;
    std::size_t turn = 0;
    mutable std::mutex mutex;
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  nlohmann::json respond(Session& s, const std::string& text);
  nlohmann::json decision_reply(Session& s, const probe::Decision& d, nlohmann::json diagnostics);
  void append(Session& s, TranscriptEntry entry);
  std::string fresh_id();

  std::shared_ptr<const probe::Catalog> catalog_;
  std::shared_ptr<const inference::ModelBundle> scorer_;
  std::shared_ptr<const inference::ModelBundle> rewriter_;
  probe::LikelihoodFn likelihood_;
  ServiceOptions options_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::atomic<std::uint64_t> counter_{0};
};

struct ReplayResult {
  std::size_t turns = 0;
  std::vector<std::size_t> mismatched_turns;  // 1-based user turns whose reply differs
  std::vector<std::string> replies;           // replayed BotReply JSON, compact dump
  bool identical() const { return mismatched_turns.empty(); }
};

/// Re-feeds the user turns of a recorded JSONL transcript to a fresh session
/// created with the recorded config and compares every bot reply byte-for-byte.
ReplayResult replay_transcript(ChatService& service, const std::filesystem::path& transcript);

}  // namespace seqprobe::service
