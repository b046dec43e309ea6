#pragma once

#include <memory>
#include <string>

#include "seqprobe/service/chat_service.hpp"

namespace httplib {
class Server;
}

namespace seqprobe::service {

struct HttpOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string cors_origin = "*";
  int retry_after_seconds = 1;
};

/// JSON over HTTP in front of a ChatService.
///
///   POST /sessions                 {"config": {...}}?   -> 201 {"v", "session_id", "config"}
///   POST /sessions/{id}/messages   {"text": "..."}      -> 200 BotReply
///   GET  /sessions/{id}/posterior                       -> 200 snapshot
///   GET  /sessions/{id}/transcript                      -> 200 transcript
///   GET  /healthz                                       -> 200
///
/// Errors are {"v":1,"error":{"code","message"}} with 400, 404, 409 or 500.
class HttpServer {
 public:
  HttpServer(ChatService& service, HttpOptions options = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and returns the port; throws if the address is unavailable.
  int bind();
  /// Blocks until stop(). Call bind() first.
  void serve();
  void stop();

 private:
  ChatService& service_;
  HttpOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace seqprobe::service
