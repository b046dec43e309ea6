#include "seqprobe/service/http_server.hpp"

#include "httplib.h"

namespace seqprobe::service {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  send_json(res, status, json{{"v", kSchemaVersion}, {"error", {{"code", code}, {"message", message}}}});
}

// Empty body counts as {}.
json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body);  // throws json::parse_error
  if (!j.is_object()) throw std::invalid_argument("request body must be a JSON object");
  return j;
}

}  // namespace

HttpServer::HttpServer(ChatService& service, HttpOptions options)
    : service_(service), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;
  const std::string origin = options_.cors_origin;
  srv.set_default_headers({{"Access-Control-Allow-Origin", origin},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});

  const int retry_after = options_.retry_after_seconds;
  // Uniform mapping from service exceptions to the error envelope.
  auto guarded = [retry_after](auto handler) {
    return [handler, retry_after](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const SessionNotFound& e) {
        send_error(res, 404, "session_not_found", e.what());
      } catch (const SessionBusy& e) {
        res.set_header("Retry-After", std::to_string(retry_after));
        send_error(res, 409, "session_busy", e.what());
      } catch (const json::exception& e) {
        send_error(res, 400, "bad_request", std::string("invalid JSON: ") + e.what());
      } catch (const std::invalid_argument& e) {
        send_error(res, 400, "bad_request", e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  };

  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Get("/healthz", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, service_.health());
          }));

  srv.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             const json overrides = body.contains("config") ? body.at("config") : json::object();
             const std::string id = service_.create_session(overrides);
             json out = service_.transcript_json(id);
             send_json(res, 201, json{{"v", kSchemaVersion}, {"session_id", id}, {"config", out.at("config")}});
           }));

  srv.Post(R"(/sessions/([^/]+)/messages)", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             if (!body.contains("text") || !body.at("text").is_string())
               throw std::invalid_argument("body needs a string field 'text'");
             send_json(res, 200, service_.handle_message(req.matches[1], body.at("text").get<std::string>()));
           }));

  srv.Get(R"(/sessions/([^/]+)/posterior)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, service_.posterior_snapshot(req.matches[1]));
          }));

  srv.Get(R"(/sessions/([^/]+)/transcript)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, service_.transcript_json(req.matches[1]));
          }));

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_error(res, res.status, res.status == 404 ? "not_found" : "error", "no such route");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  int port = options_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(options_.host);
  } else if (!server_->bind_to_port(options_.host, port)) {
    port = -1;
  }
  if (port < 0) throw std::runtime_error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  return port;
}

void HttpServer::serve() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

}  // namespace seqprobe::service
