#include "hakkarag/http_api.hpp"

#include "httplib.h"
#include "json.hpp"

#include "hakkarag/chat_service.hpp"
#include "hakkarag/error.hpp"

namespace hakkarag {
namespace {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput:
    case ErrorCode::InvalidParams: return 400;
    case ErrorCode::UnknownSession: return 404;
    case ErrorCode::ProviderUnavailable: return 503;
    default: return 500;
  }
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void reply_error(httplib::Response& res, int status, std::string_view code,
                 const std::string& message) {
  reply(res, status, {{"error", {{"code", code}, {"message", message}}}});
}

json parse_body(const httplib::Request& req, bool allow_empty) {
  if (req.body.empty() && allow_empty) return json::object();
  auto body = json::parse(req.body);
  if (!body.is_object()) throw json::type_error::create(302, "body must be a JSON object", nullptr);
  return body;
}

std::string text_field(const json& body) {
  if (!body.contains("text") || !body["text"].is_string()) {
    throw Error(ErrorCode::InvalidParams, "body needs a string field 'text'");
  }
  return body["text"].get<std::string>();
}

// Runs a handler and maps exceptions to JSON errors.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      reply_error(res, http_status(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      reply_error(res, 400, "BadRequest", e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, "Internal", e.what());
    }
  };
}

}  // namespace

HttpApi::HttpApi(ChatService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  s.Post("/api/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const auto body = parse_body(req, true);
           const bool hakka = body.value("hakka_reply", false);
           reply(res, 201, {{"session_id", service_.create_session(hakka)}});
         }));

  s.Get("/api/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
          const auto number = [&](const char* key, long long fallback) {
            if (!req.has_param(key)) return fallback;
            try {
              return std::stoll(req.get_param_value(key));
            } catch (const std::exception&) {
              throw Error(ErrorCode::InvalidParams, std::string("bad ") + key);
            }
          };
          const auto page = number("page", 0);
          const auto page_size = number("page_size", 20);
          if (page < 0 || page_size < 1 || page_size > 100) {
            throw Error(ErrorCode::InvalidParams, "need page >= 0 and 1 <= page_size <= 100");
          }
          json sessions = json::array();
          for (const auto& summary : service_.list_sessions(static_cast<std::size_t>(page),
                                                            static_cast<std::size_t>(page_size))) {
            sessions.push_back(to_json(summary));
          }
          reply(res, 200,
                {{"page", page}, {"page_size", page_size}, {"sessions", std::move(sessions)}});
        }));

  s.Get(R"(/api/sessions/([^/]+))",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          reply(res, 200, to_json(service_.get_session(req.matches[1].str())));
        }));

  s.Post(R"(/api/sessions/([^/]+)/turns)",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           const auto id = req.matches[1].str();
           const auto text = text_field(parse_body(req, false));
           reply(res, 200, to_json(service_.handle_turn(id, text)));
         }));

  s.Post("/api/route/preview", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const auto body = parse_body(req, false);
           const auto text = text_field(body);
           std::optional<double> tau;
           if (body.contains("tau") && !body["tau"].is_null()) tau = body["tau"].get<double>();
           reply(res, 200, to_json(service_.preview_route(text, tau)));
         }));

  s.Get("/api/health", guarded([this](const httplib::Request&, httplib::Response& res) {
          reply(res, 200, service_.health());
        }));
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : server_->bind_to_port(host, port)
                                                                      ? port
                                                                      : -1;
  if (bound < 0) {
    throw Error(ErrorCode::InvalidConfig, "cannot listen on " + host + ":" + std::to_string(port));
  }
  return bound;
}

void HttpApi::serve() { server_->listen_after_bind(); }

void HttpApi::stop() {
  if (server_) server_->stop();
}

}  // namespace hakkarag
