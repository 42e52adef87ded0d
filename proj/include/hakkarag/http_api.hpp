#pragma once

#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace hakkarag {

class ChatService;

// JSON API over a ChatService:
//   POST /api/sessions                 {hakka_reply?} -> {session_id}
//   GET  /api/sessions?page=&page_size= -> {page, page_size, sessions}
//   GET  /api/sessions/{id}            -> transcript with envelopes
//   POST /api/sessions/{id}/turns      {text} -> AnswerEnvelope
//   POST /api/route/preview            {text, tau?} -> RouteDecision
//   GET  /api/health
// Failures answer {"error": {"code", "message"}} with a 4xx/5xx status.
class HttpApi {
 public:
  explicit HttpApi(ChatService& service);
  ~HttpApi();

  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  // Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void serve();
  void stop();

 private:
  ChatService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace hakkarag
