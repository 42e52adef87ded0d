#include <cmath>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "hakkarag/error.hpp"
#include "hakkarag/providers.hpp"

namespace hakkarag {
namespace {

using nlohmann::json;

json parse_reply(const std::string& body, std::string_view what) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable,
                std::string(what) + " returned malformed JSON: " + e.what());
  }
}

}  // namespace

HttpProviderBase::HttpProviderBase(HttpProviderOptions options) : options_(std::move(options)) {
  const auto& ep = options_.endpoint;
  const auto scheme_end = ep.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "endpoint must be an absolute URL: " + ep);
  }
  const auto scheme = ep.substr(0, scheme_end);
  if (scheme != "http") {
    throw Error(ErrorCode::InvalidConfig,
                "only http:// endpoints are supported (put a TLS proxy in front): " + ep);
  }
  const auto path_start = ep.find('/', scheme_end + 3);
  origin_ = ep.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : ep.substr(path_start);
}

HttpProviderBase::Reply HttpProviderBase::post_json(const std::string& body,
                                                    bool idempotent) const {
  const int attempts = idempotent ? 2 : 1;
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(options_.retry_backoff);

    httplib::Client client(origin_);
    const auto secs = options_.timeout.count() / 1000;
    const auto usecs = (options_.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!options_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + options_.api_key);
    }
    const auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status == 429) {
      mark(true);
      throw Error(ErrorCode::QuotaExceeded, origin_ + path_ + " rejected the call (HTTP 429)");
    }
    if (res->status == 413) {
      mark(true);
      throw Error(ErrorCode::ContextTooLong, origin_ + path_ + " rejected the payload (HTTP 413)");
    }
    mark(true);
    return Reply{res->status, res->body};
  }
  mark(false);
  throw Error(ErrorCode::ProviderUnavailable, origin_ + path_ + ": " + last_error);
}

std::string HttpProviderBase::expect_ok(const Reply& reply, std::string_view what) {
  if (reply.status < 200 || reply.status >= 300) {
    throw Error(ErrorCode::ProviderUnavailable,
                std::string(what) + " answered HTTP " + std::to_string(reply.status));
  }
  return reply.body;
}

// POST {"text", "direction"} -> {"text"}
// 422 -> UntranslatableInput; 400 with {"error":"unsupported_direction"} ->
// UnsupportedDirection.
std::string HttpTranslator::translate(const TranslationJob& job) {
  if (job.text.empty()) throw Error(ErrorCode::UntranslatableInput, "nothing to translate");
  const json req = {{"text", job.text}, {"direction", to_string(job.direction)}};
  const auto reply = post_json(req.dump(), true);
  if (reply.status == 422) {
    throw Error(ErrorCode::UntranslatableInput, "translation service could not translate input");
  }
  if (reply.status == 400 && reply.body.find("unsupported_direction") != std::string::npos) {
    throw Error(ErrorCode::UnsupportedDirection, std::string(to_string(job.direction)));
  }
  const auto body = parse_reply(expect_ok(reply, "translation service"), "translation service");
  if (!body.contains("text") || !body["text"].is_string() ||
      body["text"].get<std::string>().empty()) {
    throw Error(ErrorCode::ProviderUnavailable, "translation service returned no text");
  }
  return body["text"].get<std::string>();
}

// POST {"query", "n"} -> {"results": [{"title", "url", "snippet"}...]}
// Results are re-ranked 1..m in response order and truncated to n.
std::vector<SearchResult> HttpSearch::search(std::string_view query, std::size_t n) {
  if (n == 0 || n > kMaxResults) throw Error(ErrorCode::InvalidParams, "search needs 1 <= n <= 10");
  if (query.empty()) throw Error(ErrorCode::EmptyInput, "search query is empty");
  const json req = {{"query", std::string(query)}, {"n", n}};
  const auto body =
      parse_reply(expect_ok(post_json(req.dump(), true), "search service"), "search service");
  std::vector<SearchResult> out;
  try {
    for (const auto& r : body.at("results")) {
      if (out.size() == n) break;
      out.push_back({r.at("title").get<std::string>(), r.at("url").get<std::string>(),
                     r.value("snippet", std::string{}), out.size() + 1});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable, std::string("search service reply: ") + e.what());
  }
  return out;
}

// POST {"prompt"} -> {"text", "usage": {"prompt_tokens", "completion_tokens"}}
Completion HttpCompletion::complete(std::string_view prompt) {
  if (prompt.empty()) throw Error(ErrorCode::EmptyInput, "prompt is empty");
  const json req = {{"prompt", std::string(prompt)}};
  const auto body = parse_reply(expect_ok(post_json(req.dump(), false), "completion service"),
                                "completion service");
  Completion c;
  c.provider_id = id();
  if (!body.contains("text") || !body["text"].is_string() ||
      body["text"].get<std::string>().empty()) {
    throw Error(ErrorCode::ProviderUnavailable, "completion service returned no text");
  }
  c.text = body["text"].get<std::string>();
  if (body.contains("usage") && body["usage"].is_object()) {
    c.usage = TokenUsage{body["usage"].value("prompt_tokens", std::size_t{0}),
                         body["usage"].value("completion_tokens", std::size_t{0})};
  }
  return c;
}

HttpEmbedder::HttpEmbedder(HttpProviderOptions options, std::string model_id, std::size_t dims)
    : HttpProviderBase(std::move(options)), model_id_(std::move(model_id)), dims_(dims) {
  if (dims_ == 0) throw Error(ErrorCode::InvalidParams, "embedder dims must be positive");
}

// POST {"text"} -> {"embedding": [...]} ; the vector is L2-normalized here.
EmbeddingVector HttpEmbedder::embed(std::string_view text) const {
  if (text.empty()) throw Error(ErrorCode::EmptyText, "nothing to embed");
  const json req = {{"text", std::string(text)}};
  const auto body = parse_reply(expect_ok(post_json(req.dump(), true), "embedding service"),
                                "embedding service");
  EmbeddingVector v;
  try {
    v.values = body.at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable, std::string("embedding reply: ") + e.what());
  }
  if (v.values.size() != dims_) {
    throw Error(ErrorCode::DimensionMismatch, "embedding service returned " +
                                                  std::to_string(v.values.size()) + " dims");
  }
  double norm = 0.0;
  for (double x : v.values) norm += x * x;
  if (norm == 0.0) throw Error(ErrorCode::ZeroVector, "embedding service returned zeros");
  norm = std::sqrt(norm);
  for (double& x : v.values) x /= norm;
  v.normalized = true;
  return v;
}

}  // namespace hakkarag
