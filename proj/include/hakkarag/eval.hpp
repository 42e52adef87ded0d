#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hakkarag/embed_index.hpp"
#include "hakkarag/router.hpp"

namespace hakkarag {

// Reports carry this version; bump on any schema change.
inline constexpr int kReportVersion = 1;

struct SusResponse {
  static constexpr std::size_t kItems = 10;

  std::string respondent_id;
  std::array<int, kItems> items{};
};

// Throws InvalidItem unless there are exactly ten items, each in [1, 5].
SusResponse make_sus_response(std::string respondent_id, std::span<const int> items);

// Odd items add (item - 1), even items add (5 - item); the sum times 2.5.
double sus_score(const SusResponse& response);

struct SusReport {
  std::string label;  // e.g. "Phase I"
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1); 0 for n = 1
  std::vector<std::pair<std::string, double>> scores;  // respondent_id, score
};

// Throws EmptyInput for no responses.
SusReport sus_aggregate(std::span<const SusResponse> responses, std::string label = {});

// "Phase I SUS Score 61.81" (mean to two decimals).
std::string format_sus_line(const SusReport& report);

// CSV with header respondent_id,q1,...,q10.
std::vector<SusResponse> parse_sus_csv(std::string_view text, const std::string& origin = {});
std::vector<SusResponse> load_sus_csv(const std::filesystem::path& path);

struct RoutingCase {
  std::string query;
  Route expected = Route::web_search;
};

struct RoutingMiss {
  std::string query;
  Route expected;
  Route predicted;
};

struct RoutingReport {
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  double tau = kDefaultTau;
  std::map<Route, std::map<Route, std::size_t>> confusion;  // expected -> predicted -> count
  std::vector<RoutingMiss> misses;
};

// TSV with header query, expected.
std::vector<RoutingCase> parse_routing_fixture(std::string_view text,
                                               const std::string& origin = {});
std::vector<RoutingCase> load_routing_fixture(const std::filesystem::path& path);

RoutingReport routing_accuracy(std::span<const RoutingCase> fixture,
                               const TranslationPatterns& patterns, const VectorIndex& index,
                               const Embedder& embedder, double tau = kDefaultTau);

struct RetrievalCase {
  std::string query;
  std::string doc_id;
  std::size_t k = 4;
};

struct RetrievalMiss {
  std::string query;
  std::string doc_id;
  std::vector<std::string> retrieved;  // doc ids of the top-k hits
};

struct RetrievalReport {
  std::size_t total = 0;
  std::size_t found = 0;
  double recall = 0.0;
  std::vector<RetrievalMiss> misses;
};

// TSV with header query, doc_id, k.
std::vector<RetrievalCase> parse_retrieval_fixture(std::string_view text,
                                                   const std::string& origin = {});
std::vector<RetrievalCase> load_retrieval_fixture(const std::filesystem::path& path);

// Throws FixtureMismatch when an expected doc_id is not in the corpus.
RetrievalReport recall_at_k(std::span<const RetrievalCase> fixture, const Corpus& corpus,
                            const VectorIndex& index, const Embedder& embedder);

nlohmann::json to_json(const SusReport& report);
nlohmann::json to_json(const RoutingReport& report);
nlohmann::json to_json(const RetrievalReport& report);

}  // namespace hakkarag
