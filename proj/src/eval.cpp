#include "hakkarag/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "hakkarag/error.hpp"
#include "hakkarag/kv_config.hpp"

namespace hakkarag {
namespace {

using nlohmann::json;

// Non-empty lines split on `sep`, with 1-based line numbers.
std::vector<std::pair<std::size_t, std::vector<std::string>>> table_rows(std::string_view text,
                                                                         char sep) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const auto next = line.find(sep, pos);
      cells.push_back(line.substr(pos, next - pos));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    for (auto& c : cells) {
      const auto b = c.find_first_not_of(' ');
      const auto e = c.find_last_not_of(' ');
      c = b == std::string::npos ? std::string{} : c.substr(b, e - b + 1);
    }
    rows.emplace_back(line_no, std::move(cells));
  }
  return rows;
}

void expect_header(const std::vector<std::pair<std::size_t, std::vector<std::string>>>& rows,
                   const std::vector<std::string>& header, const std::string& origin) {
  if (rows.empty() || rows.front().second != header) {
    std::string want;
    for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
    throw Error(ErrorCode::SchemaMismatch, "expected header " + want,
                rows.empty() ? std::nullopt : std::optional<std::size_t>(rows.front().first),
                origin);
  }
}

std::size_t parse_positive(const std::string& cell, std::size_t line, const std::string& origin) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != cell.size() || v <= 0) {
    throw Error(ErrorCode::MalformedRow, "expected a positive integer, got '" + cell + "'", line,
                origin);
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

SusResponse make_sus_response(std::string respondent_id, std::span<const int> items) {
  if (items.size() != SusResponse::kItems) {
    throw Error(ErrorCode::InvalidItem,
                "SUS needs 10 items, got " + std::to_string(items.size()));
  }
  SusResponse r;
  r.respondent_id = std::move(respondent_id);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i] < 1 || items[i] > 5) {
      throw Error(ErrorCode::InvalidItem, "item q" + std::to_string(i + 1) + " = " +
                                              std::to_string(items[i]) + " is outside 1..5");
    }
    r.items[i] = items[i];
  }
  return r;
}

double sus_score(const SusResponse& response) {
  int sum = 0;
  for (std::size_t i = 0; i < SusResponse::kItems; ++i) {
    const int v = response.items[i];
    if (v < 1 || v > 5) {
      throw Error(ErrorCode::InvalidItem, "item q" + std::to_string(i + 1) + " is outside 1..5");
    }
    sum += i % 2 == 0 ? v - 1 : 5 - v;  // i even = odd-numbered item
  }
  return sum * 2.5;
}

SusReport sus_aggregate(std::span<const SusResponse> responses, std::string label) {
  if (responses.empty()) throw Error(ErrorCode::EmptyInput, "no SUS responses");
  SusReport report;
  report.label = std::move(label);
  report.n = responses.size();
  for (const auto& r : responses) report.scores.emplace_back(r.respondent_id, sus_score(r));
  double sum = 0.0;
  for (const auto& [id, s] : report.scores) sum += s;
  report.mean = sum / static_cast<double>(report.n);
  if (report.n > 1) {
    double ss = 0.0;
    for (const auto& [id, s] : report.scores) ss += (s - report.mean) * (s - report.mean);
    report.stddev = std::sqrt(ss / static_cast<double>(report.n - 1));
  }
  return report;
}

std::string format_sus_line(const SusReport& report) {
  // Half away from zero, as spreadsheets display (printf alone rounds exact
  // binary ties like 63.125 to even).
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", std::round(report.mean * 100.0) / 100.0);
  return (report.label.empty() ? std::string{} : report.label + " ") + "SUS Score " + buf;
}

std::vector<SusResponse> parse_sus_csv(std::string_view text, const std::string& origin) {
  const auto rows = table_rows(text, ',');
  std::vector<std::string> header{"respondent_id"};
  for (int i = 1; i <= 10; ++i) header.push_back("q" + std::to_string(i));
  expect_header(rows, header, origin);
  std::vector<SusResponse> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line, cells] = rows[r];
    if (cells.size() != header.size() || cells[0].empty()) {
      throw Error(ErrorCode::MalformedRow, "expected respondent_id and 10 items", line, origin);
    }
    std::vector<int> items;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(cells[c], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cells[c].size()) {
        throw Error(ErrorCode::InvalidItem, "item q" + std::to_string(c) + " is not an integer",
                    line, origin);
      }
      items.push_back(v);
    }
    try {
      out.push_back(make_sus_response(cells[0], items));
    } catch (const Error& e) {
      throw Error(e.code(), e.detail(), line, origin);
    }
  }
  if (out.empty()) throw Error(ErrorCode::EmptyInput, "no SUS responses", std::nullopt, origin);
  return out;
}

std::vector<SusResponse> load_sus_csv(const std::filesystem::path& path) {
  return parse_sus_csv(read_file(path), path.string());
}

std::vector<RoutingCase> parse_routing_fixture(std::string_view text, const std::string& origin) {
  const auto rows = table_rows(text, '\t');
  expect_header(rows, {"query", "expected"}, origin);
  std::vector<RoutingCase> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line, cells] = rows[r];
    if (cells.size() != 2 || cells[0].empty()) {
      throw Error(ErrorCode::MalformedRow, "expected query and route", line, origin);
    }
    const auto route = route_from_string(cells[1]);
    if (!route) throw Error(ErrorCode::MalformedRow, "unknown route " + cells[1], line, origin);
    out.push_back({cells[0], *route});
  }
  if (out.empty()) throw Error(ErrorCode::EmptyInput, "routing fixture is empty", std::nullopt, origin);
  return out;
}

std::vector<RoutingCase> load_routing_fixture(const std::filesystem::path& path) {
  return parse_routing_fixture(read_file(path), path.string());
}

RoutingReport routing_accuracy(std::span<const RoutingCase> fixture,
                               const TranslationPatterns& patterns, const VectorIndex& index,
                               const Embedder& embedder, double tau) {
  if (fixture.empty()) throw Error(ErrorCode::EmptyInput, "routing fixture is empty");
  RoutingReport report;
  report.tau = tau;
  for (const auto& c : fixture) {
    const auto predicted = route_query(c.query, patterns, index, embedder, tau).route;
    ++report.confusion[c.expected][predicted];
    ++report.total;
    if (predicted == c.expected) {
      ++report.correct;
    } else {
      report.misses.push_back({c.query, c.expected, predicted});
    }
  }
  report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.total);
  return report;
}

std::vector<RetrievalCase> parse_retrieval_fixture(std::string_view text,
                                                   const std::string& origin) {
  const auto rows = table_rows(text, '\t');
  expect_header(rows, {"query", "doc_id", "k"}, origin);
  std::vector<RetrievalCase> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line, cells] = rows[r];
    if (cells.size() != 3 || cells[0].empty() || cells[1].empty()) {
      throw Error(ErrorCode::MalformedRow, "expected query, doc_id and k", line, origin);
    }
    out.push_back({cells[0], cells[1], parse_positive(cells[2], line, origin)});
  }
  if (out.empty()) {
    throw Error(ErrorCode::EmptyInput, "retrieval fixture is empty", std::nullopt, origin);
  }
  return out;
}

std::vector<RetrievalCase> load_retrieval_fixture(const std::filesystem::path& path) {
  return parse_retrieval_fixture(read_file(path), path.string());
}

RetrievalReport recall_at_k(std::span<const RetrievalCase> fixture, const Corpus& corpus,
                            const VectorIndex& index, const Embedder& embedder) {
  if (fixture.empty()) throw Error(ErrorCode::EmptyInput, "retrieval fixture is empty");
  RetrievalReport report;
  for (const auto& c : fixture) {
    if (!corpus.find_document(c.doc_id)) {
      throw Error(ErrorCode::FixtureMismatch, "expected doc_id not in corpus: " + c.doc_id);
    }
    const auto hits = search_topk(index, c.query, c.k, embedder);
    std::vector<std::string> ids;
    for (const auto& h : hits) ids.push_back(h.chunk.doc_id);
    ++report.total;
    if (std::find(ids.begin(), ids.end(), c.doc_id) != ids.end()) {
      ++report.found;
    } else {
      report.misses.push_back({c.query, c.doc_id, std::move(ids)});
    }
  }
  report.recall = static_cast<double>(report.found) / static_cast<double>(report.total);
  return report;
}

json to_json(const SusReport& r) {
  json scores = json::array();
  for (const auto& [id, s] : r.scores) scores.push_back({{"respondent_id", id}, {"score", s}});
  return {{"report", "sus"},
          {"version", kReportVersion},
          {"label", r.label},
          {"n", r.n},
          {"mean", r.mean},
          {"stddev", r.stddev},
          {"summary", format_sus_line(r)},
          {"scores", std::move(scores)}};
}

json to_json(const RoutingReport& r) {
  json confusion = json::object();
  for (const auto& [expected, row] : r.confusion) {
    json counts = json::object();
    for (const auto& [predicted, n] : row) counts[std::string(to_string(predicted))] = n;
    confusion[std::string(to_string(expected))] = std::move(counts);
  }
  json misses = json::array();
  for (const auto& m : r.misses) {
    misses.push_back({{"query", m.query},
                      {"expected", to_string(m.expected)},
                      {"predicted", to_string(m.predicted)}});
  }
  return {{"report", "routing"},
          {"version", kReportVersion},
          {"tau", r.tau},
          {"total", r.total},
          {"correct", r.correct},
          {"accuracy", r.accuracy},
          {"confusion", std::move(confusion)},
          {"misses", std::move(misses)}};
}

json to_json(const RetrievalReport& r) {
  json misses = json::array();
  for (const auto& m : r.misses) {
    misses.push_back({{"query", m.query}, {"doc_id", m.doc_id}, {"retrieved", m.retrieved}});
  }
  return {{"report", "retrieval"},
          {"version", kReportVersion},
          {"total", r.total},
          {"found", r.found},
          {"recall", r.recall},
          {"misses", std::move(misses)}};
}

}  // namespace hakkarag
