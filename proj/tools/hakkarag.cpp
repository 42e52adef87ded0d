#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hakkarag/chat_service.hpp"
#include "hakkarag/embed_index.hpp"
#include "hakkarag/error.hpp"
#include "hakkarag/eval.hpp"
#include "hakkarag/http_api.hpp"
#include "hakkarag/kb_ingest.hpp"
#include "hakkarag/prompting.hpp"
#include "hakkarag/router.hpp"

namespace hk = hakkarag;
using nlohmann::json;

namespace {

struct Snapshot {
  hk::Corpus corpus;
  hk::VectorIndex index;
  std::unique_ptr<hk::Embedder> embedder;
};

// The CLI only knows the reference embedder; its dims come from the index.
Snapshot open_snapshot(const std::string& path) {
  Snapshot s;
  s.corpus = hk::load_corpus(path);
  s.index = hk::load_index(path + ".idx");
  s.embedder = std::make_unique<hk::ReferenceEmbedder>(s.index.dims());
  if (s.embedder->id() != s.index.embedder_id()) {
    throw hk::Error(hk::ErrorCode::EmbedderMismatch,
                    "index was built with " + s.index.embedder_id() +
                        "; the CLI can only query reference-embedder snapshots");
  }
  return s;
}

hk::TranslationPatterns patterns_from(const std::string& path) {
  return path.empty() ? hk::TranslationPatterns::defaults() : hk::TranslationPatterns::load(path);
}

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(out, std::ios::binary);
  f << j.dump(2) << '\n';
  if (!f) throw hk::Error(hk::ErrorCode::Io, "cannot write report", std::nullopt, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hakka culture RAG chat service"};
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "parse the sources and write corpus + index snapshots");
  std::string manifest, out;
  std::size_t dims = hk::ReferenceEmbedder::kDefaultDims;
  ingest->add_option("--manifest", manifest, "corpus manifest")->required();
  ingest->add_option("--out", out, "corpus snapshot; the index goes to <out>.idx")->required();
  ingest->add_option("--dims", dims, "reference embedder width");

  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  std::string config;
  serve->add_option("--config", config, "service config")->required();

  auto* query = app.add_subcommand("query", "print the top-k chunks for a text");
  std::string snapshot, text;
  std::size_t k = 4;
  query->add_option("--snapshot", snapshot)->required();
  query->add_option("text", text)->required();
  query->add_option("--k", k);

  auto* route = app.add_subcommand("route", "show the route a query would take");
  double tau = hk::kDefaultTau;
  std::string patterns;
  route->add_option("--snapshot", snapshot)->required();
  route->add_option("text", text)->required();
  route->add_option("--tau", tau);
  route->add_option("--patterns", patterns, "translation pattern file");

  auto* tmpl = app.add_subcommand("template", "print the built-in prompt template");

  auto* eval = app.add_subcommand("eval", "evaluation reports");
  eval->require_subcommand(1);
  std::string report_out;
  auto* sus = eval->add_subcommand("sus", "SUS scores from a responses CSV");
  std::string responses, label;
  bool summary_only = false;
  sus->add_option("--responses", responses)->required();
  sus->add_option("--label", label, "report label, e.g. \"Phase I\"");
  sus->add_flag("--summary", summary_only, "print only the score line");
  sus->add_option("--out", report_out);

  auto* routing = eval->add_subcommand("routing", "routing accuracy over a labeled fixture");
  std::string fixture;
  routing->add_option("--fixture", fixture)->required();
  routing->add_option("--snapshot", snapshot)->required();
  routing->add_option("--tau", tau);
  routing->add_option("--patterns", patterns);
  routing->add_option("--out", report_out);

  auto* retrieval = eval->add_subcommand("retrieval", "recall@k over a probe fixture");
  retrieval->add_option("--fixture", fixture)->required();
  retrieval->add_option("--snapshot", snapshot)->required();
  retrieval->add_option("--out", report_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto corpus = hk::ingest_corpus(manifest);
      const hk::ReferenceEmbedder embedder(dims);
      const auto index = hk::build_index(corpus, embedder);
      hk::save_corpus(corpus, out);
      hk::save_index(index, out + ".idx");
      std::cout << "documents " << corpus.stats.documents << ", chunks " << corpus.stats.chunks
                << ", embedder " << embedder.id() << '\n';
      for (const auto& [kind, n] : corpus.stats.documents_by_source) {
        std::cout << "  " << hk::to_string(kind) << ' ' << n << '\n';
      }
    } else if (*serve) {
      const auto cfg = hk::ServiceConfig::load(config);
      hk::ChatService service(hk::build_deps(cfg));
      hk::HttpApi api(service);
      const int port = api.bind(cfg.listen_host, cfg.listen_port);
      std::cout << "listening on http://" << cfg.listen_host << ':' << port << std::endl;
      api.serve();
    } else if (*query) {
      const auto s = open_snapshot(snapshot);
      for (const auto& hit : hk::search_topk(s.index, text, k, *s.embedder)) {
        const auto* chunk = s.corpus.find_chunk(hit.chunk.doc_id, hit.chunk.seq);
        std::cout << hit.rank << '\t' << hit.score << '\t' << hit.chunk.doc_id << '#'
                  << hit.chunk.seq << '\t' << (chunk ? chunk->text : "") << '\n';
      }
    } else if (*route) {
      const auto s = open_snapshot(snapshot);
      const auto d = hk::route_query(text, patterns_from(patterns), s.index, *s.embedder, tau);
      std::cout << hk::to_json(d).dump(2) << '\n';
    } else if (*tmpl) {
      std::cout << hk::default_template().to_text();
    } else if (*sus) {
      const auto report = hk::sus_aggregate(hk::load_sus_csv(responses), label);
      if (summary_only) {
        std::cout << hk::format_sus_line(report) << '\n';
      } else {
        emit(hk::to_json(report), report_out);
      }
    } else if (*routing) {
      const auto s = open_snapshot(snapshot);
      const auto cases = hk::load_routing_fixture(fixture);
      emit(hk::to_json(hk::routing_accuracy(cases, patterns_from(patterns), s.index, *s.embedder,
                                            tau)),
           report_out);
    } else if (*retrieval) {
      const auto s = open_snapshot(snapshot);
      const auto cases = hk::load_retrieval_fixture(fixture);
      emit(hk::to_json(hk::recall_at_k(cases, s.corpus, s.index, *s.embedder)), report_out);
    }
  } catch (const hk::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
