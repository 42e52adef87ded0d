#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"

#include "fixtures.hpp"
#include "hakkarag/embed_index.hpp"
#include "json.hpp"

namespace hk = hakkarag;
using fixtures::fixture_knowledge;

namespace {

hk::EmbeddingVector vec(std::vector<double> v) { return {std::move(v), false}; }

nlohmann::json oracle() {
  static const auto j = nlohmann::json::parse(fixtures::slurp(fixtures::golden("oracle_values.json")));
  return j;
}

hk::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const hk::Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return hk::ErrorCode::Io;
}

// Embedder returning preset vectors keyed by text.
struct TableEmbedder final : hk::Embedder {
  std::map<std::string, std::vector<double>> table;
  std::size_t width = 2;
  std::string id() const override { return "table"; }
  std::size_t dims() const override { return width; }
  hk::EmbeddingVector embed(std::string_view text) const override {
    return {table.at(std::string(text)), false};
  }
};

}  // namespace

TEST_SUITE("embed_index") {
  TEST_CASE("fnv1a_64 reference values") {
    CHECK(hk::fnv1a_64("") == 0xcbf29ce484222325ULL);
    CHECK(hk::fnv1a_64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hk::fnv1a_64("foobar") == 0x85944171f73967e8ULL);
  }

  TEST_CASE("reference embedder is deterministic and normalized") {
    const auto a = hk::embed_reference("客家文化", 256);
    const auto b = hk::embed_reference("客家文化", 256);
    CHECK(a == b);
    CHECK(a.normalized);
    double norm = 0;
    for (double x : a.values) norm += x * x;
    CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-9);
    CHECK(hk::cosine(a, b) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("reference embedder matches the oracle") {
    const auto t1 = hk::embed_reference("客家文化", 256);
    const auto t3 = hk::embed_reference("天氣預報", 256);
    CHECK(std::abs(hk::cosine(t1, t1) - oracle()["cosine_same"].get<double>()) < 1e-12);
    CHECK(std::abs(hk::cosine(t1, t3) - oracle()["cosine_diff"].get<double>()) < 1e-12);
    CHECK(hk::cosine(t1, t3) < 1.0);
  }

  TEST_CASE("reference embedder errors") {
    CHECK(code_of([] { hk::embed_reference("", 256); }) == hk::ErrorCode::EmptyText);
    CHECK(code_of([] { hk::embed_reference("  \n ", 256); }) == hk::ErrorCode::EmptyText);
    CHECK(code_of([] { hk::embed_reference("abc", 7); }) == hk::ErrorCode::InvalidParams);
    // Short texts hash as one token.
    CHECK(hk::embed_reference("客", 64).dims() == 64);
  }

  TEST_CASE("cosine") {
    CHECK(hk::cosine(vec({1, 0}), vec({0, 1})) == 0.0);
    CHECK(hk::cosine(vec({1, 2, 3}), vec({4, 5, 6})) == doctest::Approx(0.974631846).epsilon(1e-6));
    CHECK(hk::cosine(vec({3, 4}), vec({3, 4})) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(code_of([] { hk::cosine(vec({1, 0}), vec({1, 0, 0})); }) == hk::ErrorCode::DimensionMismatch);
    CHECK(code_of([] { hk::cosine(vec({0, 0}), vec({1, 0})); }) == hk::ErrorCode::ZeroVector);
  }

  TEST_CASE("fixture index has one entry per chunk in canonical order") {
    const auto& k = *fixture_knowledge();
    CHECK(k.index.size() == 12);
    CHECK(k.index.dims() == 256);
    CHECK(k.index.embedder_id() == "reference-trigram-fnv1a/256");
    for (std::size_t i = 0; i < k.index.size(); ++i) {
      CHECK(k.index.entries()[i].chunk.doc_id == k.corpus.chunks[i].doc_id);
    }
    CHECK(code_of([] { hk::build_index(hk::Corpus{}, hk::ReferenceEmbedder()); }) ==
          hk::ErrorCode::EmptyCorpus);
  }

  TEST_CASE("index snapshot round-trip and determinism") {
    const auto& k = *fixture_knowledge();
    const auto again = hk::build_index(k.corpus, hk::ReferenceEmbedder());
    const auto bytes = hk::serialize_index(k.index);
    CHECK(bytes == hk::serialize_index(again));
    CHECK(bytes.substr(0, 8) == std::string("HKINDEX\0", 8));
    CHECK(hk::deserialize_index(bytes) == k.index);
    CHECK(code_of([&] { hk::deserialize_index(bytes.substr(0, 40)); }) ==
          hk::ErrorCode::CorruptSnapshot);
  }

  TEST_CASE("self-retrieval on the fixture corpus") {
    const auto& k = *fixture_knowledge();
    const hk::ReferenceEmbedder e;
    for (const auto& c : k.corpus.chunks) {
      const auto hits = hk::search_topk(k.index, c.text, 1, e);
      REQUIRE(hits.size() == 1);
      CHECK(hits[0].chunk.doc_id == c.doc_id);
      CHECK(hits[0].score >= 1.0 - 1e-9);
    }
  }

  TEST_CASE("米食 粄 top-3 matches the oracle") {
    const auto& k = *fixture_knowledge();
    const auto hits = hk::search_topk(k.index, "米食 粄", 3, hk::ReferenceEmbedder());
    std::vector<std::string> ids;
    for (const auto& h : hits) ids.push_back(h.chunk.doc_id);
    CHECK(ids == oracle()["top3_rice_cake"].get<std::vector<std::string>>());
  }

  TEST_CASE("k beyond the corpus returns everything, ranks 1..n") {
    const auto& k = *fixture_knowledge();
    const auto hits = hk::search_topk(k.index, "客家", 100, hk::ReferenceEmbedder());
    REQUIRE(hits.size() == 12);
    for (std::size_t i = 0; i < hits.size(); ++i) {
      CHECK(hits[i].rank == i + 1);
      if (i) CHECK(hits[i - 1].score >= hits[i].score);
    }
  }

  TEST_CASE("top-k is a prefix of top-(k+1)") {
    const auto& k = *fixture_knowledge();
    const hk::ReferenceEmbedder e;
    for (const char* q : {"客家擂茶", "義民節", "天氣", "粄"}) {
      auto prev = hk::search_topk(k.index, q, 1, e);
      for (std::size_t n = 2; n <= 12; ++n) {
        const auto cur = hk::search_topk(k.index, q, n, e);
        CHECK(std::equal(prev.begin(), prev.end(), cur.begin()));
        prev = cur;
      }
    }
  }

  TEST_CASE("ties break toward the canonical entry") {
    TableEmbedder e;
    e.table = {{"a", {1, 0}}, {"b", {1, 0}}, {"c", {0, 1}}, {"q", {1, 0}}};
    std::vector<hk::IndexEntry> entries = {{{"doc:a", 0}, hk::EmbeddingVector{{1, 0}, false}},
                                           {{"doc:b", 0}, hk::EmbeddingVector{{1, 0}, false}},
                                           {{"doc:c", 0}, hk::EmbeddingVector{{0, 1}, false}}};
    const hk::VectorIndex index(2, "table", entries);
    const auto hits = hk::search_topk(index, "q", 2, e);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].chunk.doc_id == "doc:a");
    CHECK(hits[1].chunk.doc_id == "doc:b");
  }

  TEST_CASE("search errors") {
    const auto& k = *fixture_knowledge();
    CHECK(code_of([&] { hk::search_topk(k.index, "x", 1, hk::ReferenceEmbedder(128)); }) ==
          hk::ErrorCode::EmbedderMismatch);
    CHECK(code_of([&] { hk::search_topk(k.index, "客家", 0, hk::ReferenceEmbedder()); }) ==
          hk::ErrorCode::InvalidParams);
    CHECK(code_of([] {
            hk::VectorIndex(2, "t", {{{"b", 0}, hk::EmbeddingVector{{1, 0}, false}},
                                     {{"a", 0}, hk::EmbeddingVector{{1, 0}, false}}});
          }) == hk::ErrorCode::InvalidParams);
  }

  TEST_CASE("random corpora: search equals brute force") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t n = 1 + rng() % 64;
      std::vector<hk::IndexEntry> entries;
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v(8);
        for (auto& x : v) x = std::round(u(rng) * 2) / 2;  // coarse values force ties
        if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0; })) v[0] = 1;
        char id[16];
        std::snprintf(id, sizeof id, "d%03zu", i);
        entries.push_back({{id, 0}, hk::EmbeddingVector{v, false}});
      }
      const hk::VectorIndex index(8, "t", entries);
      std::vector<double> q(8);
      for (auto& x : q) x = u(rng);
      const hk::EmbeddingVector qv{q, false};
      for (std::size_t k : {1, 3, 10}) {
        std::vector<std::pair<double, std::size_t>> all;
        for (std::size_t i = 0; i < n; ++i) all.emplace_back(hk::cosine(qv, entries[i].vector), i);
        std::stable_sort(all.begin(), all.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        const auto hits = index.search(qv, k);
        REQUIRE(hits.size() == std::min(k, n));
        for (std::size_t r = 0; r < hits.size(); ++r) {
          CHECK(hits[r].chunk == entries[all[r].second].chunk);
          CHECK(hits[r].score == all[r].first);
        }
      }
    }
  }
}
