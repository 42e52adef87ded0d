#include "hakkarag/embed_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "binary_io.hpp"
#include "hakkarag/error.hpp"
#include "hakkarag/kv_config.hpp"
#include "hakkarag/utf8.hpp"

namespace hakkarag {
namespace {

constexpr std::string_view kIndexMagic{"HKINDEX\0", 8};
constexpr std::uint32_t kIndexVersion = 1;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::uint64_t fnv1a_64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

EmbeddingVector embed_reference(std::string_view text, std::size_t dims) {
  if (dims < 8) throw Error(ErrorCode::InvalidParams, "reference embedder needs dims >= 8");
  const auto normalized = normalize_text(text);
  if (normalized.empty()) throw Error(ErrorCode::EmptyText, "nothing to embed");
  const auto cps = utf8::decode(normalized);

  std::vector<double> acc(dims, 0.0);
  auto add = [&](std::string_view token) {
    const auto h = fnv1a_64(token);
    acc[h % dims] += ((h >> 32) & 1) == 0 ? 1.0 : -1.0;
  };
  if (cps.size() < 3) {
    add(normalized);
  } else {
    for (std::size_t i = 0; i + 3 <= cps.size(); ++i) {
      add(utf8::encode(std::u32string_view(cps).substr(i, 3)));
    }
  }

  const double norm = std::sqrt(dot(acc, acc));
  if (norm == 0.0) throw Error(ErrorCode::ZeroVector, "trigram buckets cancelled out");
  for (auto& v : acc) v /= norm;
  return EmbeddingVector{std::move(acc), true};
}

ReferenceEmbedder::ReferenceEmbedder(std::size_t dims) : dims_(dims) {
  if (dims < 8) throw Error(ErrorCode::InvalidParams, "reference embedder needs dims >= 8");
}

std::string ReferenceEmbedder::id() const {
  return "reference-trigram-fnv1a/" + std::to_string(dims_);
}

EmbeddingVector ReferenceEmbedder::embed(std::string_view text) const {
  return embed_reference(text, dims_);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dims() != b.dims()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.dims()) + " vs " + std::to_string(b.dims()));
  }
  const double na = std::sqrt(dot(a.values, a.values));
  const double nb = std::sqrt(dot(b.values, b.values));
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  return dot(a.values, b.values) / (na * nb);
}

VectorIndex::VectorIndex(std::size_t dims, std::string embedder_id,
                         std::vector<IndexEntry> entries)
    : dims_(dims), embedder_id_(std::move(embedder_id)), entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].vector.dims() != dims_) {
      throw Error(ErrorCode::DimensionMismatch, "index entry " + std::to_string(i) + " has " +
                                                    std::to_string(entries_[i].vector.dims()) +
                                                    " dims, index has " + std::to_string(dims_));
    }
    if (i > 0 && !(entries_[i - 1].chunk < entries_[i].chunk)) {
      throw Error(ErrorCode::InvalidParams, "index entries out of canonical order");
    }
  }
}

std::vector<RetrievalHit> VectorIndex::search(const EmbeddingVector& query, std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::InvalidParams, "k must be >= 1");
  if (query.dims() != dims_) {
    throw Error(ErrorCode::DimensionMismatch, "query has " + std::to_string(query.dims()) +
                                                  " dims, index has " + std::to_string(dims_));
  }
  std::vector<double> scores(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    scores[i] = cosine(query, entries_[i].vector);
  }
  std::vector<std::size_t> order(entries_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                    });
  std::vector<RetrievalHit> hits;
  hits.reserve(take);
  for (std::size_t r = 0; r < take; ++r) {
    hits.push_back({entries_[order[r]].chunk, scores[order[r]], r + 1});
  }
  return hits;
}

VectorIndex build_index(const Corpus& corpus, const Embedder& embedder) {
  if (corpus.chunks.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no chunks");
  std::vector<IndexEntry> entries;
  entries.reserve(corpus.chunks.size());
  for (const auto& chunk : corpus.chunks) {
    try {
      auto vec = embedder.embed(chunk.text);
      entries.push_back({ChunkRef{chunk.doc_id, chunk.seq}, std::move(vec)});
    } catch (const Error& e) {
      throw e.with_context("chunk " + chunk.doc_id + "#" + std::to_string(chunk.seq));
    }
  }
  return VectorIndex(embedder.dims(), embedder.id(), std::move(entries));
}

std::vector<RetrievalHit> search_topk(const VectorIndex& index, std::string_view query,
                                      std::size_t k, const Embedder& embedder) {
  if (embedder.id() != index.embedder_id()) {
    throw Error(ErrorCode::EmbedderMismatch,
                "index built with '" + index.embedder_id() + "', query embedder is '" +
                    embedder.id() + "'");
  }
  if (k == 0) throw Error(ErrorCode::InvalidParams, "k must be >= 1");
  return index.search(embedder.embed(query), k);
}

std::string serialize_index(const VectorIndex& index) {
  detail::ByteWriter w;
  w.bytes(kIndexMagic);
  w.u32(kIndexVersion);
  w.u32(static_cast<std::uint32_t>(index.dims()));
  w.str(index.embedder_id());
  w.u64(index.size());
  for (const auto& e : index.entries()) {
    w.str(e.chunk.doc_id);
    w.u64(e.chunk.seq);
    w.u8(e.vector.normalized ? 1 : 0);
    for (double v : e.vector.values) w.f64(v);
  }
  return w.take();
}

VectorIndex deserialize_index(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.bytes(kIndexMagic.size()) != kIndexMagic) r.fail("not an index snapshot");
  if (const auto v = r.u32(); v != kIndexVersion) {
    r.fail("unsupported index snapshot version " + std::to_string(v));
  }
  const auto dims = r.u32();
  auto embedder_id = r.str();
  const auto n = r.u64();
  std::vector<IndexEntry> entries;
  for (std::uint64_t i = 0; i < n; ++i) {
    IndexEntry e;
    e.chunk.doc_id = r.str();
    e.chunk.seq = r.u64();
    e.vector.normalized = r.u8() != 0;
    e.vector.values.resize(dims);
    for (auto& v : e.vector.values) v = r.f64();
    entries.push_back(std::move(e));
  }
  if (!r.at_end()) r.fail("trailing bytes");
  try {
    return VectorIndex(dims, std::move(embedder_id), std::move(entries));
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptSnapshot, e.detail());
  }
}

void save_index(const VectorIndex& index, const std::filesystem::path& path) {
  const auto bytes = serialize_index(index);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "cannot write index snapshot", std::nullopt, path.string());
}

VectorIndex load_index(const std::filesystem::path& path) {
  try {
    return deserialize_index(read_file(path));
  } catch (const Error& e) {
    throw e.with_path(path.string());
  }
}

}  // namespace hakkarag
