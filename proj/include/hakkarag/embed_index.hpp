#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hakkarag/kb_ingest.hpp"

namespace hakkarag {

struct EmbeddingVector {
  std::vector<double> values;
  bool normalized = false;

  std::size_t dims() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

// Anything that maps text to a fixed-width vector. Implementations must be
// safe to call concurrently.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dims() const = 0;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
};

std::uint64_t fnv1a_64(std::string_view bytes);

// Signed-bucket character-trigram hashing: each trigram of the normalized
// text is hashed with FNV-1a 64, bucket = hash % dims, sign from bit 32.
// The accumulator is L2-normalized. Texts under three characters hash as a
// single token. Throws EmptyText, ZeroVector, InvalidParams (dims < 8).
EmbeddingVector embed_reference(std::string_view text, std::size_t dims);

class ReferenceEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDefaultDims = 256;

  explicit ReferenceEmbedder(std::size_t dims = kDefaultDims);

  std::string id() const override;
  std::size_t dims() const override { return dims_; }
  EmbeddingVector embed(std::string_view text) const override;

 private:
  std::size_t dims_;
};

// dot(a, b) / (|a| |b|). Throws DimensionMismatch or ZeroVector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct ChunkRef {
  std::string doc_id;
  std::size_t seq = 0;

  auto operator<=>(const ChunkRef&) const = default;
};

struct IndexEntry {
  ChunkRef chunk;
  EmbeddingVector vector;

  bool operator==(const IndexEntry&) const = default;
};

struct RetrievalHit {
  ChunkRef chunk;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based

  bool operator==(const RetrievalHit&) const = default;
};

// Exact cosine index. Entries are in canonical (doc_id, seq) order and all
// come from the same embedder.
class VectorIndex {
 public:
  VectorIndex() = default;
  VectorIndex(std::size_t dims, std::string embedder_id, std::vector<IndexEntry> entries);

  std::size_t dims() const { return dims_; }
  const std::string& embedder_id() const { return embedder_id_; }
  const std::vector<IndexEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // Brute-force top-k over a precomputed query vector. Ties break toward the
  // earlier (canonical) entry.
  std::vector<RetrievalHit> search(const EmbeddingVector& query, std::size_t k) const;

  bool operator==(const VectorIndex&) const = default;

 private:
  std::size_t dims_ = 0;
  std::string embedder_id_;
  std::vector<IndexEntry> entries_;
};

VectorIndex build_index(const Corpus& corpus, const Embedder& embedder);

std::vector<RetrievalHit> search_topk(const VectorIndex& index, std::string_view query,
                                      std::size_t k, const Embedder& embedder);

// Snapshot layout (little-endian):
//   "HKINDEX\0" u32 version u32 dims str embedder_id u64 n
//   n x { str doc_id, u64 seq, u8 normalized, dims x f64 }
std::string serialize_index(const VectorIndex& index);
VectorIndex deserialize_index(std::string_view bytes);
void save_index(const VectorIndex& index, const std::filesystem::path& path);
VectorIndex load_index(const std::filesystem::path& path);

}  // namespace hakkarag
