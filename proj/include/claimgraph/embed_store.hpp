#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "claimgraph/common.hpp"

namespace claimgraph {

/// Dot product of two equal-length vectors, accumulated in double. For the
/// unit vectors held in a store this is the cosine similarity.
double cosine(std::span<const float> a, std::span<const float> b);

/// Unit-normalized claim embeddings keyed by record id. Rows are kept in
/// insertion order; a store is treated as immutable once filled.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dimension);

  /// Normalizes and appends. Throws on dimension mismatch, duplicate id, or
  /// a zero vector.
  void add(RecordId id, std::span<const float> vector);

  [[nodiscard]] std::size_t dimension() const { return dimension_; }
  [[nodiscard]] std::size_t size() const { return ids_.size(); }
  [[nodiscard]] bool empty() const { return ids_.empty(); }

  [[nodiscard]] std::span<const float> row(std::size_t index) const {
    return {data_.data() + index * dimension_, dimension_};
  }
  [[nodiscard]] RecordId id_at(std::size_t index) const { return ids_[index]; }
  [[nodiscard]] const std::vector<RecordId>& ids() const { return ids_; }

  [[nodiscard]] std::optional<std::size_t> find(RecordId id) const;
  /// Throws Error("unknown record id ...") when absent.
  [[nodiscard]] std::size_t index_of(RecordId id) const;
  [[nodiscard]] bool contains(RecordId id) const { return rows_.contains(id); }

  [[nodiscard]] std::span<const float> vector(RecordId id) const { return row(index_of(id)); }
  [[nodiscard]] double similarity(RecordId a, RecordId b) const {
    return cosine(vector(a), vector(b));
  }
  [[nodiscard]] double row_similarity(std::size_t a, std::size_t b) const {
    return cosine(row(a), row(b));
  }

  /// New store holding only `keep` ids, in this store's row order.
  [[nodiscard]] EmbeddingStore subset(const std::vector<RecordId>& keep) const;

  friend bool operator==(const EmbeddingStore&, const EmbeddingStore&) = default;

 private:
  std::size_t dimension_;
  std::vector<float> data_;
  std::vector<RecordId> ids_;
  std::unordered_map<RecordId, std::size_t> rows_;
};

// CGV1 binary vector file:
//   "CGV1" | u32 dimension | u64 count | count x (u64 id | dimension x f32)
// all little-endian.
EmbeddingStore load_vector_file(const std::filesystem::path& path);
void write_vector_file(const EmbeddingStore& store, const std::filesystem::path& path);

struct FetchOptions {
  std::size_t batch_size = 64;
  int max_retries = 3;
  /// Backoff before retry n (1-based) is initial_backoff_ms * 2^(n-1).
  int initial_backoff_ms = 200;
  int timeout_seconds = 60;
  /// Completed batches are appended here and skipped on a rerun. Empty
  /// disables checkpointing.
  std::filesystem::path checkpoint;
  std::function<void(const std::string&)> on_retry;
};

struct FetchStats {
  std::size_t batches = 0;
  std::size_t batches_from_checkpoint = 0;
  std::size_t retries = 0;
};

/// Embeds `claims` through an HTTP service implementing
/// POST /embed {"texts": [...]} -> {"vectors": [[...], ...]}.
/// `endpoint` is the base URL, e.g. "http://localhost:8080".
EmbeddingStore fetch_embeddings(const std::vector<std::pair<RecordId, std::string>>& claims,
                                const std::string& endpoint, const FetchOptions& options = {},
                                FetchStats* stats = nullptr);

}  // namespace claimgraph
