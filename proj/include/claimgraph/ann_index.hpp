#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "claimgraph/common.hpp"
#include "claimgraph/embed_store.hpp"

namespace claimgraph {

struct IndexParams {
  int n_hyperplanes = 100;
  /// Hyperplanes are grouped into tables of this many bits; the last table
  /// takes the remainder.
  int table_bits = 10;
  /// Buckets within this Hamming distance of the query signature are probed.
  /// A value >= table_bits probes every bucket (exact search).
  int n_probe_bits = 2;
  std::uint64_t seed = 42;

  friend bool operator==(const IndexParams&, const IndexParams&) = default;
};

struct NeighborHit {
  RecordId record_id;
  double similarity;

  friend bool operator==(const NeighborHit&, const NeighborHit&) = default;
};

/// Record of the doubling search in query_threshold.
struct ThresholdTrace {
  std::vector<std::size_t> batch_sizes;
  std::size_t cut = 0;
};

/// Candidate sets smaller than this are replaced by a scan of the whole store.
inline constexpr std::size_t kMinCandidates = 50;

/// Signed-random-projection LSH over an EmbeddingStore.
///
/// Each of the n_hyperplanes rows contributes one signature bit,
/// bit = [v . h >= 0]. Bits are split into tables; every stored row lives in
/// exactly one bucket per table. A query gathers the rows of all buckets
/// within n_probe_bits of its own signature in any table, then ranks them by
/// exact cosine, so no hit is ever reported above its true similarity.
class HyperplaneIndex {
 public:
  static HyperplaneIndex build(std::shared_ptr<const EmbeddingStore> store,
                               const IndexParams& params);

  /// Builds with caller-supplied hyperplane rows (n_hyperplanes x dimension,
  /// row-major). Rows are normalized; params.seed is recorded only.
  static HyperplaneIndex with_hyperplanes(std::shared_ptr<const EmbeddingStore> store,
                                          const IndexParams& params, std::vector<float> planes);

  /// Up to k nearest candidates by exact cosine, descending (ties: smaller
  /// id first). The query itself is never returned.
  [[nodiscard]] std::vector<NeighborHit> query_topk(RecordId query, std::size_t k) const;

  /// All retrieved neighbors with similarity >= threshold (> when strict).
  /// Retrieves initial_k hits and doubles k while the last hit still
  /// qualifies and more candidates remain, then binary-searches the final
  /// batch for the cut.
  [[nodiscard]] std::vector<NeighborHit> query_threshold(RecordId query, double threshold,
                                                         std::size_t initial_k,
                                                         bool strict = false,
                                                         ThresholdTrace* trace = nullptr) const;

  [[nodiscard]] const IndexParams& params() const { return params_; }
  [[nodiscard]] const EmbeddingStore& store() const { return *store_; }
  [[nodiscard]] std::shared_ptr<const EmbeddingStore> store_ptr() const { return store_; }
  [[nodiscard]] std::size_t n_tables() const { return tables_.size(); }
  [[nodiscard]] int bits_in_table(std::size_t table) const;
  [[nodiscard]] std::span<const float> hyperplanes() const { return planes_; }
  [[nodiscard]] bool exhaustive() const;

  /// Signature of store row `row` in `table`.
  [[nodiscard]] std::uint64_t signature(std::size_t table, std::size_t row) const;
  /// Signature of an arbitrary vector in `table`.
  [[nodiscard]] std::uint64_t signature(std::size_t table, std::span<const float> v) const;

  using Buckets = std::unordered_map<std::uint64_t, std::vector<std::uint32_t>>;
  [[nodiscard]] const Buckets& buckets(std::size_t table) const { return tables_[table]; }

  /// Store rows probed for `row` (sorted, deduplicated, excluding `row`).
  [[nodiscard]] std::vector<std::uint32_t> candidate_rows(std::size_t row) const;

  friend void write_index(const HyperplaneIndex& index, const std::filesystem::path& path);
  friend HyperplaneIndex read_index(const std::filesystem::path& path,
                                    std::shared_ptr<const EmbeddingStore> store,
                                    std::optional<int> probe_override);

 private:
  HyperplaneIndex(std::shared_ptr<const EmbeddingStore> store, const IndexParams& params)
      : store_(std::move(store)), params_(params) {}

  void fill_tables();
  [[nodiscard]] std::vector<NeighborHit> ranked_candidates(std::size_t row) const;

  std::shared_ptr<const EmbeddingStore> store_;
  IndexParams params_;
  std::vector<float> planes_;
  std::vector<Buckets> tables_;
};

/// Exact scan of every stored vector; the ground truth for recall checks.
std::vector<NeighborHit> brute_force_threshold(const EmbeddingStore& store, RecordId query,
                                               double threshold, bool strict = false);

// CGI1 index file, little-endian:
//   "CGI1" | u32 n_hyperplanes | u32 dimension | u64 seed | u32 table_bits |
//   u32 n_probe_bits | n_hyperplanes x dimension f32 | u32 n_tables |
//   per table: u64 n_buckets | per bucket, ascending signature:
//     u64 signature | u64 count | count x u64 record id
void write_index(const HyperplaneIndex& index, const std::filesystem::path& path);
/// `store` must hold exactly the ids the index was built over.
HyperplaneIndex read_index(const std::filesystem::path& path,
                           std::shared_ptr<const EmbeddingStore> store,
                           std::optional<int> probe_override = std::nullopt);

}  // namespace claimgraph
