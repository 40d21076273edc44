#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "claimgraph/config.hpp"
#include "claimgraph/embed_store.hpp"
#include "claimgraph/simgraph.hpp"
#include "claimgraph/stats.hpp"

namespace claimgraph {

struct DissimilarPair {
  RecordId a;  // a < b
  RecordId b;
  double similarity;
  bool sampled = false;  // scan ran on a member sample
};

/// Member pair with the lowest cosine similarity; ties go to the smallest
/// (a, b). Clusters above max_exhaustive members are scanned on a seeded
/// sample of max_exhaustive members.
DissimilarPair most_dissimilar_pair(const Cluster& cluster, const EmbeddingStore& store,
                                    std::size_t max_exhaustive = 2000, std::uint64_t seed = 42);

/// Hops: fewest edges, then largest total edge similarity, then the
/// lexicographically smallest id sequence. Distance: least total (1 - cos),
/// ties to the smaller predecessor id. Throws if b is unreachable from a.
std::vector<RecordId> shortest_path(const Adjacency& adjacency, RecordId a, RecordId b,
                                    PathMode mode = PathMode::Hops);

struct PathLanguageStats {
  std::size_t n_unique_languages;
  std::size_t n_language_switches;
};

/// Nullopt when any member lacks a language.
std::optional<PathLanguageStats> path_language_stats(
    std::span<const std::optional<std::string>> languages);

struct PathAnalysis {
  RecordId cluster_id;
  RecordId endpoint_a;
  RecordId endpoint_b;
  double endpoint_similarity;
  std::vector<RecordId> path;
  std::size_t length;  // edges
  std::size_t n_unique_languages;
  std::size_t n_language_switches;
  bool sampled;
};

struct PathOptions {
  PathMode mode = PathMode::Hops;
  std::size_t max_exhaustive = 2000;
  std::uint64_t seed = 42;
};

struct PathDataset {
  std::vector<PathAnalysis> rows;      // ordered by cluster_id
  std::size_t dropped_missing_language = 0;
  std::size_t sampled_clusters = 0;
};

/// One row per non-singleton cluster. Clusters need attached languages.
PathDataset build_regression_dataset(std::span<const Cluster> clusters, const Adjacency& adjacency,
                                     const EmbeddingStore& store, const PathOptions& options);

struct PathRegressions {
  stats::OlsResult unique_languages;  // similarity ~ n_unique_languages + length
  stats::OlsResult switches;          // similarity ~ n_language_switches + length
};

/// Needs at least 10 rows.
PathRegressions run_path_regressions(std::span<const PathAnalysis> rows);

/// "***" for p < 0.01, "**" for p < 0.05, "*" for p < 0.1.
std::string significance_stars(double p);

nlohmann::json regression_to_json(const stats::OlsResult& result);

}  // namespace claimgraph
