#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "claimgraph/ann_index.hpp"
#include "claimgraph/embed_store.hpp"
#include "claimgraph/ingest.hpp"
#include "claimgraph/simgraph.hpp"

namespace claimgraph {

enum class Verdict { False, MostlyFalse, MostlyTrue, True };

std::string_view to_string(Verdict v);
std::optional<Verdict> parse_verdict_label(std::string_view label);

/// Lowercase with punctuation and whitespace removed.
std::string normalize_verdict(std::string_view raw);

/// Normalized verdict string -> label. Keys are normalized on load.
using VerdictTable = std::unordered_map<std::string, Verdict>;

/// JSON object {"raw verdict": "false" | "mostly-false" | "mostly-true" | "true"}.
VerdictTable parse_verdict_table(std::string_view json_text);
VerdictTable load_verdict_table(const std::filesystem::path& path);

struct VerdictFrequency {
  std::string normalized;
  std::size_t count;
  std::optional<Verdict> label;  // absent when unmapped
};

struct VerdictMap {
  std::unordered_map<std::string, Verdict> mapping;
  std::size_t min_count = 0;
  /// Every normalized verdict in the corpus, most frequent first.
  std::vector<VerdictFrequency> frequencies;

  [[nodiscard]] std::optional<Verdict> lookup(std::string_view raw) const;
};

/// Verdicts seen at least min_count times (after normalization) and present
/// in the table enter the map; others stay unmapped.
VerdictMap build_verdict_map(std::span<const FactCheckRecord> records, std::size_t min_count,
                             const VerdictTable& table);

/// Population variance of cosine distance over all member pairs. Throws for
/// singletons.
double intra_cluster_variance(const Cluster& cluster, const EmbeddingStore& store);

/// Normalized mean of the member vectors.
std::vector<double> cluster_centroid(const Cluster& cluster, const EmbeddingStore& store);

/// Mean over clusters of the average cosine distance from the cluster's
/// centroid to up to sample_cap other centroids, sampled without
/// replacement. With sample_cap >= clusters - 1 every pair is used.
double inter_cluster_distance(std::span<const Cluster> clusters, const EmbeddingStore& store,
                              std::size_t sample_cap, std::uint64_t seed);

struct Consistency {
  double weighted = 0.0;    // weights: mapped members per cluster
  double unweighted = 0.0;  // plain mean over eligible clusters
  std::size_t n_clusters = 0;
};

/// Share of mapped members holding their cluster's modal label, over
/// non-singleton clusters with >= 2 mapped members. n_labels is 2 (mostly-
/// labels collapse onto false/true) or 4. Clusters need attached verdicts.
Consistency modal_consistency(std::span<const Cluster> clusters, const VerdictMap& verdicts,
                              int n_labels);

struct EvalReport {
  double threshold = 0.0;
  std::size_t n_clusters = 0;
  double singleton_fraction = 0.0;
  std::optional<double> mean_nonsingleton_size;
  std::optional<double> mean_intra_variance;
  std::optional<double> mean_inter_distance;
  std::optional<Consistency> modal_consistency_2;
  std::optional<Consistency> modal_consistency_4;
  double coverage = 0.0;
};

struct EvalOptions {
  std::size_t initial_k = 10;
  bool strict = false;
  std::size_t inter_sample_cap = 10000;
  std::uint64_t seed = 42;
};

/// Scores one clustering.
EvalReport evaluate_clustering(double threshold, std::vector<Cluster> clusters,
                               const EmbeddingStore& store, const RecordTable& records,
                               const VerdictMap& verdicts, const EvalOptions& options);

/// Builds graph + components for each threshold (ascending) and scores it.
std::vector<EvalReport> threshold_sweep(const HyperplaneIndex& index,
                                        std::span<const double> thresholds,
                                        const RecordTable& records, const VerdictMap& verdicts,
                                        const EvalOptions& options);

}  // namespace claimgraph
