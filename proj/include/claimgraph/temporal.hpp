#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "claimgraph/embed_store.hpp"
#include "claimgraph/simgraph.hpp"
#include "claimgraph/stats.hpp"

namespace claimgraph {

enum class PairPopulation { Edges, Unconnected, All };

std::string_view to_string(PairPopulation p);

struct PairDiff {
  RecordId a;  // a < b
  RecordId b;
  int days;
  double similarity;
};

struct PairDiffs {
  std::vector<PairDiff> pairs;
  std::size_t excluded_pairs = 0;  // a member had no date
};

/// Intra-cluster pairs of the chosen population with |date_a - date_b| in
/// days and exact cosine similarity. Clusters need attached dates.
PairDiffs pair_time_diffs(std::span<const Cluster> clusters, const Adjacency& adjacency,
                          const EmbeddingStore& store, PairPopulation population);

/// Empirical CDF over whole days 0..max(days).
struct TimeDiffCdf {
  PairPopulation population = PairPopulation::Edges;
  std::vector<double> cum_fraction;  // index = day
  std::size_t n_pairs = 0;

  /// Fraction of pairs with days <= `day`.
  [[nodiscard]] double at(int day) const;
};

TimeDiffCdf time_diff_cdf(std::span<const PairDiff> pairs, PairPopulation population);

struct DriftRow {
  int bin_start;
  double mean_similarity;
  std::optional<double> standard_error;  // absent for single-pair bins
  std::size_t n_pairs;
};

/// Mean similarity per bin of bin_width days over pairs with days <=
/// max_days. Empty bins are omitted.
std::vector<DriftRow> drift_curve(std::span<const PairDiff> pairs, int max_days, int bin_width);

/// Spearman correlation of bin mean against bin start.
stats::Correlation drift_trend(std::span<const DriftRow> curve);

struct DriftTest {
  stats::WelchResult welch;  // early minus late
  std::size_t n_early;
  std::size_t n_late;
  double mean_early;
  double mean_late;
};

/// Welch test of similarities with days <= early_max_days against those
/// with late_min_days <= days <= late_max_days.
DriftTest drift_test(std::span<const PairDiff> pairs, int early_max_days, int late_min_days,
                     int late_max_days);

struct DirectionalComparison {
  stats::WelchResult welch;         // connected minus unconnected time gaps
  double p_connected_greater;       // one-sided
  double p_connected_less;          // one-sided
  double mean_connected_days;
  double mean_unconnected_days;
};

/// Compares the time gaps of connected and unconnected pairs, reporting
/// both one-sided alternatives.
DirectionalComparison compare_time_gaps(std::span<const PairDiff> connected,
                                        std::span<const PairDiff> unconnected);

}  // namespace claimgraph
