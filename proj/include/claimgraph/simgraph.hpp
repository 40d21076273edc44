#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "claimgraph/ann_index.hpp"
#include "claimgraph/common.hpp"
#include "claimgraph/ingest.hpp"

namespace claimgraph {

struct Edge {
  RecordId a;  // a < b
  RecordId b;
  double similarity;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected threshold graph. Nodes sorted ascending; edges sorted by (a, b).
struct SimilarityGraph {
  std::vector<RecordId> nodes;
  std::vector<Edge> edges;
};

/// Runs query_threshold from every node and symmetrizes the union of hits.
SimilarityGraph build_graph(const HyperplaneIndex& index, double threshold,
                            std::size_t initial_k = 10, bool strict = false);

/// Neighbor lists keyed by node, each sorted by id.
class Adjacency {
 public:
  explicit Adjacency(const SimilarityGraph& graph);

  [[nodiscard]] const std::vector<std::pair<RecordId, double>>& neighbors(RecordId id) const;
  [[nodiscard]] bool connected(RecordId a, RecordId b) const;
  [[nodiscard]] std::optional<double> edge_similarity(RecordId a, RecordId b) const;

 private:
  std::unordered_map<RecordId, std::vector<std::pair<RecordId, double>>> adj_;
  std::vector<std::pair<RecordId, double>> empty_;
};

struct Cluster {
  RecordId cluster_id = 0;          // smallest member id
  std::vector<RecordId> members;    // ascending
  // Aligned with members; filled by attach_metadata.
  std::vector<std::optional<std::string>> languages;
  std::vector<std::optional<Date>> dates;
  std::vector<std::optional<std::string>> verdicts;

  [[nodiscard]] std::size_t size() const { return members.size(); }
};

/// Union-find with path compression and union by size.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n);
  std::size_t find(std::size_t x);
  bool unite(std::size_t a, std::size_t b);

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

/// Clusters ordered by cluster_id; together they partition graph.nodes.
std::vector<Cluster> connected_components(const SimilarityGraph& graph);

/// Copies language, date and verdict of every member found in `records`.
void attach_metadata(std::vector<Cluster>& clusters, const RecordTable& records);

struct ClusterStats {
  std::size_t n_nodes = 0;
  std::size_t n_clusters = 0;
  std::size_t n_singletons = 0;
  double singleton_fraction = 0.0;
  std::size_t n_repeated_claims = 0;     // clusters with >= 2 members
  std::size_t n_nodes_in_repeated = 0;
  std::optional<double> mean_nonsingleton_size;
};

ClusterStats cluster_stats(std::span<const Cluster> clusters);

// CSV exports: edges (id_a,id_b,similarity) and clusters (cluster_id,record_id).
void write_edges_csv(const SimilarityGraph& graph, const std::filesystem::path& path);
void write_clusters_csv(std::span<const Cluster> clusters, const std::filesystem::path& path);
/// Rebuilds the graph from both exports (nodes come from the cluster file).
SimilarityGraph read_graph_csv(const std::filesystem::path& edges_path,
                               const std::filesystem::path& clusters_path);

}  // namespace claimgraph
