#include "claimgraph/simgraph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

#include "claimgraph/io.hpp"
#include "claimgraph/parallel.hpp"

namespace claimgraph {

SimilarityGraph build_graph(const HyperplaneIndex& index, double threshold,
                            std::size_t initial_k, bool strict) {
  const auto& store = index.store();
  std::vector<std::vector<NeighborHit>> hits(store.size());
  parallel_for(store.size(), [&](std::size_t row) {
    hits[row] = index.query_threshold(store.id_at(row), threshold, initial_k, strict);
  });

  SimilarityGraph graph;
  graph.nodes = store.ids();
  std::sort(graph.nodes.begin(), graph.nodes.end());
  for (std::size_t row = 0; row < store.size(); ++row) {
    const RecordId self = store.id_at(row);
    for (const auto& h : hits[row]) {
      graph.edges.push_back({std::min(self, h.record_id), std::max(self, h.record_id), h.similarity});
    }
  }
  std::sort(graph.edges.begin(), graph.edges.end(), [](const Edge& x, const Edge& y) {
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });
  graph.edges.erase(std::unique(graph.edges.begin(), graph.edges.end(),
                                [](const Edge& x, const Edge& y) { return x.a == y.a && x.b == y.b; }),
                    graph.edges.end());
  return graph;
}

Adjacency::Adjacency(const SimilarityGraph& graph) {
  for (RecordId n : graph.nodes) {
    adj_[n];
  }
  for (const auto& e : graph.edges) {
    adj_[e.a].emplace_back(e.b, e.similarity);
    adj_[e.b].emplace_back(e.a, e.similarity);
  }
  for (auto& [node, list] : adj_) {
    std::sort(list.begin(), list.end());
  }
}

const std::vector<std::pair<RecordId, double>>& Adjacency::neighbors(RecordId id) const {
  auto it = adj_.find(id);
  return it == adj_.end() ? empty_ : it->second;
}

std::optional<double> Adjacency::edge_similarity(RecordId a, RecordId b) const {
  const auto& list = neighbors(a);
  auto it = std::lower_bound(list.begin(), list.end(), b,
                             [](const std::pair<RecordId, double>& p, RecordId v) { return p.first < v; });
  if (it != list.end() && it->first == b) {
    return it->second;
  }
  return std::nullopt;
}

bool Adjacency::connected(RecordId a, RecordId b) const { return edge_similarity(a, b).has_value(); }

UnionFind::UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t UnionFind::find(std::size_t x) {
  std::size_t root = x;
  while (parent_[root] != root) {
    root = parent_[root];
  }
  while (parent_[x] != root) {
    const std::size_t next = parent_[x];
    parent_[x] = root;
    x = next;
  }
  return root;
}

bool UnionFind::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) {
    return false;
  }
  if (size_[a] < size_[b]) {
    std::swap(a, b);
  }
  parent_[b] = a;
  size_[a] += size_[b];
  return true;
}

std::vector<Cluster> connected_components(const SimilarityGraph& graph) {
  std::vector<RecordId> nodes = graph.nodes;
  std::sort(nodes.begin(), nodes.end());
  std::unordered_map<RecordId, std::size_t> pos;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    pos.emplace(nodes[i], i);
  }
  UnionFind uf(nodes.size());
  for (const auto& e : graph.edges) {
    auto ia = pos.find(e.a);
    auto ib = pos.find(e.b);
    if (ia == pos.end() || ib == pos.end()) {
      throw Error("edge references a node outside the graph");
    }
    uf.unite(ia->second, ib->second);
  }
  // Nodes are visited in ascending order, so each cluster's first member is
  // its smallest id and clusters come out ordered by cluster_id.
  std::unordered_map<std::size_t, std::size_t> slot;
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::size_t root = uf.find(i);
    auto [it, inserted] = slot.emplace(root, clusters.size());
    if (inserted) {
      clusters.push_back(Cluster{nodes[i], {}, {}, {}, {}});
    }
    clusters[it->second].members.push_back(nodes[i]);
  }
  return clusters;
}

void attach_metadata(std::vector<Cluster>& clusters, const RecordTable& records) {
  for (auto& c : clusters) {
    c.languages.assign(c.members.size(), std::nullopt);
    c.dates.assign(c.members.size(), std::nullopt);
    c.verdicts.assign(c.members.size(), std::nullopt);
    for (std::size_t i = 0; i < c.members.size(); ++i) {
      if (const auto* r = records.find(c.members[i])) {
        if (r->language && !r->language->empty()) {
          c.languages[i] = r->language;
        }
        c.dates[i] = r->review_date;
        c.verdicts[i] = r->rating_raw;
      }
    }
  }
}

ClusterStats cluster_stats(std::span<const Cluster> clusters) {
  if (clusters.empty()) {
    throw Error("cluster_stats needs at least one cluster");
  }
  ClusterStats s;
  s.n_clusters = clusters.size();
  for (const auto& c : clusters) {
    s.n_nodes += c.size();
    if (c.size() == 1) {
      ++s.n_singletons;
    } else {
      ++s.n_repeated_claims;
      s.n_nodes_in_repeated += c.size();
    }
  }
  s.singleton_fraction = static_cast<double>(s.n_singletons) / static_cast<double>(s.n_nodes);
  if (s.n_repeated_claims > 0) {
    s.mean_nonsingleton_size =
        static_cast<double>(s.n_nodes_in_repeated) / static_cast<double>(s.n_repeated_claims);
  }
  return s;
}

void write_edges_csv(const SimilarityGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  io::write_csv_row(out, {"id_a", "id_b", "similarity"});
  for (const auto& e : graph.edges) {
    io::write_csv_row(out, {std::to_string(e.a), std::to_string(e.b), io::format_double(e.similarity)});
  }
}

void write_clusters_csv(std::span<const Cluster> clusters, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  io::write_csv_row(out, {"cluster_id", "record_id"});
  for (const auto& c : clusters) {
    for (RecordId m : c.members) {
      io::write_csv_row(out, {std::to_string(c.cluster_id), std::to_string(m)});
    }
  }
}

SimilarityGraph read_graph_csv(const std::filesystem::path& edges_path,
                               const std::filesystem::path& clusters_path) {
  SimilarityGraph g;
  for (const auto& row : io::read_csv(clusters_path, {"cluster_id", "record_id"})) {
    g.nodes.push_back(std::stoull(row[1]));
  }
  std::sort(g.nodes.begin(), g.nodes.end());
  for (const auto& row : io::read_csv(edges_path, {"id_a", "id_b", "similarity"})) {
    g.edges.push_back({std::stoull(row[0]), std::stoull(row[1]), std::stod(row[2])});
  }
  return g;
}

}  // namespace claimgraph
