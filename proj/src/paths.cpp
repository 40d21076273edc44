#include "claimgraph/paths.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "claimgraph/parallel.hpp"
#include "claimgraph/rng.hpp"

namespace claimgraph {

DissimilarPair most_dissimilar_pair(const Cluster& cluster, const EmbeddingStore& store,
                                    std::size_t max_exhaustive, std::uint64_t seed) {
  if (cluster.size() < 2) {
    throw Error("most dissimilar pair of a singleton cluster");
  }
  std::vector<RecordId> members = cluster.members;
  bool sampled = false;
  if (max_exhaustive >= 2 && members.size() > max_exhaustive) {
    // Partial Fisher-Yates, then restore id order for the tie rule.
    Rng rng(derive_seed(seed, cluster.cluster_id));
    for (std::size_t i = 0; i < max_exhaustive; ++i) {
      const std::size_t j = i + rng.below(members.size() - i);
      std::swap(members[i], members[j]);
    }
    members.resize(max_exhaustive);
    std::sort(members.begin(), members.end());
    sampled = true;
  }
  std::vector<std::size_t> rows(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    rows[i] = store.index_of(members[i]);
  }
  DissimilarPair best{members[0], members[1], std::numeric_limits<double>::infinity(), sampled};
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      const double s = store.row_similarity(rows[i], rows[j]);
      if (s < best.similarity) {
        best = {members[i], members[j], s, sampled};
      }
    }
  }
  return best;
}

namespace {

std::unordered_map<RecordId, std::size_t> bfs_distances(const Adjacency& adjacency, RecordId from) {
  std::unordered_map<RecordId, std::size_t> dist{{from, 0}};
  std::queue<RecordId> q;
  q.push(from);
  while (!q.empty()) {
    const RecordId u = q.front();
    q.pop();
    for (const auto& [v, sim] : adjacency.neighbors(u)) {
      if (dist.emplace(v, dist[u] + 1).second) {
        q.push(v);
      }
    }
  }
  return dist;
}

struct Partial {
  double total = 0.0;
  std::vector<RecordId> path;
};

bool better(const Partial& x, const Partial& y) {
  if (x.total != y.total) {
    return x.total > y.total;
  }
  return x.path < y.path;
}

std::vector<RecordId> hop_path(const Adjacency& adjacency, RecordId a, RecordId b) {
  const auto from_a = bfs_distances(adjacency, a);
  auto it = from_a.find(b);
  if (it == from_a.end()) {
    throw Error("records " + std::to_string(a) + " and " + std::to_string(b) + " are not connected");
  }
  const std::size_t hops = it->second;
  const auto from_b = bfs_distances(adjacency, b);

  // Walk the layers of the shortest-path DAG, keeping the best partial path
  // to each node.
  std::map<RecordId, Partial> layer{{a, Partial{0.0, {a}}}};
  for (std::size_t depth = 1; depth <= hops; ++depth) {
    std::map<RecordId, Partial> next;
    for (const auto& [u, partial] : layer) {
      for (const auto& [v, sim] : adjacency.neighbors(u)) {
        auto da = from_a.find(v);
        auto db = from_b.find(v);
        if (da == from_a.end() || db == from_b.end() || da->second != depth ||
            db->second != hops - depth) {
          continue;
        }
        Partial candidate{partial.total + sim, partial.path};
        candidate.path.push_back(v);
        auto [slot, inserted] = next.emplace(v, candidate);
        if (!inserted && better(candidate, slot->second)) {
          slot->second = std::move(candidate);
        }
      }
    }
    layer = std::move(next);
  }
  return layer.at(b).path;
}

std::vector<RecordId> distance_path(const Adjacency& adjacency, RecordId a, RecordId b) {
  std::unordered_map<RecordId, double> dist{{a, 0.0}};
  std::unordered_map<RecordId, RecordId> pred;
  using Item = std::pair<double, RecordId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  pq.emplace(0.0, a);
  std::unordered_set<RecordId> done;
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (!done.insert(u).second) {
      continue;
    }
    if (u == b) {
      break;
    }
    for (const auto& [v, sim] : adjacency.neighbors(u)) {
      if (done.contains(v)) {
        continue;
      }
      const double nd = d + (1.0 - sim);
      auto it = dist.find(v);
      if (it == dist.end() || nd < it->second || (nd == it->second && u < pred[v])) {
        dist[v] = nd;
        pred[v] = u;
        pq.emplace(nd, v);
      }
    }
  }
  if (!done.contains(b)) {
    throw Error("records " + std::to_string(a) + " and " + std::to_string(b) + " are not connected");
  }
  std::vector<RecordId> path{b};
  while (path.back() != a) {
    path.push_back(pred.at(path.back()));
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

std::vector<RecordId> shortest_path(const Adjacency& adjacency, RecordId a, RecordId b,
                                    PathMode mode) {
  if (a == b) {
    return {a};
  }
  return mode == PathMode::Hops ? hop_path(adjacency, a, b) : distance_path(adjacency, a, b);
}

std::optional<PathLanguageStats> path_language_stats(
    std::span<const std::optional<std::string>> languages) {
  std::set<std::string> unique;
  PathLanguageStats s{0, 0};
  for (std::size_t i = 0; i < languages.size(); ++i) {
    if (!languages[i] || languages[i]->empty()) {
      return std::nullopt;
    }
    unique.insert(*languages[i]);
    if (i > 0 && *languages[i] != *languages[i - 1]) {
      ++s.n_language_switches;
    }
  }
  s.n_unique_languages = unique.size();
  return s;
}

PathDataset build_regression_dataset(std::span<const Cluster> clusters, const Adjacency& adjacency,
                                     const EmbeddingStore& store, const PathOptions& options) {
  std::vector<std::optional<PathAnalysis>> rows(clusters.size());
  std::vector<char> dropped(clusters.size(), 0);
  parallel_for(clusters.size(), [&](std::size_t k) {
    const Cluster& c = clusters[k];
    if (c.size() < 2) {
      return;
    }
    if (c.languages.size() != c.members.size()) {
      throw Error("cluster " + std::to_string(c.cluster_id) + " has no attached languages");
    }
    const auto pair = most_dissimilar_pair(c, store, options.max_exhaustive, options.seed);
    auto path = shortest_path(adjacency, pair.a, pair.b, options.mode);
    std::vector<std::optional<std::string>> langs;
    langs.reserve(path.size());
    for (RecordId id : path) {
      const auto pos = std::lower_bound(c.members.begin(), c.members.end(), id) - c.members.begin();
      langs.push_back(c.languages[static_cast<std::size_t>(pos)]);
    }
    const auto ls = path_language_stats(langs);
    if (!ls) {
      dropped[k] = 1;
      return;
    }
    const std::size_t length = path.size() - 1;
    rows[k] = PathAnalysis{c.cluster_id,          pair.a, pair.b, pair.similarity,
                           std::move(path),       length, ls->n_unique_languages,
                           ls->n_language_switches, pair.sampled};
  });
  PathDataset ds;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    ds.dropped_missing_language += dropped[k];
    if (rows[k]) {
      ds.sampled_clusters += rows[k]->sampled ? 1 : 0;
      ds.rows.push_back(std::move(*rows[k]));
    }
  }
  return ds;
}

PathRegressions run_path_regressions(std::span<const PathAnalysis> rows) {
  if (rows.size() < 10) {
    throw Error("regression needs at least 10 clusters, got " + std::to_string(rows.size()));
  }
  std::vector<double> y;
  std::vector<double> length;
  std::vector<double> unique;
  std::vector<double> switches;
  for (const auto& r : rows) {
    y.push_back(r.endpoint_similarity);
    length.push_back(static_cast<double>(r.length));
    unique.push_back(static_cast<double>(r.n_unique_languages));
    switches.push_back(static_cast<double>(r.n_language_switches));
  }
  return PathRegressions{
      stats::ols(stats::DesignMatrix::with_intercept({unique, length}, y,
                                                     {"n_unique_languages", "length"})),
      stats::ols(stats::DesignMatrix::with_intercept({switches, length}, y,
                                                     {"n_language_switches", "length"}))};
}

std::string significance_stars(double p) {
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  return "";
}

nlohmann::json regression_to_json(const stats::OlsResult& result) {
  nlohmann::json j;
  j["coefficients"] = nlohmann::json::array();
  for (const auto& c : result.coefficients) {
    j["coefficients"].push_back({{"name", c.name},
                                 {"estimate", c.estimate},
                                 {"standard_error", c.standard_error},
                                 {"t", c.t},
                                 {"p", c.p},
                                 {"stars", significance_stars(c.p)}});
  }
  j["r_squared"] = result.r_squared;
  j["adjusted_r_squared"] = result.adjusted_r_squared;
  j["n_observations"] = result.n_observations;
  return j;
}

}  // namespace claimgraph
