#pragma once

// Reference implementations used as independent oracles. Nothing here calls
// into the library's algorithms; only its containers are shared.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "claimgraph/embed_store.hpp"
#include "claimgraph/ingest.hpp"
#include "claimgraph/simgraph.hpp"
#include "claimgraph/synth.hpp"

namespace oracle {

using claimgraph::EmbeddingStore;
using claimgraph::RecordId;

inline double dot(std::span<const float> a, std::span<const float> b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += static_cast<long double>(a[i]) * static_cast<long double>(b[i]);
  }
  return static_cast<double>(s);
}

/// Unit vectors with i.i.d. Gaussian components, ids 1..n.
inline EmbeddingStore random_store(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  EmbeddingStore store(d);
  std::vector<float> v(d);
  for (std::size_t i = 0; i < n; ++i) {
    double norm2 = 0.0;
    std::vector<double> raw(d);
    for (auto& x : raw) {
      x = normal(gen);
      norm2 += x * x;
    }
    for (std::size_t j = 0; j < d; ++j) {
      v[j] = static_cast<float>(raw[j] / std::sqrt(norm2));
    }
    store.add(i + 1, v);
  }
  return store;
}

/// Row-index pairs (i < j) whose similarity clears the threshold.
inline std::vector<std::pair<std::size_t, std::size_t>> exact_edges(const EmbeddingStore& store,
                                                                    double threshold, bool strict = false) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < store.size(); ++i) {
    for (std::size_t j = i + 1; j < store.size(); ++j) {
      const double s = claimgraph::cosine(store.row(i), store.row(j));
      if (strict ? s > threshold : s >= threshold) {
        edges.emplace_back(i, j);
      }
    }
  }
  return edges;
}

/// BFS component label per row; labels are the smallest row in the component.
inline std::vector<long long> bfs_labels(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<long long> label(n, -1);
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] >= 0) {
      continue;
    }
    std::queue<std::size_t> q;
    q.push(s);
    label[s] = static_cast<long long>(s);
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (auto v : adj[u]) {
        if (label[v] < 0) {
          label[v] = static_cast<long long>(s);
          q.push(v);
        }
      }
    }
  }
  return label;
}

/// Component label per store row from the library's clusters.
inline std::vector<long long> labels_from_clusters(std::span<const claimgraph::Cluster> clusters,
                                                   const EmbeddingStore& store) {
  std::vector<long long> label(store.size(), -1);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (RecordId id : clusters[c].members) {
      label[store.index_of(id)] = static_cast<long long>(c);
    }
  }
  return label;
}

/// Relabels to first-appearance order so equal partitions compare equal.
inline std::vector<long long> canonical(const std::vector<long long>& labels) {
  std::map<long long, long long> remap;
  std::vector<long long> out;
  out.reserve(labels.size());
  for (long long l : labels) {
    auto [it, inserted] = remap.emplace(l, static_cast<long long>(remap.size()));
    out.push_back(it->second);
  }
  return out;
}

/// Hubert-Arabie adjusted Rand index from the contingency table.
inline double adjusted_rand(const std::vector<long long>& a, const std::vector<long long>& b) {
  std::map<std::pair<long long, long long>, double> nij;
  std::map<long long, double> ai;
  std::map<long long, double> bj;
  for (std::size_t i = 0; i < a.size(); ++i) {
    nij[{a[i], b[i]}] += 1;
    ai[a[i]] += 1;
    bj[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double sum_ij = 0;
  double sum_a = 0;
  double sum_b = 0;
  for (auto& [k, v] : nij) sum_ij += c2(v);
  for (auto& [k, v] : ai) sum_a += c2(v);
  for (auto& [k, v] : bj) sum_b += c2(v);
  const double total = c2(static_cast<double>(a.size()));
  const double expected = sum_a * sum_b / total;
  const double max_index = (sum_a + sum_b) / 2;
  if (max_index == expected) {
    return 1.0;
  }
  return (sum_ij - expected) / (max_index - expected);
}

/// Two-sided one-sample KS statistic against U(0, 1).
inline double ks_uniform(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d = std::max({d, (static_cast<double>(i) + 1) / n - x[i], x[i] - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic KS critical value at alpha = 0.05.
inline double ks_critical_05(std::size_t n) { return 1.3581 / std::sqrt(static_cast<double>(n)); }

/// Library records from synthetic JSON without going through ingest.
inline std::vector<claimgraph::FactCheckRecord> records_from_synth(const claimgraph::SynthCorpus& corpus) {
  std::vector<claimgraph::FactCheckRecord> out;
  for (const auto& j : corpus.records) {
    claimgraph::FactCheckRecord r;
    r.id = j.at("id").get<RecordId>();
    r.claim_text = j.value("claimReviewed", "");
    r.url = j.at("url").get<std::string>();
    r.domain = r.url.substr(12, r.url.find('/', 12) - 12);
    r.review_date = claimgraph::Date::from_iso(j.at("datePublished").get<std::string>());
    if (j.contains("language") && j["language"].is_string()) {
      r.language = j["language"].get<std::string>();
    }
    r.rating_raw = j.at("reviewRating").at("alternateName").get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("claimgraph-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace oracle
