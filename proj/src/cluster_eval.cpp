#include "claimgraph/cluster_eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <unordered_set>

#include <json.hpp>

#include "claimgraph/io.hpp"
#include "claimgraph/parallel.hpp"
#include "claimgraph/rng.hpp"
#include "claimgraph/text.hpp"

namespace claimgraph {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::False:
      return "false";
    case Verdict::MostlyFalse:
      return "mostly-false";
    case Verdict::MostlyTrue:
      return "mostly-true";
    case Verdict::True:
      return "true";
  }
  return "false";
}

std::optional<Verdict> parse_verdict_label(std::string_view label) {
  if (label == "false") return Verdict::False;
  if (label == "mostly-false") return Verdict::MostlyFalse;
  if (label == "mostly-true") return Verdict::MostlyTrue;
  if (label == "true") return Verdict::True;
  return std::nullopt;
}

std::string normalize_verdict(std::string_view raw) { return text::alnum_fold(raw); }

VerdictTable parse_verdict_table(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("verdict table: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw Error("verdict table: expected a JSON object");
  }
  VerdictTable table;
  for (const auto& [raw, value] : doc.items()) {
    if (!value.is_string()) {
      throw Error("verdict table: label for \"" + raw + "\" is not a string");
    }
    const auto label = parse_verdict_label(value.get<std::string>());
    if (!label) {
      throw Error("verdict table: unknown label \"" + value.get<std::string>() + "\"");
    }
    const std::string key = normalize_verdict(raw);
    if (key.empty()) {
      continue;
    }
    auto [it, inserted] = table.emplace(key, *label);
    if (!inserted && it->second != *label) {
      throw Error("verdict table: conflicting labels for \"" + key + "\"");
    }
  }
  return table;
}

VerdictTable load_verdict_table(const std::filesystem::path& path) {
  return parse_verdict_table(io::read_file(path));
}

std::optional<Verdict> VerdictMap::lookup(std::string_view raw) const {
  auto it = mapping.find(normalize_verdict(raw));
  if (it == mapping.end()) {
    return std::nullopt;
  }
  return it->second;
}

VerdictMap build_verdict_map(std::span<const FactCheckRecord> records, std::size_t min_count,
                             const VerdictTable& table) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) {
    if (!r.rating_raw) {
      continue;
    }
    std::string key = normalize_verdict(*r.rating_raw);
    if (!key.empty()) {
      ++counts[key];
    }
  }
  VerdictMap map;
  map.min_count = min_count;
  for (const auto& [key, count] : counts) {
    VerdictFrequency f{key, count, std::nullopt};
    if (count >= min_count) {
      if (auto it = table.find(key); it != table.end()) {
        f.label = it->second;
        map.mapping.emplace(key, it->second);
      }
    }
    map.frequencies.push_back(std::move(f));
  }
  std::stable_sort(map.frequencies.begin(), map.frequencies.end(),
                   [](const VerdictFrequency& a, const VerdictFrequency& b) { return a.count > b.count; });
  return map;
}

double intra_cluster_variance(const Cluster& cluster, const EmbeddingStore& store) {
  const std::size_t m = cluster.size();
  if (m < 2) {
    throw Error("intra-cluster variance needs at least two members");
  }
  std::vector<std::size_t> rows(m);
  for (std::size_t i = 0; i < m; ++i) {
    rows[i] = store.index_of(cluster.members[i]);
  }
  // Welford over all pairs.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double d = 1.0 - store.row_similarity(rows[i], rows[j]);
      ++n;
      const double delta = d - mean;
      mean += delta / static_cast<double>(n);
      m2 += delta * (d - mean);
    }
  }
  return m2 / static_cast<double>(n);
}

std::vector<double> cluster_centroid(const Cluster& cluster, const EmbeddingStore& store) {
  if (cluster.members.empty()) {
    throw Error("centroid of an empty cluster");
  }
  std::vector<double> c(store.dimension(), 0.0);
  for (RecordId id : cluster.members) {
    const auto v = store.vector(id);
    for (std::size_t k = 0; k < c.size(); ++k) {
      c[k] += v[k];
    }
  }
  double norm = 0.0;
  for (double x : c) {
    norm += x * x;
  }
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    throw Error("cluster centroid is the zero vector");
  }
  for (double& x : c) {
    x /= norm;
  }
  return c;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    s += a[k] * b[k];
  }
  return s;
}

// Floyd's algorithm: `count` distinct values from [0, n).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng) {
  std::unordered_set<std::size_t> chosen;
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t j = n - count; j < n; ++j) {
    const std::size_t t = rng.below(j + 1);
    if (chosen.insert(t).second) {
      out.push_back(t);
    } else {
      chosen.insert(j);
      out.push_back(j);
    }
  }
  return out;
}

}  // namespace

double inter_cluster_distance(std::span<const Cluster> clusters, const EmbeddingStore& store,
                              std::size_t sample_cap, std::uint64_t seed) {
  const std::size_t n = clusters.size();
  if (n < 2) {
    throw Error("inter-cluster distance needs at least two clusters");
  }
  if (sample_cap == 0) {
    throw Error("inter-cluster sample cap must be positive");
  }
  std::vector<std::vector<double>> centroids(n);
  parallel_for(n, [&](std::size_t i) { centroids[i] = cluster_centroid(clusters[i], store); });

  std::vector<double> per_cluster(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    double sum = 0.0;
    std::size_t used = 0;
    if (sample_cap >= n - 1) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) {
          sum += 1.0 - dot(centroids[i], centroids[j]);
          ++used;
        }
      }
    } else {
      Rng rng(derive_seed(seed, i));
      // Sample from the n - 1 other clusters, skipping i.
      for (std::size_t s : sample_without_replacement(n - 1, sample_cap, rng)) {
        const std::size_t j = s < i ? s : s + 1;
        sum += 1.0 - dot(centroids[i], centroids[j]);
        ++used;
      }
    }
    per_cluster[i] = sum / static_cast<double>(used);
  });
  double total = 0.0;
  for (double v : per_cluster) {
    total += v;
  }
  return total / static_cast<double>(n);
}

namespace {

Verdict collapse(Verdict v, int n_labels) {
  if (n_labels == 2) {
    if (v == Verdict::MostlyFalse) return Verdict::False;
    if (v == Verdict::MostlyTrue) return Verdict::True;
  }
  return v;
}

}  // namespace

Consistency modal_consistency(std::span<const Cluster> clusters, const VerdictMap& verdicts,
                              int n_labels) {
  if (n_labels != 2 && n_labels != 4) {
    throw Error("modal consistency supports 2 or 4 labels");
  }
  Consistency out;
  double weighted_num = 0.0;
  double weighted_den = 0.0;
  double unweighted_sum = 0.0;
  for (const auto& c : clusters) {
    if (c.size() < 2) {
      continue;
    }
    if (c.verdicts.size() != c.members.size()) {
      throw Error("cluster " + std::to_string(c.cluster_id) + " has no attached verdicts");
    }
    std::array<std::size_t, 4> counts{};
    std::size_t mapped = 0;
    for (const auto& raw : c.verdicts) {
      if (!raw) {
        continue;
      }
      if (auto v = verdicts.lookup(*raw)) {
        ++counts[static_cast<std::size_t>(collapse(*v, n_labels))];
        ++mapped;
      }
    }
    if (mapped < 2) {
      continue;
    }
    const std::size_t mode = *std::max_element(counts.begin(), counts.end());
    weighted_num += static_cast<double>(mode);
    weighted_den += static_cast<double>(mapped);
    unweighted_sum += static_cast<double>(mode) / static_cast<double>(mapped);
    ++out.n_clusters;
  }
  if (out.n_clusters == 0) {
    throw Error("no cluster has two or more mapped verdicts");
  }
  out.weighted = weighted_num / weighted_den;
  out.unweighted = unweighted_sum / static_cast<double>(out.n_clusters);
  return out;
}

EvalReport evaluate_clustering(double threshold, std::vector<Cluster> clusters,
                               const EmbeddingStore& store, const RecordTable& records,
                               const VerdictMap& verdicts, const EvalOptions& options) {
  attach_metadata(clusters, records);
  const ClusterStats cs = cluster_stats(clusters);
  EvalReport r;
  r.threshold = threshold;
  r.n_clusters = cs.n_clusters;
  r.singleton_fraction = cs.singleton_fraction;
  r.mean_nonsingleton_size = cs.mean_nonsingleton_size;

  std::vector<const Cluster*> multi;
  for (const auto& c : clusters) {
    if (c.size() >= 2) {
      multi.push_back(&c);
    }
  }
  if (!multi.empty()) {
    std::vector<double> variances(multi.size());
    parallel_for(multi.size(), [&](std::size_t i) { variances[i] = intra_cluster_variance(*multi[i], store); });
    double s = 0.0;
    for (double v : variances) {
      s += v;
    }
    r.mean_intra_variance = s / static_cast<double>(variances.size());
  }
  if (clusters.size() >= 2) {
    r.mean_inter_distance = inter_cluster_distance(clusters, store, options.inter_sample_cap, options.seed);
  }
  try {
    r.modal_consistency_2 = modal_consistency(clusters, verdicts, 2);
    r.modal_consistency_4 = modal_consistency(clusters, verdicts, 4);
  } catch (const Error&) {
    r.modal_consistency_2.reset();
    r.modal_consistency_4.reset();
  }

  std::size_t mapped = 0;
  for (const auto& c : clusters) {
    for (const auto& raw : c.verdicts) {
      if (raw && verdicts.lookup(*raw)) {
        ++mapped;
      }
    }
  }
  r.coverage = static_cast<double>(mapped) / static_cast<double>(cs.n_nodes);
  return r;
}

std::vector<EvalReport> threshold_sweep(const HyperplaneIndex& index,
                                        std::span<const double> thresholds,
                                        const RecordTable& records, const VerdictMap& verdicts,
                                        const EvalOptions& options) {
  std::vector<double> sorted(thresholds.begin(), thresholds.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<EvalReport> out;
  out.reserve(sorted.size());
  for (double t : sorted) {
    const SimilarityGraph g = build_graph(index, t, options.initial_k, options.strict);
    out.push_back(evaluate_clustering(t, connected_components(g), index.store(), records, verdicts, options));
  }
  return out;
}

}  // namespace claimgraph
