#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "claimgraph/common.hpp"
#include "claimgraph/embed_store.hpp"

namespace claimgraph {

/// Parameters of a planted synthetic corpus.
struct SynthSpec {
  std::size_t n_clusters = 500;
  /// When positive, clusters are drawn until this many records exist
  /// (n_clusters is then ignored).
  std::size_t n_records = 0;
  /// size_weights[i] is the probability of a cluster of size i + 1.
  std::vector<double> size_weights{0.55, 0.25, 0.1, 0.05, 0.03, 0.02};
  std::size_t dimension = 128;
  double intra_similarity = 0.92;
  double inter_similarity_cap = 0.5;
  double edge_threshold = 0.875;
  std::vector<std::pair<std::string, double>> languages{
      {"en", 0.4}, {"es", 0.2}, {"pt", 0.15}, {"hi", 0.1}, {"fr", 0.1}, {"de", 0.05}};
  double homophily = 0.7;
  double drift_rate = 0.0;  // per day
  DateRange date_range{Date(2020, 3, 1), Date(2022, 3, 31)};
  int date_spread_days = 180;  // member dates within this span of the cluster start
  std::size_t n_domains = 30;
  double verdict_consistency = 0.9;
  double missing_language_rate = 0.0;
  double exact_duplicate_rate = 0.0;
  double editorial_duplicate_rate = 0.0;
  double boilerplate_domain_rate = 0.0;  // share of domains prefixing a literal
  double headline_fallback_rate = 0.0;
  std::uint64_t seed = 42;
};

/// Throws Error on an invalid spec.
void validate(const SynthSpec& spec);

nlohmann::json to_json(const SynthSpec& spec);
/// Defaults overridden by the keys present; unknown keys throw.
SynthSpec synth_spec_from_json(const nlohmann::json& doc);

struct PlantedDuplicate {
  RecordId id;
  RecordId original;
  std::string kind;  // "exact" or "editorial"
};

struct SynthCorpus {
  std::vector<nlohmann::json> records;  // JSONL objects in ingest schema
  EmbeddingStore vectors;
  /// Ground-truth cluster per record, aligned with vectors rows.
  std::vector<long long> truth;
  std::vector<std::string> cluster_language;  // majority language per cluster
  std::vector<PlantedDuplicate> duplicates;
  std::size_t n_clusters = 0;
};

/// Deterministic for a fixed spec. Throws Error when centers cannot be
/// placed under the inter-similarity cap within 10,000 draws each.
SynthCorpus generate(const SynthSpec& spec);

/// records.jsonl, vectors.cgv and truth.json under `dir`.
void write_corpus(const SynthCorpus& corpus, const SynthSpec& spec, const std::filesystem::path& dir);

}  // namespace claimgraph
