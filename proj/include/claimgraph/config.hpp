#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "claimgraph/common.hpp"

namespace claimgraph {

class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : Error(key + ": " + what), key_(key) {}
  [[nodiscard]] const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class PathMode { Hops, Distance };

/// Every tunable of the pipeline. Immutable once loaded.
struct PipelineConfig {
  // Graph construction.
  double edge_threshold = 0.875;
  double near_dup_threshold = 0.95;
  bool strict_threshold = false;

  // Hyperplane index.
  int n_hyperplanes = 100;
  int table_bits = 10;
  int n_probe_bits = 2;
  int ann_initial_k = 10;

  // Ingest.
  double length_sd_multiplier = 2.0;
  bool length_window_two_sided = false;
  double per_domain_min_share = 0.05;
  DateRange date_range{Date(2020, 3, 1), Date(2022, 3, 31)};

  // Evaluation and analyses.
  int min_verdict_count = 50;
  int min_token_count = 50;
  double alpha = 0.01;
  int null_model_replicates = 1000;
  int inter_cluster_sample_cap = 10000;
  std::vector<double> sweep_thresholds{0.75, 0.80, 0.825, 0.85, 0.875, 0.90, 0.95};
  int drift_early_max_days = 30;
  int drift_late_min_days = 335;
  int drift_late_max_days = 395;
  int drift_max_days = 730;
  int drift_bin_width = 7;
  PathMode path_mode = PathMode::Hops;
  int max_exhaustive_cluster = 2000;

  // External services and assets ("" selects the bundled asset).
  int embed_batch_size = 64;
  std::string boilerplate_list;
  std::string verdict_table;
  std::string family_table;

  std::uint64_t rng_seed = 42;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

using ConfigOverrides = std::map<std::string, std::string>;

/// Names of every config key, in declaration order.
const std::vector<std::string>& config_keys();

/// Throws ConfigError naming the offending key.
void validate(const PipelineConfig& config);

/// Defaults, then values from `doc` (nested objects are flattened by leaf
/// key), then `overrides`. The result is validated.
PipelineConfig config_from_json(const nlohmann::json& doc, const ConfigOverrides& overrides = {});

/// `path` may be empty (defaults only). An empty or whitespace-only file is
/// treated as an empty object.
PipelineConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

nlohmann::json to_json(const PipelineConfig& config);

}  // namespace claimgraph
