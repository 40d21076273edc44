#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "claimgraph/config.hpp"

namespace claimgraph {

enum class Stage { Ingest, Embed, Index, Cluster, Eval, Homophily, Temporal, Paths, Tokens, Report };

std::string_view to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view name);
/// Every stage in chain order.
const std::vector<Stage>& all_stages();

/// Line-delimited JSON log written to stderr and <workdir>/log.jsonl.
class Logger {
 public:
  Logger() = default;
  explicit Logger(const std::filesystem::path& file, bool echo = true);

  void log(std::string_view stage, std::string_view level, std::string_view event,
           nlohmann::json fields = nlohmann::json::object());
  void info(std::string_view stage, std::string_view event, nlohmann::json fields = nlohmann::json::object()) {
    log(stage, "info", event, std::move(fields));
  }
  void warn(std::string_view stage, std::string_view event, nlohmann::json fields = nlohmann::json::object()) {
    log(stage, "warn", event, std::move(fields));
  }

 private:
  std::ofstream file_;
  bool echo_ = false;
};

struct PipelineOptions {
  PipelineConfig config;
  std::filesystem::path workdir;
  bool force = false;
  std::filesystem::path input;    // raw JSONL for ingest
  std::filesystem::path vectors;  // CGV1 file for embed
  std::string embed_endpoint;     // used when `vectors` is empty
  std::string translator_endpoint;
  std::string tagger_endpoint;
};

/// Per-stage record of inputs, outputs, content hashes and timing, kept in
/// <workdir>/manifest.json.
class Manifest {
 public:
  explicit Manifest(std::filesystem::path workdir);

  void load();
  void save() const;

  /// True when the stage ran with this config hash and these input hashes,
  /// and its outputs still hash to the recorded values.
  [[nodiscard]] bool up_to_date(Stage stage, const std::string& config_hash,
                                const std::map<std::string, std::string>& inputs) const;
  void record(Stage stage, const std::string& config_hash, const std::map<std::string, std::string>& inputs,
              const std::vector<std::filesystem::path>& outputs, double seconds);
  void set_config(const nlohmann::json& config);

  [[nodiscard]] const nlohmann::json& document() const { return doc_; }

 private:
  std::filesystem::path workdir_;
  nlohmann::json doc_;
};

struct StageOutcome {
  Stage stage;
  bool skipped = false;  // up to date
  double seconds = 0.0;
};

/// Runs one stage, skipping it when up to date unless options.force. Throws
/// Error on missing inputs ("run `X` first") or stage failure; outputs of a
/// failed stage are removed.
StageOutcome run_stage(Stage stage, const PipelineOptions& options, Logger& logger);

/// Every stage in chain order.
std::vector<StageOutcome> run_all(const PipelineOptions& options, Logger& logger);

/// Bundled removal list unless config.boilerplate_list names a file.
std::vector<std::string> load_removal_list(const PipelineConfig& config);
std::vector<std::string> parse_removal_list(std::string_view text);

}  // namespace claimgraph
