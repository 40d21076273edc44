#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "claimgraph/config.hpp"
#include "claimgraph/io.hpp"
#include "claimgraph/parallel.hpp"
#include "claimgraph/pipeline.hpp"
#include "claimgraph/synth.hpp"

namespace fs = std::filesystem;
using namespace claimgraph;

int main(int argc, char** argv) {
  CLI::App app{"claimgraph: repeated and multilingual claim analysis over fact-check corpora"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string workdir = "work";
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  bool force = false;
  bool quiet = false;
  std::string input;
  std::string vectors;
  std::string endpoint;
  std::string translator_endpoint;
  std::string tagger_endpoint;

  app.add_option("--out,--workdir", workdir, "Working directory for stage outputs")->capture_default_str();
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed, "RNG seed (overrides rng_seed)");
  app.add_option("--threads", threads, "Worker cap (0 = hardware concurrency)");
  app.add_flag("--force", force, "Rerun stages even when up to date");
  app.add_flag("-q,--quiet", quiet, "Do not echo log lines to stderr");
  app.add_option("--input", input, "Raw fact-check JSONL for ingest");
  app.add_option("--vectors", vectors, "CGV1 vector file for embed");
  app.add_option("--endpoint", endpoint, "Embedding service base URL for embed");
  app.add_option("--translator-endpoint", translator_endpoint, "Translation service base URL for tokens");
  app.add_option("--tagger-endpoint", tagger_endpoint, "Noun-lemma tagger base URL for tokens");

  std::map<std::string, std::string> key_values;
  auto* keys = app.add_option_group("config keys", "Every config key may be set as --key value");
  for (const auto& key : config_keys()) {
    keys->add_option("--" + key, key_values[key], "config: " + key);
  }

  std::map<std::string, CLI::App*> stage_cmds;
  for (Stage s : all_stages()) {
    const std::string name(to_string(s));
    stage_cmds[name] = app.add_subcommand(name, "Run the " + name + " stage");
  }
  auto* all_cmd = app.add_subcommand("all", "Run every stage in order");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with planted structure");
  std::string spec_path;
  std::optional<std::size_t> n_clusters;
  std::optional<std::size_t> n_records;
  synth_cmd->add_option("--spec", spec_path, "SynthSpec JSON (defaults when omitted)");
  synth_cmd->add_option("--n-clusters", n_clusters, "Override n_clusters");
  synth_cmd->add_option("--n-records", n_records, "Override n_records");

  CLI11_PARSE(app, argc, argv);

  try {
    if (threads > 0) {
      set_thread_count(threads);
    }

    if (synth_cmd->parsed()) {
      nlohmann::json doc = nlohmann::json::object();
      if (!spec_path.empty()) {
        doc = nlohmann::json::parse(io::read_file(spec_path));
      }
      SynthSpec spec = synth_spec_from_json(doc);
      if (seed) {
        spec.seed = *seed;
      }
      if (n_clusters) {
        spec.n_clusters = *n_clusters;
      }
      if (n_records) {
        spec.n_records = *n_records;
      }
      validate(spec);
      const auto corpus = generate(spec);
      write_corpus(corpus, spec, workdir);
      std::cout << "wrote " << corpus.records.size() << " records in " << corpus.n_clusters << " clusters to "
                << workdir << "\n";
      return 0;
    }

    ConfigOverrides overrides;
    for (const auto& [key, value] : key_values) {
      if (!value.empty()) {
        overrides[key] = value;
      }
    }
    if (seed) {
      overrides["rng_seed"] = std::to_string(*seed);
    }

    PipelineOptions options;
    options.config = load_config(config_path, overrides);
    options.workdir = workdir;
    options.force = force;
    options.input = input;
    options.vectors = vectors;
    options.embed_endpoint = endpoint;
    options.translator_endpoint = translator_endpoint;
    options.tagger_endpoint = tagger_endpoint;

    fs::create_directories(options.workdir);
    Logger logger(options.workdir / "log.jsonl", !quiet);

    if (all_cmd->parsed()) {
      for (const auto& outcome : run_all(options, logger)) {
        std::cout << to_string(outcome.stage) << ": " << (outcome.skipped ? "up to date" : "done") << "\n";
      }
      return 0;
    }
    for (const auto& [name, cmd] : stage_cmds) {
      if (cmd->parsed()) {
        const auto outcome = run_stage(*parse_stage(name), options, logger);
        std::cout << name << ": " << (outcome.skipped ? "up to date" : "done") << "\n";
      }
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
