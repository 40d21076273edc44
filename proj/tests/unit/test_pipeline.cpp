#include <doctest.h>

#include <array>
#include <cstdio>
#include <set>
#include <sys/wait.h>

#include "claimgraph/io.hpp"
#include "claimgraph/pipeline.hpp"

#include "../support/oracles.hpp"

using namespace claimgraph;
namespace fs = std::filesystem;

namespace {

const fs::path kData = CLAIMGRAPH_DATA_DIR;

PipelineOptions corpus_options(const fs::path& workdir) {
  PipelineOptions o;
  o.workdir = workdir;
  o.input = kData / "records.jsonl";
  o.vectors = kData / "vectors.cgv";
  return o;
}

struct CliResult {
  int exit_code;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + CLAIMGRAPH_CLI_PATH + "\" " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  while (auto n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("stage names") {
    CHECK(all_stages().size() == 10);
    for (Stage s : all_stages()) CHECK(parse_stage(to_string(s)) == s);
    CHECK_FALSE(parse_stage("bogus").has_value());
  }

  TEST_CASE("removal list parsing") {
    const auto list = parse_removal_list("# comment\nFACT CHECK:  \n\n  WHATSAPP - CHECK:\n");
    CHECK(list == std::vector<std::string>{"FACT CHECK:", "  WHATSAPP - CHECK:"});
    CHECK_FALSE(load_removal_list(PipelineConfig{}).empty());
  }

  TEST_CASE("a stage without its input names the missing producer") {
    oracle::TempDir tmp("pipe");
    Logger log;
    CHECK_THROWS_WITH_AS(run_stage(Stage::Cluster, corpus_options(tmp.path), log),
                         doctest::Contains("run `embed` first"), Error);
  }

  TEST_CASE("reruns are skipped until something changes") {
    oracle::TempDir tmp("pipe");
    Logger log;
    auto opts = corpus_options(tmp.path);
    CHECK_FALSE(run_stage(Stage::Ingest, opts, log).skipped);
    CHECK(run_stage(Stage::Ingest, opts, log).skipped);
    opts.force = true;
    CHECK_FALSE(run_stage(Stage::Ingest, opts, log).skipped);
    opts.force = false;
    opts.config.near_dup_threshold = 0.97;
    CHECK_FALSE(run_stage(Stage::Ingest, opts, log).skipped);

    // Editing an output invalidates the stage.
    io::write_file(tmp.path / "ingest_summary.json", "{}");
    CHECK_FALSE(run_stage(Stage::Ingest, opts, log).skipped);
  }

  TEST_CASE("full run records every artifact in the manifest") {
    oracle::TempDir tmp("pipe");
    Logger log(tmp.path / "log.jsonl", false);
    const auto outcomes = run_all(corpus_options(tmp.path), log);
    CHECK(outcomes.size() == 10);
    Manifest m(tmp.path);
    m.load();
    const auto& stages = m.document().at("stages");
    std::set<std::string> listed;
    for (Stage s : all_stages()) {
      REQUIRE_MESSAGE(stages.contains(std::string(to_string(s))), to_string(s));
      for (const auto& [file, hash] : stages.at(std::string(to_string(s))).at("outputs").items()) {
        CHECK_MESSAGE(fs::exists(tmp.path / file), file);
        CHECK(hash.get<std::string>() == io::file_hash(tmp.path / file));
        listed.insert(file);
      }
    }
    for (const auto& entry : fs::recursive_directory_iterator(tmp.path)) {
      if (!entry.is_regular_file()) continue;
      const auto rel = fs::relative(entry.path(), tmp.path).generic_string();
      if (rel == "manifest.json" || rel == "log.jsonl") continue;
      // The token cache outlives failed runs on purpose, so it is not a stage output.
      if (rel.starts_with("tokens_cache_")) continue;
      CHECK_MESSAGE(listed.contains(rel), rel);
    }
    for (const auto& o : run_all(corpus_options(tmp.path), log)) CHECK(o.skipped);
  }

  TEST_CASE("a failed stage leaves no outputs behind") {
    oracle::TempDir tmp("pipe");
    Logger log;
    auto opts = corpus_options(tmp.path);
    run_stage(Stage::Ingest, opts, log);
    REQUIRE(fs::exists(tmp.path / "ingested.jsonl"));
    io::write_file(tmp.path / "bad.jsonl", "not json\n{also not\n");
    opts.input = tmp.path / "bad.jsonl";
    CHECK_THROWS_WITH_AS(run_stage(Stage::Ingest, opts, log), doctest::Contains("no records survived"), Error);
    CHECK_FALSE(fs::exists(tmp.path / "ingested.jsonl"));
    CHECK_FALSE(fs::exists(tmp.path / "ingest_summary.json"));
  }

  TEST_CASE("CLI exit codes and messages") {
    oracle::TempDir tmp("cli");
    const std::string out = " --out \"" + tmp.path.string() + "\"";
    const auto missing = run_cli("cluster" + out);
    CHECK(missing.exit_code == 1);
    CHECK(missing.output.find("run `embed` first") != std::string::npos);

    const auto bad_config = run_cli("ingest --alpha 2" + out);
    CHECK(bad_config.exit_code == 2);
    CHECK(bad_config.output.find("alpha") != std::string::npos);

    const std::string data = " --input \"" + (kData / "records.jsonl").string() + "\" -q";
    const auto first = run_cli("ingest" + out + data);
    CHECK(first.exit_code == 0);
    CHECK(first.output.find("ingest: done") != std::string::npos);
    const auto second = run_cli("ingest" + out + data);
    CHECK(second.output.find("ingest: up to date") != std::string::npos);
    const auto forced = run_cli("ingest --force" + out + data);
    CHECK(forced.output.find("ingest: done") != std::string::npos);
  }
}
