#include <doctest.h>

#include "claimgraph/config.hpp"
#include "claimgraph/io.hpp"

#include "../support/oracles.hpp"

using namespace claimgraph;

TEST_SUITE("config") {
  TEST_CASE("empty file gives defaults") {
    oracle::TempDir tmp("config");
    io::write_file(tmp.path / "empty.json", "  \n");
    const auto c = load_config(tmp.path / "empty.json");
    CHECK(c.edge_threshold == 0.875);
    CHECK(c == PipelineConfig{});
    CHECK(load_config("") == PipelineConfig{});
  }

  TEST_CASE("single override keeps the rest") {
    const auto c = load_config("", {{"edge_threshold", "0.8"}});
    CHECK(c.edge_threshold == 0.8);
    PipelineConfig expected;
    expected.edge_threshold = 0.8;
    CHECK(c == expected);
  }

  TEST_CASE("overrides win over the file") {
    oracle::TempDir tmp("config");
    io::write_file(tmp.path / "c.json", R"({"edge_threshold": 0.9, "min_token_count": 20})");
    const auto c = load_config(tmp.path / "c.json", {{"edge_threshold", "0.85"}});
    CHECK(c.edge_threshold == 0.85);
    CHECK(c.min_token_count == 20);
  }

  TEST_CASE("nested objects are flattened by leaf key") {
    const auto c = config_from_json(nlohmann::json::parse(R"({"graph": {"edge_threshold": 0.9}})"));
    CHECK(c.edge_threshold == 0.9);
  }

  TEST_CASE("out-of-range alpha names the key") {
    oracle::TempDir tmp("config");
    io::write_file(tmp.path / "c.json", R"({"alpha": 1.5})");
    try {
      (void)load_config(tmp.path / "c.json");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.key() == "alpha");
      CHECK(std::string(e.what()).find("alpha") != std::string::npos);
    }
  }

  TEST_CASE("unknown keys and bad values are rejected") {
    CHECK_THROWS_AS(load_config("", {{"edge_treshold", "0.8"}}), ConfigError);
    CHECK_THROWS_AS(load_config("", {{"edge_threshold", "high"}}), ConfigError);
    CHECK_THROWS_AS(load_config("", {{"near_dup_threshold", "0"}}), ConfigError);
    CHECK_THROWS_AS(load_config("", {{"table_bits", "0"}}), ConfigError);
  }

  TEST_CASE("every key round-trips through to_json") {
    const auto doc = to_json(PipelineConfig{});
    for (const auto& key : config_keys()) {
      CHECK_MESSAGE(doc.contains(key), key);
    }
    CHECK(config_from_json(doc) == PipelineConfig{});
  }

  TEST_CASE("list, enum and date overrides parse") {
    const auto c = load_config("", {{"sweep_thresholds", "0.8,0.9"},
                                    {"path_mode", "distance"},
                                    {"date_range", "2021-01-01..2021-12-31"},
                                    {"strict_threshold", "true"}});
    CHECK(c.sweep_thresholds == std::vector<double>{0.8, 0.9});
    CHECK(c.path_mode == PathMode::Distance);
    CHECK(c.date_range.start == Date(2021, 1, 1));
    CHECK(c.date_range.end == Date(2021, 12, 31));
    CHECK(c.strict_threshold);
  }
}
