#include <doctest.h>

#include <cmath>

#include "claimgraph/paths.hpp"

using namespace claimgraph;

namespace {

SimilarityGraph weighted(std::vector<RecordId> nodes, std::vector<Edge> edges) {
  SimilarityGraph g;
  g.nodes = std::move(nodes);
  g.edges = std::move(edges);
  return g;
}

// Points on the unit circle at angle step * i, ids 1..n.
EmbeddingStore arc_store(std::size_t n, double step) {
  EmbeddingStore s(2);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = step * static_cast<double>(i);
    s.add(i + 1, std::vector<float>{static_cast<float>(std::cos(t)), static_cast<float>(std::sin(t))});
  }
  return s;
}

SimilarityGraph chain_graph(const EmbeddingStore& s) {
  SimilarityGraph g;
  for (std::size_t i = 0; i < s.size(); ++i) g.nodes.push_back(s.id_at(i));
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    g.edges.push_back({s.id_at(i), s.id_at(i + 1), s.row_similarity(i, i + 1)});
  }
  return g;
}

}  // namespace

TEST_SUITE("paths") {
  TEST_CASE("two-member cluster") {
    const auto s = arc_store(2, 0.2);
    const auto g = chain_graph(s);
    const auto clusters = connected_components(g);
    const auto pair = most_dissimilar_pair(clusters[0], s);
    CHECK(pair.a == 1);
    CHECK(pair.b == 2);
    CHECK(pair.similarity == doctest::Approx(std::cos(0.2)).epsilon(1e-6));
    CHECK(shortest_path(Adjacency(g), 1, 2) == std::vector<RecordId>{1, 2});
  }

  TEST_CASE("widest angle wins") {
    EmbeddingStore s(2);
    s.add(1, std::vector<float>{1, 0});
    s.add(2, std::vector<float>{0.8f, 0.6f});
    s.add(3, std::vector<float>{0.6f, 0.8f});
    s.add(4, std::vector<float>{0.96f, 0.28f});
    Cluster c;
    c.members = {1, 2, 3, 4};
    const auto pair = most_dissimilar_pair(c, s);
    CHECK(pair.a == 1);
    CHECK(pair.b == 3);
    CHECK_FALSE(pair.sampled);
  }

  TEST_CASE("dissimilarity ties go to the smallest pair") {
    EmbeddingStore s(2);
    s.add(7, std::vector<float>{1, 0});
    s.add(3, std::vector<float>{0, 1});
    s.add(5, std::vector<float>{0, 1});
    Cluster c;
    c.members = {3, 5, 7};
    const auto pair = most_dissimilar_pair(c, s);
    CHECK(pair.a == 3);
    CHECK(pair.b == 7);
  }

  TEST_CASE("large clusters are scanned on a sample") {
    const auto s = arc_store(2100, 0.0005);
    Cluster c;
    for (RecordId id = 1; id <= 2100; ++id) c.members.push_back(id);
    const auto pair = most_dissimilar_pair(c, s, 2000, 3);
    CHECK(pair.sampled);
    CHECK(pair.a < pair.b);
    const auto again = most_dissimilar_pair(c, s, 2000, 3);
    CHECK(again.a == pair.a);
    CHECK(again.b == pair.b);
    CHECK_FALSE(most_dissimilar_pair(c, s, 2100, 3).sampled);
  }

  TEST_CASE("hop ties prefer stronger edges, then smaller ids") {
    // Two 2-hop routes from 1 to 4: via 2 (0.95 + 0.95) and via 3 (0.99 + 0.99).
    const Adjacency strong(weighted({1, 2, 3, 4}, {{1, 2, 0.95}, {1, 3, 0.99}, {2, 4, 0.95}, {3, 4, 0.99}}));
    CHECK(shortest_path(strong, 1, 4) == std::vector<RecordId>{1, 3, 4});
    const Adjacency even(weighted({1, 2, 3, 4}, {{1, 2, 0.9}, {1, 3, 0.9}, {2, 4, 0.9}, {3, 4, 0.9}}));
    CHECK(shortest_path(even, 1, 4) == std::vector<RecordId>{1, 2, 4});
  }

  TEST_CASE("adjacent endpoints and unreachable targets") {
    const Adjacency adj(weighted({1, 2, 3}, {{1, 2, 0.9}}));
    CHECK(shortest_path(adj, 2, 1) == std::vector<RecordId>{2, 1});
    CHECK(shortest_path(adj, 1, 1) == std::vector<RecordId>{1});
    CHECK_THROWS_AS(shortest_path(adj, 1, 3), Error);
  }

  TEST_CASE("five nodes: hops and distance disagree") {
    // 1-2-3-5 is three near-identical hops; 1-4-5 is two weaker ones.
    const Adjacency adj(
        weighted({1, 2, 3, 4, 5}, {{1, 2, 0.99}, {1, 4, 0.9}, {2, 3, 0.99}, {3, 5, 0.99}, {4, 5, 0.9}}));
    CHECK(shortest_path(adj, 1, 5, PathMode::Hops) == std::vector<RecordId>{1, 4, 5});
    CHECK(shortest_path(adj, 1, 5, PathMode::Distance) == std::vector<RecordId>{1, 2, 3, 5});
  }

  TEST_CASE("path language statistics") {
    using L = std::optional<std::string>;
    auto stats_of = [](std::vector<L> v) { return path_language_stats(v); };
    const auto one = stats_of({"en"});
    CHECK(one->n_unique_languages == 1);
    CHECK(one->n_language_switches == 0);
    const auto back = stats_of({"en", "hi", "en"});
    CHECK(back->n_unique_languages == 2);
    CHECK(back->n_language_switches == 2);
    const auto three = stats_of({"en", "hi", "hi", "fr"});
    CHECK(three->n_unique_languages == 3);
    CHECK(three->n_language_switches == 2);
    CHECK_FALSE(stats_of({"en", std::nullopt}).has_value());
  }

  TEST_CASE("ten-node chain across three languages") {
    const auto s = arc_store(10, 0.1);
    const auto g = chain_graph(s);
    auto clusters = connected_components(g);
    const char* langs[] = {"en", "en", "en", "hi", "hi", "hi", "es", "es", "es", "es"};
    for (auto* l : langs) clusters[0].languages.emplace_back(l);
    const auto ds = build_regression_dataset(clusters, Adjacency(g), s, PathOptions{});
    REQUIRE(ds.rows.size() == 1);
    const auto& row = ds.rows[0];
    CHECK(row.endpoint_a == 1);
    CHECK(row.endpoint_b == 10);
    CHECK(row.endpoint_similarity == doctest::Approx(std::cos(0.9)).epsilon(1e-6));
    CHECK(row.length == 9);
    CHECK(row.path.size() == 10);
    CHECK(row.n_unique_languages == 3);
    CHECK(row.n_language_switches == 2);
  }

  TEST_CASE("dataset over three clusters") {
    const auto s = arc_store(9, 0.05);
    // Clusters {1,2,3}, {4,5}, {6}, {7,8,9}.
    const auto g = weighted({1, 2, 3, 4, 5, 6, 7, 8, 9},
                            {{1, 2, 0.99}, {2, 3, 0.99}, {4, 5, 0.99}, {7, 8, 0.99}, {8, 9, 0.99}});
    auto clusters = connected_components(g);
    REQUIRE(clusters.size() == 4);
    clusters[0].languages = {"en", "en", "en"};
    clusters[1].languages = {"es", "pt"};
    clusters[2].languages = {"en"};
    clusters[3].languages = {"en", std::nullopt, "hi"};
    const auto ds = build_regression_dataset(clusters, Adjacency(g), s, PathOptions{});
    CHECK(ds.rows.size() == 2);
    CHECK(ds.dropped_missing_language == 1);
    CHECK(ds.rows[0].cluster_id == 1);
    CHECK(ds.rows[0].n_unique_languages == 1);
    CHECK(ds.rows[1].cluster_id == 4);
    CHECK(ds.rows[1].n_language_switches == 1);
  }

  TEST_CASE("regressions need ten rows") {
    std::vector<PathAnalysis> rows;
    for (std::size_t i = 0; i < 9; ++i) {
      rows.push_back({i + 1, 0, 0, 0.9 - 0.01 * static_cast<double>(i % 3), {}, 1 + i % 4, 1 + i % 2, i % 3, false});
    }
    CHECK_THROWS_AS(run_path_regressions(rows), Error);
    rows.push_back({10, 0, 0, 0.85, {}, 2, 2, 1, false});
    const auto m = run_path_regressions(rows);
    CHECK(m.unique_languages.coefficients.size() == 3);
    CHECK(m.switches.coefficients.size() == 3);
    CHECK(regression_to_json(m.switches).contains("coefficients"));
  }

  TEST_CASE("significance stars") {
    CHECK(significance_stars(0.005) == "***");
    CHECK(significance_stars(0.03) == "**");
    CHECK(significance_stars(0.07) == "*");
    CHECK(significance_stars(0.2).empty());
  }
}
