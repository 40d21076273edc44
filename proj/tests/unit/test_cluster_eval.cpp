#include <doctest.h>

#include <cmath>

#include "claimgraph/cluster_eval.hpp"
#include "claimgraph/synth.hpp"

#include "../support/oracles.hpp"

using namespace claimgraph;

namespace {

Cluster make_cluster(std::vector<RecordId> members, std::vector<std::optional<std::string>> verdicts = {}) {
  Cluster c;
  c.cluster_id = members.front();
  c.members = std::move(members);
  c.verdicts = std::move(verdicts);
  return c;
}

FactCheckRecord rated(RecordId id, std::string rating) {
  FactCheckRecord r;
  r.id = id;
  r.rating_raw = std::move(rating);
  return r;
}

std::vector<double> oracle_centroid(const Cluster& c, const EmbeddingStore& s) {
  std::vector<double> m(s.dimension(), 0.0);
  for (RecordId id : c.members) {
    const auto v = s.vector(id);
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += v[j];
  }
  double n2 = 0;
  for (double x : m) n2 += x * x;
  for (double& x : m) x /= std::sqrt(n2);
  return m;
}

}  // namespace

TEST_SUITE("cluster_eval") {
  TEST_CASE("variance and centroid by hand") {
    EmbeddingStore s(2);
    s.add(1, std::vector<float>{1, 0});
    s.add(2, std::vector<float>{0.6f, 0.8f});
    s.add(3, std::vector<float>{0, 1});
    const auto c = make_cluster({1, 2, 3});
    // Pair distances 0.4, 1.0, 0.2: mean 0.5333, population variance 0.115556.
    CHECK(intra_cluster_variance(c, s) == doctest::Approx(0.1155556).epsilon(1e-5));
    const auto centroid = cluster_centroid(c, s);
    CHECK(centroid[0] == doctest::Approx(0.66436).epsilon(1e-4));
    CHECK(centroid[1] == doctest::Approx(0.74741).epsilon(1e-4));
    CHECK_THROWS_AS(intra_cluster_variance(make_cluster({1}), s), Error);
    CHECK(intra_cluster_variance(make_cluster({1, 2}), s) == doctest::Approx(0.0).epsilon(1e-7));
  }

  TEST_CASE("inter-cluster distance against the exhaustive mean") {
    const auto store = oracle::random_store(400, 6, 31);
    std::vector<Cluster> clusters;
    for (RecordId id = 1; id <= 400; id += 4) clusters.push_back(make_cluster({id, id + 1, id + 2, id + 3}));
    std::vector<std::vector<double>> cents;
    for (const auto& c : clusters) cents.push_back(oracle_centroid(c, store));
    double exact = 0;
    for (std::size_t i = 0; i < cents.size(); ++i) {
      double sum = 0;
      for (std::size_t j = 0; j < cents.size(); ++j) {
        if (i == j) continue;
        double dot = 0;
        for (std::size_t k = 0; k < 6; ++k) dot += cents[i][k] * cents[j][k];
        sum += 1 - dot;
      }
      exact += sum / static_cast<double>(cents.size() - 1);
    }
    exact /= static_cast<double>(cents.size());

    CHECK(inter_cluster_distance(clusters, store, 1000, 1) == doctest::Approx(exact).epsilon(1e-9));

    std::vector<double> est;
    for (std::uint64_t seed = 0; seed < 30; ++seed) est.push_back(inter_cluster_distance(clusters, store, 10, seed));
    double mean = 0;
    for (double e : est) mean += e;
    mean /= static_cast<double>(est.size());
    double var = 0;
    for (double e : est) var += (e - mean) * (e - mean);
    const double se = std::sqrt(var / static_cast<double>(est.size() - 1) / static_cast<double>(est.size()));
    CHECK(std::abs(mean - exact) <= 3 * se);
  }

  TEST_CASE("verdict normalization and frequency map") {
    CHECK(normalize_verdict("FALSE!") == "false");
    CHECK(normalize_verdict("Pants on Fire") == "pantsonfire");
    std::vector<FactCheckRecord> rs;
    RecordId id = 1;
    for (int i = 0; i < 4; ++i) rs.push_back(rated(id++, "FALSE!"));
    for (int i = 0; i < 3; ++i) rs.push_back(rated(id++, "False"));
    for (int i = 0; i < 2; ++i) rs.push_back(rated(id++, "Pants on Fire"));
    for (int i = 0; i < 20; ++i) rs.push_back(rated(id++, "Misleading"));
    for (int i = 0; i < 6; ++i) rs.push_back(rated(id++, "Correct"));
    const auto table = parse_verdict_table(
        R"({"false": "false", "Pants on fire": "false", "misleading": "mostly-false"})");
    const auto map = build_verdict_map(rs, 5, table);
    CHECK(map.lookup("false.") == Verdict::False);
    CHECK(map.lookup("MISLEADING") == Verdict::MostlyFalse);
    CHECK_FALSE(map.lookup("Pants on Fire").has_value());  // below min_count
    CHECK_FALSE(map.lookup("Correct").has_value());        // not in the table
    REQUIRE(map.frequencies.size() == 4);
    CHECK(map.frequencies[0].normalized == "misleading");
    CHECK(map.frequencies[0].count == 20);
    CHECK(map.frequencies[1].normalized == "false");
    CHECK(map.frequencies[1].count == 7);
    CHECK(map.frequencies[3].normalized == "pantsonfire");
    CHECK_FALSE(map.frequencies[3].label.has_value());
    CHECK_THROWS_AS(parse_verdict_table(R"({"x": "maybe"})"), Error);
  }

  TEST_CASE("modal consistency") {
    const auto table = parse_verdict_table(
        R"({"false": "false", "true": "true", "misleading": "mostly-false", "accurate": "mostly-true"})");
    std::vector<FactCheckRecord> rs;
    for (const char* v : {"false", "true", "misleading", "accurate"}) {
      for (int i = 0; i < 3; ++i) rs.push_back(rated(rs.size() + 1, v));
    }
    const auto map = build_verdict_map(rs, 1, table);
    const std::vector<Cluster> clusters{
        make_cluster({1, 2, 3}, {"false", "False", "true"}),
        make_cluster({4, 5, 6}, {"true", "TRUE", std::nullopt}),
        make_cluster({7}, {"false"}),
        make_cluster({8, 9}, {"false", "unmapped"}),
    };
    const auto c4 = modal_consistency(clusters, map, 4);
    CHECK(c4.n_clusters == 2);
    CHECK(c4.weighted == doctest::Approx(0.8));
    CHECK(c4.unweighted == doctest::Approx((2.0 / 3 + 1) / 2));

    const std::vector<Cluster> mixed{make_cluster({1, 2, 3}, {"false", "misleading", "accurate"})};
    CHECK(modal_consistency(mixed, map, 4).weighted == doctest::Approx(1.0 / 3));
    CHECK(modal_consistency(mixed, map, 2).weighted == doctest::Approx(2.0 / 3));
    CHECK_THROWS_AS(modal_consistency(mixed, map, 3), Error);
    CHECK_THROWS_AS(modal_consistency(std::vector<Cluster>{make_cluster({7}, {"false"})}, map, 2), Error);
  }

  TEST_CASE("evaluation of a planted clustering") {
    SynthSpec spec;
    spec.n_clusters = 100;
    spec.dimension = 32;
    spec.intra_similarity = 0.9;
    const auto corpus = generate(spec);
    const auto store = std::make_shared<const EmbeddingStore>(corpus.vectors);
    const RecordTable records(oracle::records_from_synth(corpus));
    const auto map = build_verdict_map(records.records(), 1, VerdictTable{{"false", Verdict::False}});
    IndexParams p;
    p.n_probe_bits = p.table_bits;
    const auto idx = HyperplaneIndex::build(store, p);
    const std::vector<double> thresholds{0.8, 0.9};
    const auto reports = threshold_sweep(idx, thresholds, records, map, EvalOptions{});
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].threshold == 0.8);
    CHECK(reports[0].n_clusters <= reports[1].n_clusters);
    CHECK(reports[0].coverage >= 0.0);
    CHECK(reports[0].coverage <= 1.0);
  }
}
