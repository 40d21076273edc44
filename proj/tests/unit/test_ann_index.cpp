#include <doctest.h>

#include <bit>
#include <cmath>
#include <numbers>
#include <random>

#include "claimgraph/ann_index.hpp"

#include "../support/oracles.hpp"

using namespace claimgraph;

namespace {

// Query id 1 = e0; record 2 + i has similarity sims[i] to it and lies along its
// own orthogonal axis otherwise.
std::shared_ptr<EmbeddingStore> star_store(const std::vector<double>& sims) {
  const std::size_t d = sims.size() + 1;
  auto store = std::make_shared<EmbeddingStore>(d);
  std::vector<float> v(d, 0.0f);
  v[0] = 1.0f;
  store->add(1, v);
  for (std::size_t i = 0; i < sims.size(); ++i) {
    std::fill(v.begin(), v.end(), 0.0f);
    v[0] = static_cast<float>(sims[i]);
    v[i + 1] = static_cast<float>(std::sqrt(1.0 - sims[i] * sims[i]));
    store->add(2 + i, v);
  }
  return store;
}

IndexParams exhaustive_params() {
  IndexParams p;
  p.n_hyperplanes = 16;
  p.table_bits = 8;
  p.n_probe_bits = 8;
  return p;
}

}  // namespace

TEST_SUITE("ann_index") {
  TEST_CASE("same seed gives identical tables") {
    auto store = std::make_shared<const EmbeddingStore>(oracle::random_store(500, 24, 3));
    IndexParams p;
    const auto a = HyperplaneIndex::build(store, p);
    const auto b = HyperplaneIndex::build(store, p);
    REQUIRE(a.n_tables() == b.n_tables());
    CHECK(a.n_tables() == 10);
    for (std::size_t t = 0; t < a.n_tables(); ++t) {
      CHECK(a.buckets(t) == b.buckets(t));
    }
    p.seed = 43;
    const auto c = HyperplaneIndex::build(store, p);
    CHECK(std::vector<float>(a.hyperplanes().begin(), a.hyperplanes().end()) !=
          std::vector<float>(c.hyperplanes().begin(), c.hyperplanes().end()));
  }

  TEST_CASE("axis hyperplanes give sign-pattern signatures") {
    auto store = std::make_shared<EmbeddingStore>(4);
    store->add(1, std::vector<float>{1, -1, 1, -1});
    store->add(2, std::vector<float>{-1, -1, -1, 1});
    std::vector<float> planes(16, 0.0f);
    for (int i = 0; i < 4; ++i) planes[i * 4 + i] = 2.0f;
    IndexParams p;
    p.n_hyperplanes = 4;
    p.table_bits = 4;
    const auto idx = HyperplaneIndex::with_hyperplanes(store, p, planes);
    CHECK(idx.signature(0, std::size_t{0}) == 0b0101);
    CHECK(idx.signature(0, std::size_t{1}) == 0b1000);
    // Zero projection counts as the positive side.
    CHECK(idx.signature(0, std::vector<float>{0, 0, 0, 0}) == 0b1111);
  }

  TEST_CASE("last table takes the remaining bits") {
    auto store = std::make_shared<const EmbeddingStore>(oracle::random_store(60, 8, 4));
    IndexParams p;
    p.n_hyperplanes = 25;
    p.table_bits = 10;
    const auto idx = HyperplaneIndex::build(store, p);
    CHECK(idx.n_tables() == 3);
    CHECK(idx.bits_in_table(2) == 5);
    for (const auto& [sig, rows] : idx.buckets(2)) CHECK(sig < 32);
  }

  TEST_CASE("bit agreement rate matches 1 - theta / pi") {
    auto store = std::make_shared<EmbeddingStore>(8);
    const double theta = std::numbers::pi / 3;
    store->add(1, std::vector<float>{1, 0, 0, 0, 0, 0, 0, 0});
    store->add(2, std::vector<float>{static_cast<float>(std::cos(theta)), static_cast<float>(std::sin(theta)), 0, 0,
                                     0, 0, 0, 0});
    IndexParams p;
    p.n_hyperplanes = 2000;
    p.table_bits = 10;
    const auto idx = HyperplaneIndex::build(store, p);
    int agree = 0;
    for (std::size_t t = 0; t < idx.n_tables(); ++t) {
      agree += idx.bits_in_table(t) - std::popcount(idx.signature(t, std::size_t{0}) ^ idx.signature(t, std::size_t{1}));
    }
    const double rate = agree / 2000.0;
    CHECK(std::abs(rate - (1 - theta / std::numbers::pi)) < 0.05);
  }

  TEST_CASE("top-k edge cases") {
    auto store = std::make_shared<const EmbeddingStore>(oracle::random_store(5, 6, 5));
    const auto idx = HyperplaneIndex::build(store, IndexParams{});
    const auto all = idx.query_topk(1, 100);
    CHECK(all.size() == 4);
    for (const auto& h : all) CHECK(h.record_id != 1);
    for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i - 1].similarity >= all[i].similarity);
    CHECK(idx.query_topk(1, 2).size() == 2);
    CHECK_THROWS_AS(idx.query_topk(1, 0), Error);
    CHECK_THROWS_AS(idx.query_topk(99, 3), Error);

    auto single = std::make_shared<const EmbeddingStore>(oracle::random_store(1, 6, 5));
    CHECK(HyperplaneIndex::build(single, IndexParams{}).query_topk(1, 5).empty());
    CHECK_THROWS_AS(HyperplaneIndex::build(std::make_shared<const EmbeddingStore>(6), IndexParams{}), Error);
  }

  TEST_CASE("ties rank the smaller id first") {
    auto store = std::make_shared<EmbeddingStore>(2);
    store->add(5, std::vector<float>{1, 0});
    store->add(9, std::vector<float>{0, 1});
    store->add(3, std::vector<float>{0, 1});
    const auto hits = HyperplaneIndex::build(store, exhaustive_params()).query_topk(5, 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].record_id == 3);
    CHECK(hits[1].record_id == 9);
  }

  TEST_CASE("recall at 10 on 5000 clustered vectors") {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> normal;
    const std::size_t d = 32;
    auto store = std::make_shared<EmbeddingStore>(d);
    std::vector<double> center(d);
    std::vector<float> v(d);
    for (std::size_t g = 0; g < 500; ++g) {
      for (auto& x : center) x = normal(gen);
      for (std::size_t m = 0; m < 10; ++m) {
        for (std::size_t j = 0; j < d; ++j) v[j] = static_cast<float>(center[j] + 0.3 * normal(gen));
        store->add(g * 10 + m + 1, v);
      }
    }
    const auto idx = HyperplaneIndex::build(store, IndexParams{});
    std::size_t found = 0;
    std::size_t total = 0;
    for (std::size_t q = 0; q < store->size(); q += 5) {
      const RecordId id = store->id_at(q);
      auto truth = brute_force_threshold(*store, id, -1.0);
      truth.resize(10);
      const auto got = idx.query_topk(id, 10);
      for (const auto& t : truth) {
        for (const auto& h : got) {
          if (h.record_id == t.record_id) {
            ++found;
            break;
          }
        }
      }
      total += 10;
    }
    const double recall = static_cast<double>(found) / static_cast<double>(total);
    CHECK(recall >= 0.9);
  }

  TEST_CASE("exactly 17 neighbors above the threshold") {
    std::vector<double> sims;
    for (int i = 0; i < 17; ++i) sims.push_back(0.99 - 0.005 * i);
    for (int i = 0; i < 30; ++i) sims.push_back(0.5 - 0.01 * i);
    const auto idx = HyperplaneIndex::with_hyperplanes(
        star_store(sims), exhaustive_params(), std::vector<float>(16 * (sims.size() + 1), 1.0f));
    ThresholdTrace trace;
    const auto hits = idx.query_threshold(1, 0.875, 10, false, &trace);
    CHECK(hits.size() == 17);
    CHECK(trace.batch_sizes == std::vector<std::size_t>{10, 20});
    CHECK(trace.cut == 17);
    for (const auto& h : hits) CHECK(h.similarity >= 0.875);
  }

  TEST_CASE("doubling trace 10, 20, 40 with a cut at 37") {
    std::vector<double> sims;
    for (int i = 0; i < 37; ++i) sims.push_back(0.995 - 0.002 * i);
    for (int i = 0; i < 23; ++i) sims.push_back(0.6 - 0.01 * i);
    const auto store = star_store(sims);
    IndexParams p = exhaustive_params();
    const auto idx = HyperplaneIndex::build(store, p);
    ThresholdTrace trace;
    const auto hits = idx.query_threshold(1, 0.9, 10, false, &trace);
    CHECK(trace.batch_sizes == std::vector<std::size_t>{10, 20, 40});
    CHECK(trace.cut == 37);
    CHECK(hits.size() == 37);
  }

  TEST_CASE("strict and inclusive thresholds differ at equality") {
    auto store = std::make_shared<EmbeddingStore>(2);
    store->add(1, std::vector<float>{1, 0});
    store->add(2, std::vector<float>{1, 0});
    store->add(3, std::vector<float>{0, 1});
    const auto idx = HyperplaneIndex::build(store, exhaustive_params());
    CHECK(idx.query_threshold(1, 1.0, 1, false).size() == 1);
    CHECK(idx.query_threshold(1, 1.0, 1, true).empty());
    CHECK_THROWS_AS(idx.query_threshold(1, 0.0, 1), Error);
    CHECK_THROWS_AS(idx.query_threshold(1, 0.9, 0), Error);
  }

  TEST_CASE("brute force by hand") {
    auto store = std::make_shared<EmbeddingStore>(2);
    store->add(1, std::vector<float>{1, 0});
    store->add(2, std::vector<float>{3, 4});   // 0.6
    store->add(3, std::vector<float>{4, 3});   // 0.8
    store->add(4, std::vector<float>{-1, 0});  // -1
    const auto hits = brute_force_threshold(*store, 1, 0.6);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].record_id == 3);
    CHECK(hits[0].similarity == doctest::Approx(0.8));
    CHECK(hits[1].record_id == 2);
    // Float storage puts 3/5 slightly off 0.6; test the boundary at the stored value.
    CHECK(brute_force_threshold(*store, 1, hits[1].similarity, true).size() == 1);
    CHECK(brute_force_threshold(*store, 1, hits[1].similarity, false).size() == 2);
  }

  TEST_CASE("exhaustive probing agrees with brute force") {
    auto store = std::make_shared<const EmbeddingStore>(oracle::random_store(400, 6, 8));
    IndexParams p;
    p.n_hyperplanes = 20;
    p.table_bits = 10;
    p.n_probe_bits = 10;
    const auto idx = HyperplaneIndex::build(store, p);
    CHECK(idx.exhaustive());
    for (RecordId id = 1; id <= 400; id += 7) {
      CHECK(idx.query_threshold(id, 0.8, 10) == brute_force_threshold(*store, id, 0.8));
    }
  }

  TEST_CASE("no reported similarity exceeds the exact value") {
    auto store = std::make_shared<const EmbeddingStore>(oracle::random_store(300, 12, 9));
    const auto idx = HyperplaneIndex::build(store, IndexParams{});
    for (RecordId id = 1; id <= 300; id += 13) {
      for (const auto& h : idx.query_topk(id, 20)) {
        CHECK(h.similarity == doctest::Approx(oracle::dot(store->vector(id), store->vector(h.record_id))));
      }
    }
  }

  TEST_CASE("index file round-trip") {
    oracle::TempDir tmp("cgi");
    auto store = std::make_shared<const EmbeddingStore>(oracle::random_store(300, 12, 10));
    const auto idx = HyperplaneIndex::build(store, IndexParams{});
    write_index(idx, tmp.path / "i.cgi");
    const auto back = read_index(tmp.path / "i.cgi", store);
    CHECK(back.params() == idx.params());
    for (std::size_t t = 0; t < idx.n_tables(); ++t) CHECK(back.buckets(t) == idx.buckets(t));
    for (RecordId id = 1; id <= 300; id += 17) CHECK(back.query_topk(id, 5) == idx.query_topk(id, 5));

    const auto probed = read_index(tmp.path / "i.cgi", store, 10);
    CHECK(probed.exhaustive());

    auto other = std::make_shared<const EmbeddingStore>(oracle::random_store(300, 8, 10));
    CHECK_THROWS_AS(read_index(tmp.path / "i.cgi", other), Error);
  }

  TEST_CASE("bad parameters are rejected") {
    auto store = std::make_shared<const EmbeddingStore>(oracle::random_store(10, 4, 1));
    IndexParams p;
    p.table_bits = 0;
    CHECK_THROWS_AS(HyperplaneIndex::build(store, p), Error);
    p = IndexParams{};
    p.n_hyperplanes = 0;
    CHECK_THROWS_AS(HyperplaneIndex::build(store, p), Error);
    p = IndexParams{};
    CHECK_THROWS_AS(HyperplaneIndex::with_hyperplanes(store, p, std::vector<float>(3, 1.0f)), Error);
  }
}
