#include <doctest.h>

#include <atomic>

#include "claimgraph/tokens.hpp"

#include "../support/oracles.hpp"
#include "../support/stub_server.hpp"

using namespace claimgraph;
using nlohmann::json;

namespace {

FactCheckRecord claim(RecordId id, std::string text) {
  FactCheckRecord r;
  r.id = id;
  r.claim_text = std::move(text);
  return r;
}

TokenDoc doc(RecordId id, std::vector<std::string> tokens) { return {id, std::move(tokens)}; }

const TokenRatio* find_row(const TokenRatioTable& t, const std::string& token) {
  for (const auto& r : t.rows) {
    if (r.token == token) return &r;
  }
  return nullptr;
}

}  // namespace

TEST_SUITE("tokens") {
  TEST_CASE("supplied lemmas pass through lowercased") {
    auto r = claim(1, "ignored");
    r.noun_lemmas = std::vector<std::string>{"Vaccine", "moon"};
    const auto res = preprocess_tokens(std::vector<FactCheckRecord>{r}, nullptr, nullptr);
    REQUIRE(res.docs.size() == 1);
    CHECK(res.docs[0].tokens == std::vector<std::string>{"vaccine", "moon"});
    CHECK_FALSE(res.degraded);
  }

  TEST_CASE("missing clients are an error") {
    CHECK_THROWS_AS(preprocess_tokens(std::vector<FactCheckRecord>{claim(1, "texto")}, nullptr, nullptr), Error);
    auto en = claim(2, "texto");
    en.claim_text_en = "text";
    CHECK_THROWS_AS(preprocess_tokens(std::vector<FactCheckRecord>{en}, nullptr, nullptr), Error);
  }

  TEST_CASE("English text skips the translator") {
    auto r = claim(1, "la luna");
    r.claim_text_en = "The Moon landing";
    AlphaWordTagger tagger;
    const auto res = preprocess_tokens(std::vector<FactCheckRecord>{r}, nullptr, &tagger);
    CHECK(res.docs[0].tokens == std::vector<std::string>{"the", "moon", "landing"});
    CHECK(res.degraded);
  }

  TEST_CASE("HTTP translator and tagger against stubs") {
    oracle::StubServer stub;
    std::atomic<int> translate_calls{0};
    stub.server.Post("/translate", [&](const httplib::Request& req, httplib::Response& res) {
      ++translate_calls;
      const auto body = json::parse(req.body);
      CHECK(body["target"] == "en");
      json out = json::array();
      for (const auto& t : body["texts"]) out.push_back("moon " + t.get<std::string>());
      res.set_content(json{{"texts", out}}.dump(), "application/json");
    });
    stub.server.Post("/lemmas", [](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      json out = json::array();
      for (const auto& t : body["texts"]) out.push_back(json::array({"Moon", t.get<std::string>().substr(5)}));
      res.set_content(json{{"lemmas", out}}.dump(), "application/json");
    });
    stub.start();
    HttpTranslator translator(stub.url());
    HttpTagger tagger(stub.url());
    const auto res =
        preprocess_tokens(std::vector<FactCheckRecord>{claim(1, "luna"), claim(2, "lua")}, &translator, &tagger);
    REQUIRE(res.docs.size() == 2);
    CHECK(res.docs[0].tokens == std::vector<std::string>{"moon", "luna"});
    CHECK(res.docs[1].tokens == std::vector<std::string>{"moon", "lua"});
    CHECK(translate_calls == 1);
    CHECK_FALSE(res.degraded);
  }

  TEST_CASE("records without tokens are excluded") {
    auto r = claim(1, "x");
    r.noun_lemmas = std::vector<std::string>{};
    auto s = claim(2, "y");
    s.noun_lemmas = std::vector<std::string>{"cat"};
    const auto res = preprocess_tokens(std::vector<FactCheckRecord>{r, s}, nullptr, nullptr);
    CHECK(res.docs.size() == 1);
    CHECK(res.excluded_empty == 1);
  }

  TEST_CASE("token cache is reused") {
    oracle::TempDir tmp("tokcache");
    PreprocessOptions opts;
    opts.cache = tmp.path / "cache.jsonl";
    const std::vector<FactCheckRecord> rs{claim(1, "Moon landing"), claim(2, "Mars rover")};
    IdentityTranslator translator;
    AlphaWordTagger tagger;
    const auto first = preprocess_tokens(rs, &translator, &tagger, opts);
    CHECK(first.from_cache == 0);
    const auto second = preprocess_tokens(rs, &translator, &tagger, opts);
    CHECK(second.from_cache == 2);
    REQUIRE(second.docs.size() == 2);
    CHECK(second.docs[1].tokens == first.docs[1].tokens);
  }

  TEST_CASE("relative frequency ratio") {
    // "vaccine": 4 of 8 tokens in a, 1 of 4 in b.
    const std::vector<TokenDoc> a{doc(1, {"vaccine", "vaccine", "moon", "moon"}),
                                  doc(2, {"vaccine", "vaccine", "mars", "sun"})};
    const std::vector<TokenDoc> b{doc(3, {"vaccine", "moon", "moon", "tea"})};
    const auto t = relative_frequency_table(a, b, 1, "multi", "mono");
    const auto* v = find_row(t, "vaccine");
    REQUIRE(v != nullptr);
    CHECK(v->count_a == 4);
    CHECK(v->count_b == 1);
    CHECK(v->rel_freq_a == doctest::Approx(0.5));
    CHECK(v->rel_freq_b == doctest::Approx(0.25));
    CHECK(v->ratio == doctest::Approx(2.0));
    CHECK(find_row(t, "mars") == nullptr);  // absent from b
    CHECK(find_row(t, "tea") == nullptr);   // absent from a
    CHECK(t.rows.front().token == "vaccine");
    CHECK(t.label_a == "multi");
  }

  TEST_CASE("swapping conditions inverts the ratios") {
    const std::vector<TokenDoc> a{doc(1, {"x", "y", "y", "z"})};
    const std::vector<TokenDoc> b{doc(2, {"x", "x", "y", "z", "z", "z"})};
    const auto ab = relative_frequency_table(a, b, 1);
    const auto ba = relative_frequency_table(b, a, 1);
    REQUIRE(ab.rows.size() == 3);
    for (const auto& r : ab.rows) CHECK(find_row(ba, r.token)->ratio == doctest::Approx(1.0 / r.ratio));
  }

  TEST_CASE("minimum count applies to the pooled count") {
    const std::vector<TokenDoc> a{doc(1, {"x", "x", "y"})};
    const std::vector<TokenDoc> b{doc(2, {"x", "y"})};
    const auto t = relative_frequency_table(a, b, 3);
    CHECK(t.rows.size() == 1);
    CHECK(t.rows[0].token == "x");
    CHECK_THROWS_AS(relative_frequency_table(a, std::vector<TokenDoc>{}, 1), Error);
  }

  TEST_CASE("condition split") {
    auto mk = [](std::vector<RecordId> m, std::vector<std::optional<std::string>> l) {
      Cluster c;
      c.cluster_id = m.front();
      c.members = std::move(m);
      c.languages = std::move(l);
      return c;
    };
    const std::vector<Cluster> cs{mk({1}, {"en"}), mk({2, 3}, {"en", "en"}), mk({4, 5}, {"en", "hi"}),
                                  mk({6, 7}, {"en", std::nullopt})};
    const auto s = condition_split(cs);
    CHECK(s.singleton == std::set<RecordId>{1});
    CHECK(s.repeated == std::set<RecordId>{2, 3, 4, 5, 6, 7});
    CHECK(s.monolingual == std::set<RecordId>{2, 3});
    CHECK(s.multilingual == std::set<RecordId>{4, 5});
    const std::vector<TokenDoc> docs{doc(1, {"a"}), doc(4, {"b"}), doc(9, {"c"})};
    const auto picked = select_docs(docs, s.multilingual);
    REQUIRE(picked.size() == 1);
    CHECK(picked[0].record_id == 4);
  }
}
