#include <doctest.h>

#include <set>

#include <random>
#include <sstream>

#include "claimgraph/ingest.hpp"
#include "claimgraph/pipeline.hpp"

#include "../support/oracles.hpp"

using namespace claimgraph;

namespace {

RawRecord raw_with(std::optional<std::string> claim, std::optional<std::string> headline = std::nullopt,
                   std::optional<std::string> description = std::nullopt) {
  RawRecord r;
  r.claim_reviewed = std::move(claim);
  r.headline = std::move(headline);
  r.description = std::move(description);
  r.url = "https://example.org/x";
  r.review_date = Date(2021, 1, 1);
  return r;
}

FactCheckRecord rec(RecordId id, std::string text, std::string domain, Date date) {
  FactCheckRecord r;
  r.id = id;
  r.claim_text = std::move(text);
  r.domain = domain;
  r.url = "https://" + domain + "/" + std::to_string(id);
  r.review_date = date;
  return r;
}

}  // namespace

TEST_SUITE("ingest") {
  TEST_CASE("parse a full record") {
    std::istringstream in(
        R"({"claimReviewed": "X vaccine causes Y", "headline": "h", "description": "d", )"
        R"("url": "https://www.example.org/fact/1", "author": {"@type": "Organization", "name": "Desk"}, )"
        R"("datePublished": "2021-03-04", "reviewRating": {"alternateName": "False"}, "inLanguage": "en"})"
        "\n");
    const auto parsed = parse_records(in);
    REQUIRE(parsed.records.size() == 1);
    CHECK(parsed.errors.empty());
    const auto& r = parsed.records[0];
    CHECK(*r.claim_reviewed == "X vaccine causes Y");
    CHECK(r.url == "https://www.example.org/fact/1");
    CHECK(*r.author == "Desk");
    CHECK(r.review_date == Date(2021, 3, 4));
    CHECK(*r.rating == "False");
    CHECK(*r.language == "en");
  }

  TEST_CASE("missing url is a recorded error") {
    std::istringstream in(R"({"claimReviewed": "a", "datePublished": "2021-01-01"})"
                          "\n");
    const auto parsed = parse_records(in);
    CHECK(parsed.records.empty());
    REQUIRE(parsed.errors.size() == 1);
    CHECK(parsed.errors[0].line == 1);
    CHECK(parsed.errors[0].reason == "missing url");
  }

  TEST_CASE("three valid lines and one malformed") {
    std::istringstream in(
        R"({"claimReviewed": "a", "url": "https://a.org/1", "datePublished": "2021-01-01"})"
        "\n"
        R"({"claimReviewed": "b", "url": "https://a.org/2", "datePublished": "2021-01-02"})"
        "\n"
        "{broken\n"
        "\n"
        R"({"claimReviewed": "c", "url": "https://a.org/3", "datePublished": "2021-01-03"})"
        "\n");
    const auto parsed = parse_records(in);
    CHECK(parsed.records.size() == 3);
    REQUIRE(parsed.errors.size() == 1);
    CHECK(parsed.errors[0].line == 3);
    CHECK(parsed.record_lines == std::vector<std::size_t>{1, 2, 5});
  }

  TEST_CASE("length statistics") {
    std::vector<RawRecord> rs{raw_with(std::string(10, 'a')), raw_with(std::string(10, 'b'))};
    auto s = compute_length_stats(rs);
    CHECK(s.mean_chars == 10.0);
    CHECK(s.sd_chars == 0.0);
    rs = {raw_with(std::string(8, 'a')), raw_with(std::string(12, 'b'))};
    s = compute_length_stats(rs);
    CHECK(s.mean_chars == 10.0);
    CHECK(s.sd_chars == doctest::Approx(2.0).epsilon(1e-12));
  }

  TEST_CASE("length statistics on 1000 records match a two-pass oracle") {
    std::mt19937_64 gen(17);
    std::vector<RawRecord> rs;
    std::vector<long double> lengths;
    for (int i = 0; i < 1000; ++i) {
      const std::size_t n = 1 + gen() % 300;
      std::string s;
      for (std::size_t k = 0; k < n; ++k) {
        s += (k % 7 == 3) ? "\xc3\xa9" : "x";  // mixes two-byte code points
      }
      rs.push_back(raw_with(s));
      lengths.push_back(static_cast<long double>(n));
    }
    rs.push_back(raw_with(std::nullopt, "headline only"));  // not counted
    long double mean = 0;
    for (auto l : lengths) mean += l;
    mean /= lengths.size();
    long double ss = 0;
    for (auto l : lengths) ss += (l - mean) * (l - mean);
    const double sd = static_cast<double>(std::sqrt(ss / lengths.size()));
    const auto s = compute_length_stats(rs);
    CHECK(std::abs(s.mean_chars - static_cast<double>(mean)) <= 1e-9);
    CHECK(std::abs(s.sd_chars - sd) <= 1e-9);
  }

  TEST_CASE("claim extraction preference") {
    const LengthStats stats{20.0, 5.0};  // window upper bound 30 at k = 2
    CHECK(*extract_claim(raw_with("X vaccine causes Y"), stats, 2.0) == "X vaccine causes Y");
    CHECK(*extract_claim(raw_with("", "short headline", "short description"), stats, 2.0) == "short headline");
    CHECK(*extract_claim(raw_with("  ", std::string(40, 'h'), "short description"), stats, 2.0) ==
          "short description");
    CHECK_FALSE(extract_claim(raw_with(std::nullopt, std::string(31, 'h'), std::string(35, 'd')), stats, 2.0));
    // Two-sided window also drops very short fallbacks.
    CHECK_FALSE(extract_claim(raw_with(std::nullopt, "tiny"), stats, 2.0, true));
    CHECK(*extract_claim(raw_with(std::nullopt, "tiny"), stats, 2.0, false) == "tiny");
  }

  TEST_CASE("canonical domain") {
    CHECK(canonical_domain("https://www.example.org/fact/1") == "example.org");
    CHECK(canonical_domain("http://Factcheck.AFP.com:8080/a?b#c") == "factcheck.afp.com");
    auto resolver = [](std::string_view url) {
      return url == "https://short.ly/a" ? std::string("https://checker.com/x") : std::string(url);
    };
    CHECK(canonical_domain("https://short.ly/a", resolver) == "checker.com");
    CHECK_THROWS_AS(canonical_domain("not a url"), Error);
  }

  TEST_CASE("boilerplate n-gram detection") {
    std::vector<FactCheckRecord> rs;
    for (int i = 0; i < 10; ++i) {
      rs.push_back(rec(i + 1, (i < 9 ? "FACT CHECK : " : "") + std::string("claim number ") + "abcdefghij"[i],
                       "one.org", Date(2021, 1, 1)));
    }
    const auto hits = detect_boilerplate_ngrams(rs, 3, 3, 0.5);
    bool found = false;
    for (const auto& h : hits) {
      if (h.ngram == "FACT CHECK :") {
        found = true;
        CHECK(h.domain == "one.org");
        CHECK(h.share == doctest::Approx(0.9));
      }
    }
    CHECK(found);

    std::vector<FactCheckRecord> distinct{rec(1, "alpha beta gamma", "a.org", Date(2021, 1, 1)),
                                          rec(2, "delta epsilon zeta", "a.org", Date(2021, 1, 1))};
    CHECK(detect_boilerplate_ngrams(distinct, 3, 6, 0.6).empty());
  }

  TEST_CASE("boilerplate attribution across two domains") {
    std::vector<FactCheckRecord> rs;
    RecordId id = 1;
    const char* topics[] = {"moon", "sun", "tea", "war", "oil", "sea"};
    for (int i = 0; i < 6; ++i) {
      rs.push_back(rec(id++, std::string("Verificamos el dato: ") + topics[i] + " is fine", "a.org", Date(2021, 1, 1)));
      rs.push_back(rec(id++, std::string("Viral claim check: ") + topics[i] + " goes up", "b.org", Date(2021, 1, 1)));
    }
    // Punctuation is its own token, so grams read "dato :".
    const auto hits = detect_boilerplate_ngrams(rs, 3, 4, 0.9);
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& h : hits) got.emplace(h.domain, h.ngram);
    CHECK(got.contains({"a.org", "Verificamos el dato :"}));
    CHECK(got.contains({"b.org", "Viral claim check :"}));
    CHECK_FALSE(got.contains({"b.org", "Verificamos el dato :"}));
    CHECK_FALSE(got.contains({"a.org", "Viral claim check :"}));
  }

  TEST_CASE("strip boilerplate literals") {
    const std::vector<std::string> list{"WHATSAPP - CHECK:"};
    CHECK(strip_boilerplate("WHATSAPP - CHECK: moon is cheese", list) == "moon is cheese");
    CHECK(strip_boilerplate("moon is cheese", list) == "moon is cheese");
    CHECK(strip_boilerplate("WHATSAPP - CHECK:", list).empty());
    const auto bundled = load_removal_list(PipelineConfig{});
    CHECK(std::find(bundled.begin(), bundled.end(), "WHATSAPP - CHECK:") != bundled.end());
  }

  TEST_CASE("normalization for dedup") {
    CHECK(normalize_for_dedup("Hello, World!") == "helloworld");
    CHECK(normalize_for_dedup("\xc2\xa1H\xc3\xa9llo \xe2\x80\x94 W\xc3\xb6rld!") == "h\xc3\xa9llow\xc3\xb6rld");
    CHECK(normalize_for_dedup("...").empty());
  }

  TEST_CASE("exact dedup keeps the earlier record") {
    auto res = dedup_exact({rec(2, "Moon is cheese!", "a.org", Date(2021, 5, 2)),
                            rec(1, "moon is cheese", "b.org", Date(2021, 5, 1))});
    REQUIRE(res.kept.size() == 1);
    CHECK(res.kept[0].id == 1);
    REQUIRE(res.drops.size() == 1);
    CHECK(res.drops[0].dropped_id == 2);
    CHECK(*res.drops[0].survivor_id == 1);

    std::vector<FactCheckRecord> distinct{rec(1, "a", "x.org", Date(2021, 1, 1)), rec(2, "b", "x.org", Date(2021, 1, 1))};
    CHECK(dedup_exact(distinct).kept == distinct);
  }

  TEST_CASE("editorial dedup requires same source and similarity above threshold") {
    EmbeddingStore store(2);
    auto at = [](double cos) { return std::vector<float>{static_cast<float>(cos), static_cast<float>(std::sqrt(1 - cos * cos))}; };
    store.add(1, std::vector<float>{1.0f, 0.0f});
    store.add(2, at(0.97));
    store.add(3, at(0.93));

    auto run = [&](const std::string& dom2, RecordId second) {
      return dedup_editorial({rec(1, "a", "a.org", Date(2021, 1, 1)), rec(second, "b", dom2, Date(2021, 1, 5))}, store,
                             0.95);
    };
    auto same = run("a.org", 2);
    REQUIRE(same.drops.size() == 1);
    CHECK(same.drops[0].dropped_id == 2);
    CHECK(*same.drops[0].survivor_id == 1);
    CHECK(run("b.org", 2).drops.empty());
    CHECK(run("a.org", 3).drops.empty());

    // Same author on different domains counts as the same source.
    auto a = rec(1, "a", "a.org", Date(2021, 1, 1));
    auto b = rec(2, "b", "b.org", Date(2021, 1, 3));
    a.author = b.author = "Desk";
    CHECK(dedup_editorial({b, a}, store, 0.95).drops.size() == 1);
  }

  TEST_CASE("date range filter") {
    const DateRange range{Date(2020, 1, 1), Date(2022, 3, 31)};
    auto res = filter_date_range({rec(1, "a", "x.org", Date(2021, 1, 1)), rec(2, "b", "x.org", Date(2019, 12, 31))}, range);
    REQUIRE(res.kept.size() == 1);
    CHECK(res.kept[0].id == 1);
    REQUIRE(res.drops.size() == 1);
    CHECK(res.drops[0].dropped_id == 2);
    CHECK(filter_date_range({}, range).kept.empty());
  }

  TEST_CASE("ingest accounts for every record") {
    std::ostringstream text;
    text << R"({"claimReviewed": "WHATSAPP - CHECK: moon is cheese", "url": "https://a.org/1", "datePublished": "2021-01-01"})" << "\n";
    text << R"({"claimReviewed": "moon is cheese!", "url": "https://a.org/2", "datePublished": "2021-01-05"})" << "\n";
    text << R"({"claimReviewed": "WHATSAPP - CHECK:", "url": "https://a.org/3", "datePublished": "2021-01-05"})" << "\n";
    text << R"({"claimReviewed": "old", "url": "https://a.org/4", "datePublished": "2010-01-05"})" << "\n";
    text << R"({"claimReviewed": "bad url", "url": "::::", "datePublished": "2021-01-05"})" << "\n";
    text << R"({"claimReviewed": "", "headline": "fine headline", "url": "https://a.org/5", "datePublished": "2021-01-05"})" << "\n";
    text << R"({"url": "https://a.org/6"})" << "\n";
    std::istringstream in(text.str());
    const auto parsed = parse_records(in);
    const auto removal = load_removal_list(PipelineConfig{});
    const auto report = ingest(parsed, PipelineConfig{}, removal);
    CHECK(report.records.size() + report.drops.size() + report.parse_errors.size() == 7);
    std::map<std::string, int> reasons;
    for (const auto& d : report.drops) ++reasons[d.reason];
    CHECK(reasons["exact_duplicate"] == 1);
    CHECK(reasons["empty_after_boilerplate"] == 1);
    CHECK(reasons["out_of_date_range"] + reasons["date_out_of_range"] == 1);
    CHECK(reasons["bad_url"] == 1);
    CHECK(report.records.size() == 2);
  }

  TEST_CASE("records round-trip through JSONL") {
    oracle::TempDir tmp("ingest");
    auto a = rec(7, "text \"quoted\"", "a.org", Date(2021, 2, 3));
    a.language = "pt-BR";
    a.noun_lemmas = std::vector<std::string>{"vacina"};
    a.rating_raw = "Falso";
    const std::vector<FactCheckRecord> rs{a, rec(8, "other", "b.org", Date(2021, 2, 4))};
    write_records_jsonl(rs, tmp.path / "r.jsonl");
    CHECK(read_records_jsonl(tmp.path / "r.jsonl") == rs);
  }
}
