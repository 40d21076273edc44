#include "claimgraph/tokens.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "claimgraph/text.hpp"

namespace claimgraph {

using nlohmann::json;

std::vector<std::vector<std::string>> AlphaWordTagger::noun_lemmas(
    const std::vector<std::string>& texts) {
  std::vector<std::vector<std::string>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    out.push_back(text::alpha_words(t));
  }
  return out;
}

HttpTranslator::HttpTranslator(std::string endpoint, http::RetryPolicy policy)
    : endpoint_(std::move(endpoint)), policy_(std::move(policy)) {}

std::vector<std::string> HttpTranslator::translate(const std::vector<std::string>& texts) {
  const json response =
      http::post_json(endpoint_, "/translate", {{"texts", texts}, {"target", "en"}}, policy_);
  if (!response.is_object() || !response.contains("texts") || !response["texts"].is_array()) {
    throw Error("malformed translation response");
  }
  auto out = response["texts"].get<std::vector<std::string>>();
  if (out.size() != texts.size()) {
    throw Error("translation count mismatch");
  }
  return out;
}

HttpTagger::HttpTagger(std::string endpoint, http::RetryPolicy policy)
    : endpoint_(std::move(endpoint)), policy_(std::move(policy)) {}

std::vector<std::vector<std::string>> HttpTagger::noun_lemmas(const std::vector<std::string>& texts) {
  const json response = http::post_json(endpoint_, "/lemmas", {{"texts", texts}}, policy_);
  if (!response.is_object() || !response.contains("lemmas") || !response["lemmas"].is_array()) {
    throw Error("malformed lemma response");
  }
  auto out = response["lemmas"].get<std::vector<std::vector<std::string>>>();
  if (out.size() != texts.size()) {
    throw Error("lemma count mismatch");
  }
  return out;
}

namespace {

std::vector<std::string> lowercase_all(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    std::string folded = text::fold_case(text::collapse_whitespace(t));
    if (!folded.empty()) {
      out.push_back(std::move(folded));
    }
  }
  return out;
}

std::unordered_map<RecordId, std::vector<std::string>> read_cache(const std::filesystem::path& path) {
  std::unordered_map<RecordId, std::vector<std::string>> cache;
  if (path.empty() || !std::filesystem::exists(path)) {
    return cache;
  }
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    json entry = json::parse(line, nullptr, false);
    if (entry.is_discarded() || !entry.is_object() || !entry.contains("id") ||
        !entry.contains("tokens")) {
      continue;  // torn line from an interrupted run
    }
    cache[entry["id"].get<RecordId>()] = entry["tokens"].get<std::vector<std::string>>();
  }
  return cache;
}

}  // namespace

PreprocessResult preprocess_tokens(std::span<const FactCheckRecord> records, Translator* translator,
                                   Tagger* tagger, const PreprocessOptions& options) {
  PreprocessResult result;
  auto cache = read_cache(options.cache);
  std::ofstream cache_out;
  if (!options.cache.empty()) {
    cache_out.open(options.cache, std::ios::app);
  }

  std::vector<std::optional<std::vector<std::string>>> tokens(records.size());
  std::vector<std::size_t> pending;  // records that need the tagger
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.noun_lemmas) {
      tokens[i] = lowercase_all(*r.noun_lemmas);
    } else if (auto it = cache.find(r.id); it != cache.end()) {
      tokens[i] = it->second;
      ++result.from_cache;
    } else {
      if (tagger == nullptr) {
        throw Error("record " + std::to_string(r.id) +
                    " has no noun lemmas and no tagger is configured");
      }
      if (!r.claim_text_en && translator == nullptr) {
        throw Error("record " + std::to_string(r.id) +
                    " has no English text and no translator is configured");
      }
      pending.push_back(i);
    }
  }

  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  for (std::size_t start = 0; start < pending.size(); start += batch) {
    const std::size_t end = std::min(pending.size(), start + batch);
    try {
      std::vector<std::string> english(end - start);
      std::vector<std::string> to_translate;
      std::vector<std::size_t> translate_slots;
      for (std::size_t k = start; k < end; ++k) {
        const auto& r = records[pending[k]];
        if (r.claim_text_en) {
          english[k - start] = *r.claim_text_en;
        } else {
          to_translate.push_back(r.claim_text);
          translate_slots.push_back(k - start);
        }
      }
      if (!to_translate.empty()) {
        const auto translated = translator->translate(to_translate);
        for (std::size_t t = 0; t < translated.size(); ++t) {
          english[translate_slots[t]] = translated[t];
        }
        result.degraded = result.degraded || translator->degraded();
      }
      const auto lemmas = tagger->noun_lemmas(english);
      result.degraded = result.degraded || tagger->degraded();
      for (std::size_t k = start; k < end; ++k) {
        const RecordId id = records[pending[k]].id;
        tokens[pending[k]] = lowercase_all(lemmas[k - start]);
        if (cache_out.is_open()) {
          cache_out << json{{"id", id}, {"tokens", *tokens[pending[k]]}}.dump() << '\n';
        }
      }
    } catch (const Error&) {
      result.failed += end - start;
    }
  }
  if (cache_out.is_open()) {
    cache_out.flush();
  }

  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!tokens[i]) {
      continue;
    }
    if (tokens[i]->empty()) {
      ++result.excluded_empty;
      continue;
    }
    result.docs.push_back({records[i].id, std::move(*tokens[i])});
  }
  return result;
}

TokenRatioTable relative_frequency_table(std::span<const TokenDoc> docs_a,
                                         std::span<const TokenDoc> docs_b,
                                         std::size_t min_token_count, std::string label_a,
                                         std::string label_b) {
  auto count = [](std::span<const TokenDoc> docs) {
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    for (const auto& d : docs) {
      for (const auto& t : d.tokens) {
        ++counts[t];
        ++total;
      }
    }
    return std::pair{counts, total};
  };
  const auto [counts_a, total_a] = count(docs_a);
  const auto [counts_b, total_b] = count(docs_b);
  if (total_a == 0 || total_b == 0) {
    throw Error("relative frequencies need tokens in both conditions");
  }
  TokenRatioTable table{std::move(label_a), std::move(label_b), min_token_count, {}};
  for (const auto& [token, ca] : counts_a) {
    auto it = counts_b.find(token);
    if (it == counts_b.end() || ca + it->second < min_token_count) {
      continue;
    }
    const double ra = static_cast<double>(ca) / static_cast<double>(total_a);
    const double rb = static_cast<double>(it->second) / static_cast<double>(total_b);
    table.rows.push_back({token, ca, it->second, ra, rb, ra / rb});
  }
  std::sort(table.rows.begin(), table.rows.end(), [](const TokenRatio& x, const TokenRatio& y) {
    return x.ratio != y.ratio ? x.ratio > y.ratio : x.token < y.token;
  });
  return table;
}

ConditionSets condition_split(std::span<const Cluster> clusters) {
  ConditionSets sets;
  for (const auto& c : clusters) {
    if (c.size() == 1) {
      sets.singleton.insert(c.members[0]);
      continue;
    }
    sets.repeated.insert(c.members.begin(), c.members.end());
    if (c.languages.size() != c.members.size()) {
      throw Error("cluster " + std::to_string(c.cluster_id) + " has no attached languages");
    }
    std::set<std::string> langs;
    std::size_t with_language = 0;
    for (const auto& l : c.languages) {
      if (l && !l->empty()) {
        langs.insert(*l);
        ++with_language;
      }
    }
    if (with_language < 2) {
      continue;
    }
    auto& target = langs.size() == 1 ? sets.monolingual : sets.multilingual;
    target.insert(c.members.begin(), c.members.end());
  }
  return sets;
}

std::vector<TokenDoc> select_docs(std::span<const TokenDoc> docs, const std::set<RecordId>& ids) {
  std::vector<TokenDoc> out;
  for (const auto& d : docs) {
    if (ids.contains(d.record_id)) {
      out.push_back(d);
    }
  }
  return out;
}

}  // namespace claimgraph
