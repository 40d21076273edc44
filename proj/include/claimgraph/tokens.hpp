#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "claimgraph/http.hpp"
#include "claimgraph/ingest.hpp"
#include "claimgraph/simgraph.hpp"

namespace claimgraph {

struct TokenDoc {
  RecordId record_id;
  std::vector<std::string> tokens;  // lowercase noun lemmas
};

/// Translates texts to English, one output per input.
class Translator {
 public:
  virtual ~Translator() = default;
  virtual std::vector<std::string> translate(const std::vector<std::string>& texts) = 0;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual bool degraded() const { return false; }
};

/// Extracts noun lemmas, one list per input.
class Tagger {
 public:
  virtual ~Tagger() = default;
  virtual std::vector<std::vector<std::string>> noun_lemmas(const std::vector<std::string>& texts) = 0;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual bool degraded() const { return false; }
};

/// Degraded mode: returns texts unchanged.
class IdentityTranslator final : public Translator {
 public:
  std::vector<std::string> translate(const std::vector<std::string>& texts) override { return texts; }
  [[nodiscard]] std::string name() const override { return "identity"; }
  [[nodiscard]] bool degraded() const override { return true; }
};

/// Degraded mode: every lowercased alphabetic word, no POS filter.
class AlphaWordTagger final : public Tagger {
 public:
  std::vector<std::vector<std::string>> noun_lemmas(const std::vector<std::string>& texts) override;
  [[nodiscard]] std::string name() const override { return "alpha-words"; }
  [[nodiscard]] bool degraded() const override { return true; }
};

/// POST /translate {"texts": [...], "target": "en"} -> {"texts": [...]}.
class HttpTranslator final : public Translator {
 public:
  explicit HttpTranslator(std::string endpoint, http::RetryPolicy policy = {});
  std::vector<std::string> translate(const std::vector<std::string>& texts) override;
  [[nodiscard]] std::string name() const override { return "http:" + endpoint_; }

 private:
  std::string endpoint_;
  http::RetryPolicy policy_;
};

/// POST /lemmas {"texts": [...]} -> {"lemmas": [[...], ...]}.
class HttpTagger final : public Tagger {
 public:
  explicit HttpTagger(std::string endpoint, http::RetryPolicy policy = {});
  std::vector<std::vector<std::string>> noun_lemmas(const std::vector<std::string>& texts) override;
  [[nodiscard]] std::string name() const override { return "http:" + endpoint_; }

 private:
  std::string endpoint_;
  http::RetryPolicy policy_;
};

struct PreprocessOptions {
  std::size_t batch_size = 64;
  /// JSONL cache of {"id", "tokens"} keyed by record id. Empty disables it.
  std::filesystem::path cache;
};

struct PreprocessResult {
  std::vector<TokenDoc> docs;      // record order
  std::size_t excluded_empty = 0;  // no tokens left
  std::size_t failed = 0;          // client failure for the batch
  std::size_t from_cache = 0;
  bool degraded = false;           // a degraded client produced tokens
};

/// Pre-supplied noun lemmas pass through verbatim (lowercased). Otherwise
/// claim_text_en, or the translator's output, goes through the tagger.
/// Throws when a record needs a client that is not configured.
PreprocessResult preprocess_tokens(std::span<const FactCheckRecord> records, Translator* translator,
                                   Tagger* tagger, const PreprocessOptions& options = {});

struct TokenRatio {
  std::string token;
  std::size_t count_a;
  std::size_t count_b;
  double rel_freq_a;
  double rel_freq_b;
  double ratio;  // rel_freq_a / rel_freq_b
};

struct TokenRatioTable {
  std::string label_a;
  std::string label_b;
  std::size_t min_token_count = 0;  // applied to count_a + count_b
  std::vector<TokenRatio> rows;     // ratio descending, then token
};

/// Tokens present in both conditions with pooled count >= min_token_count.
/// Throws when either condition has no tokens.
TokenRatioTable relative_frequency_table(std::span<const TokenDoc> docs_a,
                                         std::span<const TokenDoc> docs_b,
                                         std::size_t min_token_count, std::string label_a = "a",
                                         std::string label_b = "b");

struct ConditionSets {
  std::set<RecordId> singleton;
  std::set<RecordId> repeated;
  std::set<RecordId> monolingual;   // members of repeated clusters with one language
  std::set<RecordId> multilingual;  // members of repeated clusters with several
};

/// Clusters need attached languages; repeated clusters with fewer than two
/// language-bearing members join neither linguality set.
ConditionSets condition_split(std::span<const Cluster> clusters);

std::vector<TokenDoc> select_docs(std::span<const TokenDoc> docs, const std::set<RecordId>& ids);

}  // namespace claimgraph
