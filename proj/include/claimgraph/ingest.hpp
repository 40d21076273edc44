#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "claimgraph/common.hpp"
#include "claimgraph/config.hpp"
#include "claimgraph/embed_store.hpp"

namespace claimgraph {

/// One line of the input feed, as published in ClaimReview markup.
struct RawRecord {
  std::optional<std::string> claim_reviewed;
  std::optional<std::string> headline;
  std::optional<std::string> description;
  std::string url;
  std::optional<std::string> author;
  Date review_date;
  std::optional<std::string> rating;
  std::optional<std::string> language;
  // Optional pass-through fields.
  std::optional<RecordId> id;
  std::optional<std::string> claim_text_en;
  std::optional<std::vector<std::string>> noun_lemmas;
};

struct FactCheckRecord {
  RecordId id = 0;
  std::string claim_text;
  std::string domain;
  std::string url;
  std::optional<std::string> author;
  Date review_date;
  std::optional<std::string> rating_raw;
  std::optional<std::string> language;
  std::optional<std::string> claim_text_en;
  std::optional<std::vector<std::string>> noun_lemmas;

  friend bool operator==(const FactCheckRecord&, const FactCheckRecord&) = default;
};

struct LineError {
  std::size_t line;  // 1-based
  std::string reason;
};

struct ParseResult {
  std::vector<RawRecord> records;
  std::vector<std::size_t> record_lines;
  std::vector<LineError> errors;
};

/// Throws Error with a short reason ("missing url", "invalid datePublished").
RawRecord parse_raw_record(const nlohmann::json& obj);

/// One JSON object per line; blank lines are skipped. Bad lines are
/// collected, never fatal.
ParseResult parse_records(std::istream& in);

struct LengthStats {
  double mean_chars = 0.0;
  double sd_chars = 0.0;  // population SD
};

/// Over non-empty claim_reviewed fields, measured in Unicode scalars.
/// Throws when fewer than two are usable.
LengthStats compute_length_stats(std::span<const RawRecord> records);

/// claim_reviewed verbatim when it has any non-whitespace content; else the
/// headline, else the description, each only if its length fits the window
/// mean + k*sd (and >= mean - k*sd when two_sided).
std::optional<std::string> extract_claim(const RawRecord& record, const LengthStats& stats,
                                         double k, bool two_sided = false);

/// Maps a URL to the URL of its final redirect.
using RedirectResolver = std::function<std::string(std::string_view url)>;

/// Lowercased hostname without "www."; throws on unparseable URLs.
std::string canonical_domain(std::string_view url, const RedirectResolver& resolver = {});

struct NgramHit {
  std::string domain;
  std::string ngram;
  double share;  // fraction of the domain's records containing the n-gram
};

/// Token n-grams (n_min..n_max) reaching min_share of a domain's records,
/// sorted by share descending, then domain and n-gram.
std::vector<NgramHit> detect_boilerplate_ngrams(std::span<const FactCheckRecord> records,
                                                int n_min = 3, int n_max = 6,
                                                double min_share = 0.05);

/// Removes every occurrence of each literal, then collapses whitespace.
std::string strip_boilerplate(std::string_view text, std::span<const std::string> removal_list);

/// Letters and digits only, case-folded.
std::string normalize_for_dedup(std::string_view text);

struct DropEntry {
  RecordId dropped_id;
  std::optional<RecordId> survivor_id;
  std::string reason;
};

struct StageResult {
  std::vector<FactCheckRecord> kept;
  std::vector<DropEntry> drops;
};

/// Keeps the earliest record (ties: smallest id) of each normalized-text
/// collision group. Survivors retain input order.
StageResult dedup_exact(std::vector<FactCheckRecord> records);

/// Walks records by (date, id); a record whose cosine with an earlier
/// survivor from the same domain or author exceeds `threshold` is dropped in
/// favour of that survivor.
StageResult dedup_editorial(std::vector<FactCheckRecord> records, const EmbeddingStore& store,
                            double threshold);

StageResult filter_date_range(std::vector<FactCheckRecord> records, const DateRange& range);

/// Derived from url, date and claim; stable across runs.
RecordId derive_record_id(const RawRecord& raw);

struct IngestReport {
  std::vector<FactCheckRecord> records;
  std::vector<DropEntry> drops;
  std::vector<LineError> parse_errors;
  LengthStats length_stats;
  std::vector<NgramHit> boilerplate_candidates;
};

/// Full ingest chain: ids, claim extraction, domain, boilerplate removal,
/// date filter, exact dedup. Every input line ends up either in `records`,
/// `drops`, or `parse_errors`.
IngestReport ingest(const ParseResult& parsed, const PipelineConfig& config,
                    std::span<const std::string> removal_list,
                    const RedirectResolver& resolver = {});

/// id -> record lookup over an owned record list.
class RecordTable {
 public:
  RecordTable() = default;
  explicit RecordTable(std::vector<FactCheckRecord> records);

  [[nodiscard]] const FactCheckRecord* find(RecordId id) const;
  [[nodiscard]] const FactCheckRecord& at(RecordId id) const;
  [[nodiscard]] const std::vector<FactCheckRecord>& records() const { return records_; }
  [[nodiscard]] std::size_t size() const { return records_.size(); }

 private:
  std::vector<FactCheckRecord> records_;
  std::unordered_map<RecordId, std::size_t> index_;
};

// Cleaned-record JSONL: the input keys plus id, domain and claim_text.
nlohmann::json to_json(const FactCheckRecord& record);
FactCheckRecord fact_check_from_json(const nlohmann::json& obj);
void write_records_jsonl(std::span<const FactCheckRecord> records, std::ostream& out);
void write_records_jsonl(std::span<const FactCheckRecord> records,
                         const std::filesystem::path& path);
std::vector<FactCheckRecord> read_records_jsonl(const std::filesystem::path& path);

/// Header: dropped_id,survivor_id,reason. Parse errors are written with
/// dropped_id "line:N".
void write_drop_log(std::span<const DropEntry> drops, std::span<const LineError> parse_errors,
                    const std::filesystem::path& path);

}  // namespace claimgraph
