#include "claimgraph/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "claimgraph/io.hpp"
#include "claimgraph/text.hpp"

namespace claimgraph {

using nlohmann::json;

namespace {

std::optional<std::string> optional_text(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    return std::nullopt;
  }
  if (it->is_string()) {
    return it->get<std::string>();
  }
  // ClaimReview nests author and rating in objects.
  if (it->is_object()) {
    for (const char* inner : {"name", "alternateName", "ratingValue"}) {
      auto sub = it->find(inner);
      if (sub != it->end() && sub->is_string()) {
        return sub->get<std::string>();
      }
      if (sub != it->end() && sub->is_number()) {
        return sub->dump();
      }
    }
    return std::nullopt;
  }
  if (it->is_number()) {
    return it->dump();
  }
  throw Error(std::string("field ") + key + " must be a string");
}

constexpr RecordId kIdMask = (RecordId{1} << 53) - 1;

}  // namespace

RawRecord parse_raw_record(const json& obj) {
  if (!obj.is_object()) {
    throw Error("line is not a JSON object");
  }
  RawRecord r;
  auto url = optional_text(obj, "url");
  if (!url || url->empty()) {
    throw Error("missing url");
  }
  r.url = *url;
  auto date = optional_text(obj, "datePublished");
  if (!date) {
    throw Error("missing datePublished");
  }
  auto parsed = Date::parse(*date);
  if (!parsed) {
    throw Error("invalid datePublished");
  }
  r.review_date = *parsed;
  r.claim_reviewed = optional_text(obj, "claimReviewed");
  r.headline = optional_text(obj, "headline");
  r.description = optional_text(obj, "description");
  r.author = optional_text(obj, "author");
  r.rating = optional_text(obj, "reviewRating");
  r.language = optional_text(obj, "language");
  if (!r.language) {
    r.language = optional_text(obj, "inLanguage");  // schema.org spelling
  }
  if (auto it = obj.find("id"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_unsigned()) {
      throw Error("id must be a nonnegative integer");
    }
    r.id = it->get<RecordId>();
  }
  r.claim_text_en = optional_text(obj, "claimTextEn");
  if (auto it = obj.find("nounLemmas"); it != obj.end() && !it->is_null()) {
    if (!it->is_array()) {
      throw Error("nounLemmas must be an array of strings");
    }
    std::vector<std::string> lemmas;
    for (const auto& x : *it) {
      if (!x.is_string()) {
        throw Error("nounLemmas must be an array of strings");
      }
      lemmas.push_back(x.get<std::string>());
    }
    r.noun_lemmas = std::move(lemmas);
  }
  return r;
}

ParseResult parse_records(std::istream& in) {
  if (!in) {
    throw Error("unreadable record stream");
  }
  ParseResult out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) {
      out.errors.push_back({line_no, "malformed JSON"});
      continue;
    }
    try {
      out.records.push_back(parse_raw_record(obj));
      out.record_lines.push_back(line_no);
    } catch (const Error& e) {
      out.errors.push_back({line_no, e.what()});
    }
  }
  if (in.bad()) {
    throw Error("error while reading record stream");
  }
  return out;
}

LengthStats compute_length_stats(std::span<const RawRecord> records) {
  std::vector<double> lengths;
  for (const auto& r : records) {
    if (r.claim_reviewed && text::has_non_whitespace(*r.claim_reviewed)) {
      lengths.push_back(static_cast<double>(text::char_count(*r.claim_reviewed)));
    }
  }
  if (lengths.size() < 2) {
    throw Error("length statistics need at least 2 non-empty claimReviewed entries");
  }
  double sum = 0.0;
  for (double l : lengths) {
    sum += l;
  }
  const double mean = sum / static_cast<double>(lengths.size());
  double ss = 0.0;
  for (double l : lengths) {
    ss += (l - mean) * (l - mean);
  }
  return {mean, std::sqrt(ss / static_cast<double>(lengths.size()))};
}

std::optional<std::string> extract_claim(const RawRecord& record, const LengthStats& stats,
                                         double k, bool two_sided) {
  if (record.claim_reviewed && text::has_non_whitespace(*record.claim_reviewed)) {
    return record.claim_reviewed;
  }
  const double upper = stats.mean_chars + k * stats.sd_chars;
  const double lower = stats.mean_chars - k * stats.sd_chars;
  auto fits = [&](const std::optional<std::string>& field) {
    if (!field || !text::has_non_whitespace(*field)) {
      return false;
    }
    const auto len = static_cast<double>(text::char_count(*field));
    return len <= upper && (!two_sided || len >= lower);
  };
  if (fits(record.headline)) {
    return record.headline;
  }
  if (fits(record.description)) {
    return record.description;
  }
  return std::nullopt;
}

std::string canonical_domain(std::string_view url, const RedirectResolver& resolver) {
  std::string resolved = resolver ? resolver(url) : std::string(url);
  std::string_view s = resolved;
  const auto scheme_end = s.find("://");
  if (scheme_end == std::string_view::npos || scheme_end == 0) {
    throw Error("unparseable URL '" + std::string(url) + "'");
  }
  for (char c : s.substr(0, scheme_end)) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.')) {
      throw Error("unparseable URL '" + std::string(url) + "'");
    }
  }
  std::string_view rest = s.substr(scheme_end + 3);
  rest = rest.substr(0, rest.find_first_of("/?#"));
  if (auto at = rest.rfind('@'); at != std::string_view::npos) {
    rest = rest.substr(at + 1);
  }
  if (auto colon = rest.find(':'); colon != std::string_view::npos) {
    rest = rest.substr(0, colon);
  }
  std::string host;
  for (char c : rest) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      throw Error("unparseable URL '" + std::string(url) + "'");
    }
    host += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  while (!host.empty() && host.back() == '.') {
    host.pop_back();
  }
  if (host.starts_with("www.")) {
    host.erase(0, 4);
  }
  if (host.empty()) {
    throw Error("unparseable URL '" + std::string(url) + "'");
  }
  return host;
}

std::vector<NgramHit> detect_boilerplate_ngrams(std::span<const FactCheckRecord> records,
                                                int n_min, int n_max, double min_share) {
  std::map<std::string, std::vector<const FactCheckRecord*>> by_domain;
  for (const auto& r : records) {
    by_domain[r.domain].push_back(&r);
  }
  std::vector<NgramHit> hits;
  for (const auto& [domain, members] : by_domain) {
    std::unordered_map<std::string, std::size_t> doc_freq;
    for (const auto* r : members) {
      const auto tokens = text::tokenize(r->claim_text);
      std::unordered_set<std::string> seen;
      for (int n = n_min; n <= n_max; ++n) {
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
          std::string gram = tokens[i];
          for (int j = 1; j < n; ++j) {
            gram += ' ';
            gram += tokens[i + static_cast<std::size_t>(j)];
          }
          if (seen.insert(gram).second) {
            ++doc_freq[gram];
          }
        }
      }
    }
    const auto total = static_cast<double>(members.size());
    for (const auto& [gram, count] : doc_freq) {
      const double share = static_cast<double>(count) / total;
      if (count >= 2 && share >= min_share) {
        hits.push_back({domain, gram, share});
      }
    }
  }
  std::sort(hits.begin(), hits.end(), [](const NgramHit& a, const NgramHit& b) {
    if (a.share != b.share) {
      return a.share > b.share;
    }
    if (a.domain != b.domain) {
      return a.domain < b.domain;
    }
    return a.ngram < b.ngram;
  });
  return hits;
}

std::string strip_boilerplate(std::string_view text, std::span<const std::string> removal_list) {
  std::vector<const std::string*> literals;
  for (const auto& lit : removal_list) {
    if (!lit.empty()) {
      literals.push_back(&lit);
    }
  }
  // Longest first so a literal never leaves a fragment of a longer one.
  std::stable_sort(literals.begin(), literals.end(),
                   [](const std::string* a, const std::string* b) { return a->size() > b->size(); });
  std::string out(text);
  for (const auto* lit : literals) {
    for (auto pos = out.find(*lit); pos != std::string::npos; pos = out.find(*lit, pos)) {
      out.replace(pos, lit->size(), " ");
    }
  }
  return text::collapse_whitespace(out);
}

std::string normalize_for_dedup(std::string_view text) { return text::alnum_fold(text); }

StageResult dedup_exact(std::vector<FactCheckRecord> records) {
  std::unordered_map<std::string, std::size_t> best;
  std::vector<std::string> keys;
  keys.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    keys.push_back(normalize_for_dedup(records[i].claim_text));
    auto [it, inserted] = best.emplace(keys.back(), i);
    if (!inserted) {
      const auto& cur = records[it->second];
      const auto& cand = records[i];
      if (cand.review_date < cur.review_date ||
          (cand.review_date == cur.review_date && cand.id < cur.id)) {
        it->second = i;
      }
    }
  }
  StageResult out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::size_t survivor = best.at(keys[i]);
    if (survivor == i) {
      out.kept.push_back(std::move(records[i]));
    } else {
      out.drops.push_back({records[i].id, records[survivor].id, "exact_duplicate"});
    }
  }
  return out;
}

StageResult dedup_editorial(std::vector<FactCheckRecord> records, const EmbeddingStore& store,
                            double threshold) {
  std::vector<std::size_t> rows(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto row = store.find(records[i].id);
    if (!row) {
      throw Error("missing embedding for record id " + std::to_string(records[i].id));
    }
    rows[i] = *row;
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].review_date != records[b].review_date) {
      return records[a].review_date < records[b].review_date;
    }
    return records[a].id < records[b].id;
  });

  // Survivors per source, in processing order; positions index `order`.
  std::unordered_map<std::string, std::vector<std::size_t>> by_domain;
  std::unordered_map<std::string, std::vector<std::size_t>> by_author;
  std::vector<std::optional<std::size_t>> absorbed_by(records.size());

  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t i = order[pos];
    const auto& rec = records[i];
    std::optional<std::size_t> match;
    auto scan = [&](const std::vector<std::size_t>& survivors) {
      for (std::size_t spos : survivors) {
        if (match && *match <= spos) {
          break;
        }
        if (store.row_similarity(rows[i], rows[order[spos]]) > threshold) {
          match = spos;
          break;
        }
      }
    };
    if (auto it = by_domain.find(rec.domain); it != by_domain.end()) {
      scan(it->second);
    }
    if (rec.author && !rec.author->empty()) {
      if (auto it = by_author.find(*rec.author); it != by_author.end()) {
        scan(it->second);
      }
    }
    if (match) {
      absorbed_by[i] = order[*match];
      continue;
    }
    by_domain[rec.domain].push_back(pos);
    if (rec.author && !rec.author->empty()) {
      by_author[*rec.author].push_back(pos);
    }
  }

  StageResult out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (absorbed_by[i]) {
      out.drops.push_back({records[i].id, records[*absorbed_by[i]].id, "editorial_near_duplicate"});
    } else {
      out.kept.push_back(std::move(records[i]));
    }
  }
  return out;
}

StageResult filter_date_range(std::vector<FactCheckRecord> records, const DateRange& range) {
  StageResult out;
  for (auto& r : records) {
    if (range.contains(r.review_date)) {
      out.kept.push_back(std::move(r));
    } else {
      out.drops.push_back({r.id, std::nullopt, "out_of_date_range"});
    }
  }
  return out;
}

RecordId derive_record_id(const RawRecord& raw) {
  std::uint64_t h = io::fnv1a(raw.url);
  h = io::fnv1a("\x1f" + raw.review_date.iso(), h);
  for (const auto* field : {&raw.claim_reviewed, &raw.headline, &raw.description}) {
    h = io::fnv1a("\x1f", h);
    if (*field) {
      h = io::fnv1a(**field, h);
    }
  }
  return h & kIdMask;
}

IngestReport ingest(const ParseResult& parsed, const PipelineConfig& config,
                    std::span<const std::string> removal_list, const RedirectResolver& resolver) {
  IngestReport report;
  report.parse_errors = parsed.errors;
  try {
    report.length_stats = compute_length_stats(parsed.records);
  } catch (const Error&) {
    // No usable claimReviewed lengths: the fallback window is empty.
    report.length_stats = {0.0, 0.0};
  }

  std::unordered_set<RecordId> used;
  std::vector<FactCheckRecord> extracted;
  for (const auto& raw : parsed.records) {
    RecordId id = 0;
    if (raw.id) {
      id = *raw.id;
      if (!used.insert(id).second) {
        report.drops.push_back({id, id, "duplicate_id"});
        continue;
      }
    } else {
      id = derive_record_id(raw);
      while (!used.insert(id).second) {
        id = (id + 1) & kIdMask;
      }
    }
    auto claim = extract_claim(raw, report.length_stats, config.length_sd_multiplier,
                               config.length_window_two_sided);
    if (!claim) {
      report.drops.push_back({id, std::nullopt, "no_claim"});
      continue;
    }
    FactCheckRecord rec;
    rec.id = id;
    try {
      rec.domain = canonical_domain(raw.url, resolver);
    } catch (const Error&) {
      report.drops.push_back({id, std::nullopt, "bad_url"});
      continue;
    }
    rec.claim_text = std::move(*claim);
    rec.url = raw.url;
    rec.author = raw.author;
    rec.review_date = raw.review_date;
    rec.rating_raw = raw.rating;
    rec.language = raw.language;
    rec.claim_text_en = raw.claim_text_en;
    rec.noun_lemmas = raw.noun_lemmas;
    extracted.push_back(std::move(rec));
  }

  report.boilerplate_candidates =
      detect_boilerplate_ngrams(extracted, 3, 6, config.per_domain_min_share);

  std::vector<FactCheckRecord> stripped;
  for (auto& rec : extracted) {
    rec.claim_text = strip_boilerplate(rec.claim_text, removal_list);
    if (rec.claim_text.empty()) {
      report.drops.push_back({rec.id, std::nullopt, "empty_after_boilerplate"});
      continue;
    }
    stripped.push_back(std::move(rec));
  }

  auto dated = filter_date_range(std::move(stripped), config.date_range);
  report.drops.insert(report.drops.end(), dated.drops.begin(), dated.drops.end());
  auto deduped = dedup_exact(std::move(dated.kept));
  report.drops.insert(report.drops.end(), deduped.drops.begin(), deduped.drops.end());
  report.records = std::move(deduped.kept);
  return report;
}

RecordTable::RecordTable(std::vector<FactCheckRecord> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!index_.emplace(records_[i].id, i).second) {
      throw Error("duplicate record id " + std::to_string(records_[i].id));
    }
  }
}

const FactCheckRecord* RecordTable::find(RecordId id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

const FactCheckRecord& RecordTable::at(RecordId id) const {
  const auto* r = find(id);
  if (r == nullptr) {
    throw Error("unknown record id " + std::to_string(id));
  }
  return *r;
}

json to_json(const FactCheckRecord& r) {
  json obj;
  obj["id"] = r.id;
  obj["claim_text"] = r.claim_text;
  obj["claimReviewed"] = r.claim_text;
  obj["domain"] = r.domain;
  obj["url"] = r.url;
  obj["datePublished"] = r.review_date.iso();
  if (r.author) {
    obj["author"] = *r.author;
  }
  if (r.rating_raw) {
    obj["reviewRating"] = *r.rating_raw;
  }
  if (r.language) {
    obj["language"] = *r.language;
  }
  if (r.claim_text_en) {
    obj["claimTextEn"] = *r.claim_text_en;
  }
  if (r.noun_lemmas) {
    obj["nounLemmas"] = *r.noun_lemmas;
  }
  return obj;
}

FactCheckRecord fact_check_from_json(const json& obj) {
  RawRecord raw = parse_raw_record(obj);
  if (!raw.id) {
    throw Error("cleaned record without id");
  }
  FactCheckRecord r;
  r.id = *raw.id;
  r.claim_text = obj.at("claim_text").get<std::string>();
  r.domain = obj.at("domain").get<std::string>();
  r.url = raw.url;
  r.author = raw.author;
  r.review_date = raw.review_date;
  r.rating_raw = raw.rating;
  r.language = raw.language;
  r.claim_text_en = raw.claim_text_en;
  r.noun_lemmas = raw.noun_lemmas;
  return r;
}

void write_records_jsonl(std::span<const FactCheckRecord> records, std::ostream& out) {
  for (const auto& r : records) {
    out << to_json(r).dump() << '\n';
  }
}

void write_records_jsonl(std::span<const FactCheckRecord> records,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  write_records_jsonl(records, out);
}

std::vector<FactCheckRecord> read_records_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::vector<FactCheckRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    try {
      out.push_back(fact_check_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_drop_log(std::span<const DropEntry> drops, std::span<const LineError> parse_errors,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  io::write_csv_row(out, {"dropped_id", "survivor_id", "reason"});
  for (const auto& e : parse_errors) {
    io::write_csv_row(out, {"line:" + std::to_string(e.line), "", "parse_error: " + e.reason});
  }
  for (const auto& d : drops) {
    io::write_csv_row(out, {std::to_string(d.dropped_id),
                            d.survivor_id ? std::to_string(*d.survivor_id) : std::string(),
                            d.reason});
  }
}

}  // namespace claimgraph
