#include "claimgraph/pipeline.hpp"

#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "claimgraph/ann_index.hpp"
#include "claimgraph/assets.hpp"
#include "claimgraph/cluster_eval.hpp"
#include "claimgraph/embed_store.hpp"
#include "claimgraph/homophily.hpp"
#include "claimgraph/ingest.hpp"
#include "claimgraph/io.hpp"
#include "claimgraph/paths.hpp"
#include "claimgraph/simgraph.hpp"
#include "claimgraph/temporal.hpp"
#include "claimgraph/tokens.hpp"

namespace claimgraph {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Embed: return "embed";
    case Stage::Index: return "index";
    case Stage::Cluster: return "cluster";
    case Stage::Eval: return "eval";
    case Stage::Homophily: return "homophily";
    case Stage::Temporal: return "temporal";
    case Stage::Paths: return "paths";
    case Stage::Tokens: return "tokens";
    case Stage::Report: return "report";
  }
  return "ingest";
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages{Stage::Ingest,    Stage::Embed,    Stage::Index,
                                         Stage::Cluster,   Stage::Eval,     Stage::Homophily,
                                         Stage::Temporal,  Stage::Paths,    Stage::Tokens,
                                         Stage::Report};
  return stages;
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (Stage s : all_stages()) {
    if (to_string(s) == name) {
      return s;
    }
  }
  return std::nullopt;
}

Logger::Logger(const fs::path& file, bool echo) : echo_(echo) {
  if (!file.empty()) {
    file_.open(file, std::ios::app);
  }
}

void Logger::log(std::string_view stage, std::string_view level, std::string_view event, json fields) {
  json line{{"stage", stage}, {"level", level}, {"event", event}};
  for (auto& [k, v] : fields.items()) {
    line[k] = v;
  }
  const std::string text = line.dump();
  if (echo_) {
    std::cerr << text << '\n';
  }
  if (file_.is_open()) {
    file_ << text << '\n' << std::flush;
  }
}

Manifest::Manifest(fs::path workdir) : workdir_(std::move(workdir)), doc_(json::object()) {}

void Manifest::load() {
  const fs::path p = workdir_ / "manifest.json";
  if (!fs::exists(p)) {
    doc_ = json::object();
    return;
  }
  doc_ = json::parse(io::read_file(p), nullptr, false);
  if (doc_.is_discarded() || !doc_.is_object()) {
    doc_ = json::object();  // unreadable manifest: every stage reruns
  }
}

void Manifest::save() const { io::write_file(workdir_ / "manifest.json", doc_.dump(2) + "\n"); }

void Manifest::set_config(const json& config) { doc_["config"] = config; }

bool Manifest::up_to_date(Stage stage, const std::string& config_hash,
                          const std::map<std::string, std::string>& inputs) const {
  const std::string name(to_string(stage));
  if (!doc_.contains("stages") || !doc_["stages"].contains(name)) {
    return false;
  }
  const json& entry = doc_["stages"][name];
  if (entry.value("config_hash", "") != config_hash) {
    return false;
  }
  if (entry.value("inputs", json::object()) != json(inputs)) {
    return false;
  }
  const json outputs = entry.value("outputs", json::object());
  for (const auto& [file, hash] : outputs.items()) {
    const fs::path p = workdir_ / file;
    if (!fs::exists(p) || io::file_hash(p) != hash.get<std::string>()) {
      return false;
    }
  }
  return true;
}

void Manifest::record(Stage stage, const std::string& config_hash,
                      const std::map<std::string, std::string>& inputs,
                      const std::vector<fs::path>& outputs, double seconds) {
  json out = json::object();
  for (const auto& p : outputs) {
    out[fs::relative(p, workdir_).generic_string()] = io::file_hash(p);
  }
  doc_["stages"][std::string(to_string(stage))] = {
      {"config_hash", config_hash}, {"inputs", inputs}, {"outputs", out}, {"seconds", seconds}};
}

std::vector<std::string> parse_removal_list(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.pop_back();
    }
    if (line.empty() || line.front() == '#') {
      continue;
    }
    out.push_back(line);
  }
  return out;
}

std::vector<std::string> load_removal_list(const PipelineConfig& config) {
  if (config.boilerplate_list.empty()) {
    return parse_removal_list(assets::boilerplate_list());
  }
  return parse_removal_list(io::read_file(config.boilerplate_list));
}

namespace {

struct Context {
  const PipelineOptions& options;
  Logger& log;
  std::string stage;

  [[nodiscard]] fs::path file(const std::string& name) const { return options.workdir / name; }
  [[nodiscard]] const PipelineConfig& config() const { return options.config; }
};

struct StageDef {
  Stage stage;
  std::vector<std::pair<std::string, Stage>> inputs;  // workdir file, producing stage
  std::vector<std::string> outputs;
  std::function<std::vector<fs::path>(const Context&)> run;
};

std::string fmt(double v) { return io::format_double(v); }

std::string fmt(const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) {
    throw Error("cannot write " + p.string());
  }
  return out;
}

void write_json(const fs::path& p, const json& doc) { io::write_file(p, doc.dump(2) + "\n"); }

VerdictTable verdict_table_for(const PipelineConfig& c) {
  return c.verdict_table.empty() ? parse_verdict_table(assets::verdict_table())
                                 : load_verdict_table(c.verdict_table);
}

FamilyTable family_table_for(const PipelineConfig& c) {
  return c.family_table.empty() ? parse_family_table(assets::language_families())
                                : load_family_table(c.family_table);
}

std::shared_ptr<const EmbeddingStore> load_store(const Context& ctx) {
  return std::make_shared<const EmbeddingStore>(load_vector_file(ctx.file("embeddings.cgv")));
}

struct ClusteredCorpus {
  RecordTable records;
  SimilarityGraph graph;
  std::vector<Cluster> clusters;
};

ClusteredCorpus load_clusters(const Context& ctx) {
  ClusteredCorpus c;
  c.records = RecordTable(read_records_jsonl(ctx.file("records.jsonl")));
  c.graph = read_graph_csv(ctx.file("edges.csv"), ctx.file("clusters.csv"));
  c.clusters = connected_components(c.graph);
  attach_metadata(c.clusters, c.records);
  return c;
}

json drop_counts(std::span<const DropEntry> drops) {
  std::map<std::string, std::size_t> counts;
  for (const auto& d : drops) {
    ++counts[d.reason];
  }
  return counts;
}

// ---------------------------------------------------------------- stages

std::vector<fs::path> run_ingest(const Context& ctx) {
  const auto& input = ctx.options.input;
  if (input.empty()) {
    throw Error("ingest needs --input <records.jsonl>");
  }
  if (!fs::exists(input)) {
    throw Error("input file not found: " + input.string());
  }
  std::ifstream in(input);
  const ParseResult parsed = parse_records(in);
  const auto removal = load_removal_list(ctx.config());
  const IngestReport report = ingest(parsed, ctx.config(), removal);

  write_records_jsonl(report.records, ctx.file("ingested.jsonl"));
  write_drop_log(report.drops, report.parse_errors, ctx.file("drops_ingest.csv"));
  {
    auto out = open_out(ctx.file("boilerplate_candidates.csv"));
    io::write_csv_row(out, {"domain", "ngram", "share"});
    for (const auto& h : report.boilerplate_candidates) {
      io::write_csv_row(out, {h.domain, h.ngram, fmt(h.share)});
    }
  }
  const std::size_t n_input = parsed.records.size() + parsed.errors.size();
  json summary{{"input_records", n_input},
               {"kept", report.records.size()},
               {"parse_errors", report.parse_errors.size()},
               {"drops", drop_counts(report.drops)},
               {"length_mean_chars", report.length_stats.mean_chars},
               {"length_sd_chars", report.length_stats.sd_chars},
               {"boilerplate_candidates", report.boilerplate_candidates.size()}};
  write_json(ctx.file("ingest_summary.json"), summary);
  ctx.log.info(ctx.stage, "ingested", summary);
  for (const auto& e : report.parse_errors) {
    ctx.log.warn(ctx.stage, "parse_error", {{"line", e.line}, {"reason", e.reason}});
  }
  if (report.records.empty()) {
    throw Error("no records survived ingest (" + std::to_string(report.parse_errors.size()) +
                " parse errors, " + std::to_string(report.drops.size()) + " drops)");
  }
  return {ctx.file("ingested.jsonl"), ctx.file("drops_ingest.csv"),
          ctx.file("boilerplate_candidates.csv"), ctx.file("ingest_summary.json")};
}

std::vector<fs::path> run_embed(const Context& ctx) {
  auto records = read_records_jsonl(ctx.file("ingested.jsonl"));
  std::vector<RecordId> ids;
  ids.reserve(records.size());
  for (const auto& r : records) {
    ids.push_back(r.id);
  }
  std::optional<EmbeddingStore> store;
  if (!ctx.options.vectors.empty()) {
    const EmbeddingStore full = load_vector_file(ctx.options.vectors);
    for (RecordId id : ids) {
      if (!full.contains(id)) {
        throw Error("vector file " + ctx.options.vectors.string() + " has no vector for record " +
                    std::to_string(id));
      }
    }
    store = full.subset(ids);
  } else if (!ctx.options.embed_endpoint.empty()) {
    std::vector<std::pair<RecordId, std::string>> claims;
    for (const auto& r : records) {
      claims.emplace_back(r.id, r.claim_text);
    }
    FetchOptions fo;
    fo.batch_size = static_cast<std::size_t>(ctx.config().embed_batch_size);
    fo.checkpoint = ctx.file("embed_checkpoint.jsonl");
    fo.on_retry = [&](const std::string& what) { ctx.log.warn(ctx.stage, "retry", {{"detail", what}}); };
    FetchStats stats;
    store = fetch_embeddings(claims, ctx.options.embed_endpoint, fo, &stats);
    ctx.log.info(ctx.stage, "fetched", {{"batches", stats.batches},
                                        {"from_checkpoint", stats.batches_from_checkpoint},
                                        {"retries", stats.retries}});
  } else {
    throw Error("embed needs --vectors <file.cgv> or --endpoint <url>");
  }

  const std::size_t before = records.size();
  StageResult dedup = dedup_editorial(std::move(records), *store, ctx.config().near_dup_threshold);
  std::vector<RecordId> kept;
  for (const auto& r : dedup.kept) {
    kept.push_back(r.id);
  }
  write_vector_file(store->subset(kept), ctx.file("embeddings.cgv"));
  write_records_jsonl(dedup.kept, ctx.file("records.jsonl"));
  write_drop_log(dedup.drops, {}, ctx.file("drops_editorial.csv"));
  ctx.log.info(ctx.stage, "editorial_dedup",
               {{"input", before}, {"kept", dedup.kept.size()}, {"drops", drop_counts(dedup.drops)}});
  return {ctx.file("embeddings.cgv"), ctx.file("records.jsonl"), ctx.file("drops_editorial.csv")};
}

IndexParams index_params(const PipelineConfig& c) {
  return {c.n_hyperplanes, c.table_bits, c.n_probe_bits, c.rng_seed};
}

std::vector<fs::path> run_index(const Context& ctx) {
  auto store = load_store(ctx);
  const auto index = HyperplaneIndex::build(store, index_params(ctx.config()));
  write_index(index, ctx.file("index.cgi"));
  ctx.log.info(ctx.stage, "indexed", {{"vectors", store->size()},
                                      {"tables", index.n_tables()},
                                      {"exhaustive", index.exhaustive()}});
  return {ctx.file("index.cgi")};
}

std::vector<fs::path> run_cluster(const Context& ctx) {
  auto store = load_store(ctx);
  const auto index = read_index(ctx.file("index.cgi"), store);
  const auto& c = ctx.config();
  const auto graph = build_graph(index, c.edge_threshold, static_cast<std::size_t>(c.ann_initial_k),
                                 c.strict_threshold);
  const auto clusters = connected_components(graph);
  write_edges_csv(graph, ctx.file("edges.csv"));
  write_clusters_csv(clusters, ctx.file("clusters.csv"));
  const auto s = cluster_stats(clusters);
  json doc{{"threshold", c.edge_threshold},
           {"n_nodes", s.n_nodes},
           {"n_edges", graph.edges.size()},
           {"n_clusters", s.n_clusters},
           {"n_singletons", s.n_singletons},
           {"singleton_fraction", s.singleton_fraction},
           {"n_repeated_claims", s.n_repeated_claims},
           {"n_nodes_in_repeated", s.n_nodes_in_repeated},
           {"mean_nonsingleton_size", opt_json(s.mean_nonsingleton_size)}};
  write_json(ctx.file("cluster_stats.json"), doc);
  ctx.log.info(ctx.stage, "clustered", doc);
  return {ctx.file("edges.csv"), ctx.file("clusters.csv"), ctx.file("cluster_stats.json")};
}

std::vector<fs::path> run_eval(const Context& ctx) {
  const auto& c = ctx.config();
  auto store = load_store(ctx);
  const auto index = read_index(ctx.file("index.cgi"), store);
  const RecordTable records(read_records_jsonl(ctx.file("records.jsonl")));
  const VerdictMap vmap = build_verdict_map(records.records(), static_cast<std::size_t>(c.min_verdict_count),
                                            verdict_table_for(c));
  EvalOptions eo;
  eo.initial_k = static_cast<std::size_t>(c.ann_initial_k);
  eo.strict = c.strict_threshold;
  eo.inter_sample_cap = static_cast<std::size_t>(c.inter_cluster_sample_cap);
  eo.seed = c.rng_seed;
  const auto sweep = threshold_sweep(index, c.sweep_thresholds, records, vmap, eo);

  auto consistency = [](const std::optional<Consistency>& m, bool weighted) {
    return m ? std::optional<double>(weighted ? m->weighted : m->unweighted) : std::nullopt;
  };
  json rows = json::array();
  {
    auto out = open_out(ctx.file("eval.csv"));
    io::write_csv_row(out, {"threshold", "n_clusters", "singleton_fraction", "mean_nonsingleton_size",
                            "mean_intra_variance", "mean_inter_distance", "modal_consistency_2",
                            "modal_consistency_2_unweighted", "modal_consistency_4",
                            "modal_consistency_4_unweighted", "coverage"});
    for (const auto& r : sweep) {
      io::write_csv_row(out, {fmt(r.threshold), std::to_string(r.n_clusters), fmt(r.singleton_fraction),
                              fmt(r.mean_nonsingleton_size), fmt(r.mean_intra_variance),
                              fmt(r.mean_inter_distance), fmt(consistency(r.modal_consistency_2, true)),
                              fmt(consistency(r.modal_consistency_2, false)),
                              fmt(consistency(r.modal_consistency_4, true)),
                              fmt(consistency(r.modal_consistency_4, false)), fmt(r.coverage)});
      rows.push_back({{"threshold", r.threshold},
                      {"n_clusters", r.n_clusters},
                      {"singleton_fraction", r.singleton_fraction},
                      {"mean_nonsingleton_size", opt_json(r.mean_nonsingleton_size)},
                      {"mean_intra_variance", opt_json(r.mean_intra_variance)},
                      {"mean_inter_distance", opt_json(r.mean_inter_distance)},
                      {"modal_consistency_2", opt_json(consistency(r.modal_consistency_2, true))},
                      {"modal_consistency_4", opt_json(consistency(r.modal_consistency_4, true))},
                      {"coverage", r.coverage}});
    }
  }
  {
    auto out = open_out(ctx.file("verdict_freq.csv"));
    io::write_csv_row(out, {"normalized", "count", "label"});
    for (const auto& f : vmap.frequencies) {
      io::write_csv_row(out, {f.normalized, std::to_string(f.count),
                              f.label ? std::string(to_string(*f.label)) : std::string()});
    }
  }
  write_json(ctx.file("eval.json"), {{"sweep", rows},
                                     {"min_verdict_count", c.min_verdict_count},
                                     {"mapped_verdicts", vmap.mapping.size()},
                                     {"distinct_verdicts", vmap.frequencies.size()}});
  ctx.log.info(ctx.stage, "swept", {{"thresholds", sweep.size()}});
  return {ctx.file("eval.csv"), ctx.file("eval.json"), ctx.file("verdict_freq.csv")};
}

json profile_json(const LingualityProfile& p) {
  json counts = json::object();
  for (std::size_t a = 0; a < kArityClasses; ++a) {
    counts[std::string(kArityNames[a])] = p.counts[a];
  }
  return {{"counts", counts}, {"multilingual_fraction", p.multilingual_fraction}, {"n_clusters", p.n_clusters()}};
}

std::vector<fs::path> run_homophily(const Context& ctx) {
  const auto& c = ctx.config();
  const auto corpus = load_clusters(ctx);
  const auto lc = language_clusters(corpus.clusters);
  json doc{{"threshold", c.edge_threshold},
           {"excluded_members", lc.excluded_members},
           {"excluded_clusters", lc.excluded_clusters}};
  auto out = open_out(ctx.file("homophily_replicates.csv"));
  io::write_csv_row(out, {"replicate", "mono", "bi", "tri", "four_plus", "multilingual_fraction"});
  if (lc.clusters.empty()) {
    doc["unavailable"] = "no cluster has two or more members with a language";
    ctx.log.warn(ctx.stage, "unavailable", {{"reason", doc["unavailable"]}});
  } else {
    const auto observed = linguality_profile(lc);
    const auto dist = language_distribution(lc);
    const auto null_model = null_model_profile(lc, dist, static_cast<std::size_t>(c.null_model_replicates),
                                               c.rng_seed);
    const auto test = homophily_test(observed, null_model, c.alpha);
    for (std::size_t r = 0; r < null_model.replicates.size(); ++r) {
      const auto& p = null_model.replicates[r];
      io::write_csv_row(out, {std::to_string(r), std::to_string(p.counts[0]), std::to_string(p.counts[1]),
                              std::to_string(p.counts[2]), std::to_string(p.counts[3]),
                              fmt(p.multilingual_fraction)});
    }
    json expected = json::object();
    json per_arity = json::object();
    for (std::size_t a = 0; a < kArityClasses; ++a) {
      expected[std::string(kArityNames[a])] = test.expected_mean[a];
      per_arity[std::string(kArityNames[a])] = test.per_arity_p[a];
    }
    json language_freq = json::object();
    for (std::size_t i = 0; i < lc.languages.size(); ++i) {
      language_freq[lc.languages[i]] = dist[i];
    }
    doc["observed"] = profile_json(observed);
    doc["expected_mean"] = expected;
    doc["expected_multilingual_fraction"] = null_model.expected_multilingual_fraction;
    doc["per_arity_p"] = per_arity;
    doc["statistic"] = "mono_cluster_count";
    doc["p_value"] = test.p_value;
    doc["alpha"] = test.alpha;
    doc["significant"] = test.significant;
    doc["replicates"] = test.replicates;
    doc["seed"] = test.seed;
    doc["language_distribution"] = language_freq;
    try {
      const auto fs_share = family_share(lc, family_table_for(c));
      doc["family_share"] = {{"share", fs_share.share},
                             {"same_family", fs_share.same_family},
                             {"multilingual_clusters", fs_share.n_clusters}};
    } catch (const Error& e) {
      doc["family_share"] = {{"unavailable", e.what()}};
    }
    ctx.log.info(ctx.stage, "tested", {{"p_value", test.p_value}, {"significant", test.significant}});
  }
  out.close();
  write_json(ctx.file("homophily.json"), doc);
  return {ctx.file("homophily.json"), ctx.file("homophily_replicates.csv")};
}

std::vector<fs::path> run_temporal(const Context& ctx) {
  const auto& c = ctx.config();
  const auto corpus = load_clusters(ctx);
  auto store = load_store(ctx);
  const Adjacency adj(corpus.graph);
  const auto edges = pair_time_diffs(corpus.clusters, adj, *store, PairPopulation::Edges);
  const auto unconnected = pair_time_diffs(corpus.clusters, adj, *store, PairPopulation::Unconnected);
  const auto all = pair_time_diffs(corpus.clusters, adj, *store, PairPopulation::All);

  json doc{{"threshold", c.edge_threshold},
           {"n_edges", edges.pairs.size()},
           {"n_unconnected_pairs", unconnected.pairs.size()},
           {"excluded_pairs_missing_date", all.excluded_pairs}};

  std::size_t misses = 0;
  for (const auto& p : unconnected.pairs) {
    if (c.strict_threshold ? p.similarity > c.edge_threshold : p.similarity >= c.edge_threshold) {
      ++misses;
    }
  }
  doc["ann_missed_pairs"] = misses;
  if (misses > 0) {
    ctx.log.warn(ctx.stage, "ann_missed_pairs", {{"count", misses}});
  }

  {
    auto out = open_out(ctx.file("time_cdf.csv"));
    io::write_csv_row(out, {"population", "day", "cum_fraction"});
    json at_days = json::object();
    for (const auto* pop : {&edges, &unconnected, &all}) {
      const PairPopulation which = pop == &edges ? PairPopulation::Edges
                                   : pop == &unconnected ? PairPopulation::Unconnected
                                                         : PairPopulation::All;
      if (pop->pairs.empty()) {
        continue;
      }
      const auto cdf = time_diff_cdf(pop->pairs, which);
      for (std::size_t d = 0; d < cdf.cum_fraction.size(); ++d) {
        io::write_csv_row(out, {std::string(to_string(which)), std::to_string(d), fmt(cdf.cum_fraction[d])});
      }
      at_days[std::string(to_string(which))] = {{"le_7_days", cdf.at(7)}, {"le_21_days", cdf.at(21)}};
    }
    doc["cdf"] = at_days;
  }

  {
    auto out = open_out(ctx.file("drift.csv"));
    io::write_csv_row(out, {"bin_start", "mean", "se", "n"});
    if (!unconnected.pairs.empty()) {
      const auto curve = drift_curve(unconnected.pairs, c.drift_max_days, c.drift_bin_width);
      for (const auto& r : curve) {
        io::write_csv_row(out, {std::to_string(r.bin_start), fmt(r.mean_similarity), fmt(r.standard_error),
                                std::to_string(r.n_pairs)});
      }
      if (curve.size() >= 3) {
        const auto trend = drift_trend(curve);
        doc["drift_trend"] = {{"spearman_rho", trend.rho}, {"p", trend.p}, {"bins", curve.size()}};
      } else {
        doc["drift_trend"] = {{"unavailable", "fewer than three drift bins"}};
      }
    } else {
      doc["drift_trend"] = {{"unavailable", "no unconnected intra-cluster pairs"}};
    }
  }

  try {
    const auto t = drift_test(unconnected.pairs, c.drift_early_max_days, c.drift_late_min_days,
                              c.drift_late_max_days);
    doc["drift_test"] = {{"t", t.welch.t},          {"df", t.welch.df},   {"p", t.welch.p},
                         {"significant", t.welch.p < c.alpha},
                         {"n_early", t.n_early},    {"n_late", t.n_late}, {"mean_early", t.mean_early},
                         {"mean_late", t.mean_late}};
  } catch (const Error& e) {
    doc["drift_test"] = {{"unavailable", e.what()}};
  }
  try {
    const auto cmp = compare_time_gaps(edges.pairs, unconnected.pairs);
    doc["connected_vs_unconnected_days"] = {{"t", cmp.welch.t},
                                            {"df", cmp.welch.df},
                                            {"p_two_sided", cmp.welch.p},
                                            {"p_connected_greater", cmp.p_connected_greater},
                                            {"p_connected_less", cmp.p_connected_less},
                                            {"mean_connected_days", cmp.mean_connected_days},
                                            {"mean_unconnected_days", cmp.mean_unconnected_days}};
  } catch (const Error& e) {
    doc["connected_vs_unconnected_days"] = {{"unavailable", e.what()}};
  }
  write_json(ctx.file("temporal.json"), doc);
  ctx.log.info(ctx.stage, "analyzed", {{"edges", edges.pairs.size()}, {"unconnected", unconnected.pairs.size()}});
  return {ctx.file("time_cdf.csv"), ctx.file("drift.csv"), ctx.file("temporal.json")};
}

std::vector<fs::path> run_paths(const Context& ctx) {
  const auto& c = ctx.config();
  const auto corpus = load_clusters(ctx);
  auto store = load_store(ctx);
  const Adjacency adj(corpus.graph);
  PathOptions po;
  po.mode = c.path_mode;
  po.max_exhaustive = static_cast<std::size_t>(c.max_exhaustive_cluster);
  po.seed = c.rng_seed;
  const auto ds = build_regression_dataset(corpus.clusters, adj, *store, po);
  if (ds.sampled_clusters > 0) {
    ctx.log.warn(ctx.stage, "sampled_dissimilar_scan", {{"clusters", ds.sampled_clusters}});
  }
  {
    auto out = open_out(ctx.file("paths.csv"));
    io::write_csv_row(out, {"cluster_id", "endpoint_a", "endpoint_b", "endpoint_similarity", "length",
                            "n_unique_languages", "n_language_switches", "sampled", "path"});
    for (const auto& r : ds.rows) {
      std::string path;
      for (RecordId id : r.path) {
        path += (path.empty() ? "" : " ") + std::to_string(id);
      }
      io::write_csv_row(out, {std::to_string(r.cluster_id), std::to_string(r.endpoint_a),
                              std::to_string(r.endpoint_b), fmt(r.endpoint_similarity),
                              std::to_string(r.length), std::to_string(r.n_unique_languages),
                              std::to_string(r.n_language_switches), r.sampled ? "1" : "0", path});
    }
  }
  json doc{{"mode", c.path_mode == PathMode::Hops ? "hops" : "distance"},
           {"rows", ds.rows.size()},
           {"dropped_missing_language", ds.dropped_missing_language},
           {"sampled_clusters", ds.sampled_clusters}};
  if (ds.dropped_missing_language > 0) {
    ctx.log.warn(ctx.stage, "dropped_missing_language", {{"clusters", ds.dropped_missing_language}});
  }
  try {
    const auto models = run_path_regressions(ds.rows);
    doc["models"] = {{"unique_languages", regression_to_json(models.unique_languages)},
                     {"language_switches", regression_to_json(models.switches)}};
  } catch (const Error& e) {
    doc["models"] = {{"unavailable", e.what()}};
    ctx.log.warn(ctx.stage, "regression_unavailable", {{"reason", e.what()}});
  }
  write_json(ctx.file("regression.json"), doc);
  return {ctx.file("paths.csv"), ctx.file("regression.json")};
}

std::vector<fs::path> run_tokens(const Context& ctx) {
  const auto& c = ctx.config();
  const auto corpus = load_clusters(ctx);
  const auto sets = condition_split(corpus.clusters);

  std::unique_ptr<Translator> translator;
  std::unique_ptr<Tagger> tagger;
  if (!ctx.options.translator_endpoint.empty()) {
    translator = std::make_unique<HttpTranslator>(ctx.options.translator_endpoint);
  } else {
    translator = std::make_unique<IdentityTranslator>();
  }
  if (!ctx.options.tagger_endpoint.empty()) {
    tagger = std::make_unique<HttpTagger>(ctx.options.tagger_endpoint);
  } else {
    tagger = std::make_unique<AlphaWordTagger>();
  }
  PreprocessOptions po;
  po.batch_size = static_cast<std::size_t>(c.embed_batch_size);
  const auto key = io::fnv1a(translator->name() + "\x1f" + tagger->name());
  char cache_name[64];
  std::snprintf(cache_name, sizeof cache_name, "tokens_cache_%016llx.jsonl",
                static_cast<unsigned long long>(key));
  po.cache = ctx.file(cache_name);
  const auto pre = preprocess_tokens(corpus.records.records(), translator.get(), tagger.get(), po);
  if (pre.failed > 0) {
    ctx.log.warn(ctx.stage, "client_failures", {{"records", pre.failed}});
  }
  if (pre.degraded) {
    ctx.log.warn(ctx.stage, "degraded_mode", {{"translator", translator->name()}, {"tagger", tagger->name()}});
  }

  json doc{{"min_token_count", c.min_token_count},
           {"min_count_scope", "pooled"},
           {"degraded", pre.degraded},
           {"translator", translator->name()},
           {"tagger", tagger->name()},
           {"docs", pre.docs.size()},
           {"excluded_empty", pre.excluded_empty},
           {"failed", pre.failed},
           {"conditions",
            {{"singleton", sets.singleton.size()},
             {"repeated", sets.repeated.size()},
             {"monolingual", sets.monolingual.size()},
             {"multilingual", sets.multilingual.size()}}}};

  auto emit = [&](const std::string& file, const std::set<RecordId>& a, const std::set<RecordId>& b,
                  const std::string& la, const std::string& lb) {
    auto out = open_out(ctx.file(file));
    io::write_csv_row(out, {"token", "count_" + la, "count_" + lb, "rel_freq_" + la, "rel_freq_" + lb,
                            "ratio"});
    try {
      const auto table = relative_frequency_table(select_docs(pre.docs, a), select_docs(pre.docs, b),
                                                   static_cast<std::size_t>(c.min_token_count), la, lb);
      for (const auto& r : table.rows) {
        io::write_csv_row(out, {r.token, std::to_string(r.count_a), std::to_string(r.count_b),
                                fmt(r.rel_freq_a), fmt(r.rel_freq_b), fmt(r.ratio)});
      }
      doc["tables"][la + "_vs_" + lb] = {{"rows", table.rows.size()}};
    } catch (const Error& e) {
      doc["tables"][la + "_vs_" + lb] = {{"unavailable", e.what()}};
    }
  };
  emit("tokens_repeated.csv", sets.repeated, sets.singleton, "repeated", "singleton");
  emit("tokens_multilingual.csv", sets.multilingual, sets.monolingual, "multilingual", "monolingual");
  write_json(ctx.file("tokens.json"), doc);
  return {ctx.file("tokens_repeated.csv"), ctx.file("tokens_multilingual.csv"), ctx.file("tokens.json")};
}

const std::vector<std::string> kReportFiles{
    "ingest_summary.json", "cluster_stats.json", "eval.csv",        "eval.json",
    "verdict_freq.csv",    "homophily.json",     "homophily_replicates.csv",
    "time_cdf.csv",        "drift.csv",          "temporal.json",   "paths.csv",
    "regression.json",     "tokens_repeated.csv", "tokens_multilingual.csv", "tokens.json"};

std::vector<fs::path> run_report(const Context& ctx) {
  const fs::path dir = ctx.file("report");
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::vector<fs::path> outputs;
  for (const auto& name : kReportFiles) {
    if (fs::exists(ctx.file(name))) {
      fs::copy_file(ctx.file(name), dir / name, fs::copy_options::overwrite_existing);
      outputs.push_back(dir / name);
    }
  }
  auto load = [&](const std::string& name) {
    return json::parse(io::read_file(ctx.file(name)), nullptr, false);
  };
  const json cs = load("cluster_stats.json");
  const json ho = load("homophily.json");
  const json te = load("temporal.json");
  const json re = load("regression.json");

  std::ostringstream md;
  md << "# Analysis report\n\n";
  md << "Edge threshold: " << cs.value("threshold", 0.0) << "\n\n";
  md << "## Clusters\n\n";
  md << "- records: " << cs.value("n_nodes", 0) << "\n";
  md << "- clusters: " << cs.value("n_clusters", 0) << "\n";
  md << "- singleton fraction: " << cs.value("singleton_fraction", 0.0) << "\n";
  md << "- repeated claims: " << cs.value("n_repeated_claims", 0) << "\n\n";
  md << "## Language homophily\n\n";
  if (ho.contains("observed")) {
    md << "- multilingual fraction: " << ho["observed"]["multilingual_fraction"].get<double>() << " (null "
       << ho["expected_multilingual_fraction"].get<double>() << ")\n";
    md << "- p-value (mono-lingual count): " << ho["p_value"].get<double>() << "\n";
    if (ho["family_share"].contains("share")) {
      md << "- same-family share of multilingual clusters: " << ho["family_share"]["share"].get<double>() << "\n";
    }
  } else {
    md << "- unavailable\n";
  }
  md << "\n## Time\n\n";
  if (te.contains("cdf") && te["cdf"].contains("edges")) {
    md << "- edges within 7 days: " << te["cdf"]["edges"]["le_7_days"].get<double>() << "\n";
    md << "- edges within 21 days: " << te["cdf"]["edges"]["le_21_days"].get<double>() << "\n";
  }
  if (te.contains("drift_test") && te["drift_test"].contains("t")) {
    md << "- drift test: t = " << te["drift_test"]["t"].get<double>() << ", p = " << te["drift_test"]["p"].get<double>()
       << "\n";
  }
  md << "\n## Paths\n\n";
  if (re.contains("models") && re["models"].contains("unique_languages")) {
    for (const char* model : {"unique_languages", "language_switches"}) {
      md << "Model `" << model << "` (N = " << re["models"][model]["n_observations"].get<std::size_t>()
         << ", adj. R2 = " << re["models"][model]["adjusted_r_squared"].get<double>() << ")\n\n";
      md << "| term | estimate | SE |\n|---|---|---|\n";
      for (const auto& coef : re["models"][model]["coefficients"]) {
        md << "| " << coef["name"].get<std::string>() << " | " << coef["estimate"].get<double>()
           << coef["stars"].get<std::string>() << " | " << coef["standard_error"].get<double>() << " |\n";
      }
      md << "\n";
    }
  } else {
    md << "- unavailable\n\n";
  }
  md << "## Files\n\n";
  for (const auto& p : outputs) {
    md << "- [" << p.filename().string() << "](" << p.filename().string() << ")\n";
  }
  io::write_file(dir / "index.md", md.str());
  outputs.push_back(dir / "index.md");
  return outputs;
}

const std::vector<StageDef>& stage_defs() {
  static const std::vector<StageDef> defs{
      {Stage::Ingest, {}, {"ingested.jsonl", "drops_ingest.csv", "boilerplate_candidates.csv", "ingest_summary.json"},
       run_ingest},
      {Stage::Embed, {{"ingested.jsonl", Stage::Ingest}}, {"embeddings.cgv", "records.jsonl", "drops_editorial.csv"},
       run_embed},
      {Stage::Index, {{"embeddings.cgv", Stage::Embed}}, {"index.cgi"}, run_index},
      {Stage::Cluster,
       {{"embeddings.cgv", Stage::Embed}, {"index.cgi", Stage::Index}},
       {"edges.csv", "clusters.csv", "cluster_stats.json"},
       run_cluster},
      {Stage::Eval,
       {{"embeddings.cgv", Stage::Embed}, {"records.jsonl", Stage::Embed}, {"index.cgi", Stage::Index}},
       {"eval.csv", "eval.json", "verdict_freq.csv"},
       run_eval},
      {Stage::Homophily,
       {{"records.jsonl", Stage::Embed}, {"edges.csv", Stage::Cluster}, {"clusters.csv", Stage::Cluster}},
       {"homophily.json", "homophily_replicates.csv"},
       run_homophily},
      {Stage::Temporal,
       {{"embeddings.cgv", Stage::Embed},
        {"records.jsonl", Stage::Embed},
        {"edges.csv", Stage::Cluster},
        {"clusters.csv", Stage::Cluster}},
       {"time_cdf.csv", "drift.csv", "temporal.json"},
       run_temporal},
      {Stage::Paths,
       {{"embeddings.cgv", Stage::Embed},
        {"records.jsonl", Stage::Embed},
        {"edges.csv", Stage::Cluster},
        {"clusters.csv", Stage::Cluster}},
       {"paths.csv", "regression.json"},
       run_paths},
      {Stage::Tokens,
       {{"records.jsonl", Stage::Embed}, {"edges.csv", Stage::Cluster}, {"clusters.csv", Stage::Cluster}},
       {"tokens_repeated.csv", "tokens_multilingual.csv", "tokens.json"},
       run_tokens},
      {Stage::Report,
       {{"cluster_stats.json", Stage::Cluster},
        {"eval.json", Stage::Eval},
        {"homophily.json", Stage::Homophily},
        {"temporal.json", Stage::Temporal},
        {"regression.json", Stage::Paths},
        {"tokens.json", Stage::Tokens}},
       {"report"},
       run_report},
  };
  return defs;
}

std::string config_hash(const PipelineConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(io::fnv1a(to_json(config).dump())));
  return buf;
}

}  // namespace

StageOutcome run_stage(Stage stage, const PipelineOptions& options, Logger& logger) {
  const StageDef* def = nullptr;
  for (const auto& d : stage_defs()) {
    if (d.stage == stage) {
      def = &d;
    }
  }
  const std::string name(to_string(stage));
  fs::create_directories(options.workdir);

  std::map<std::string, std::string> inputs;
  for (const auto& [file, producer] : def->inputs) {
    const fs::path p = options.workdir / file;
    if (!fs::exists(p)) {
      throw Error(name + ": missing " + file + ": run `" + std::string(to_string(producer)) + "` first");
    }
    inputs[file] = io::file_hash(p);
  }
  if (stage == Stage::Ingest && !options.input.empty() && fs::exists(options.input)) {
    inputs["input:" + fs::absolute(options.input).lexically_normal().string()] = io::file_hash(options.input);
  }
  if (stage == Stage::Embed) {
    if (!options.vectors.empty() && fs::exists(options.vectors)) {
      inputs["vectors:" + fs::absolute(options.vectors).lexically_normal().string()] =
          io::file_hash(options.vectors);
    } else if (!options.embed_endpoint.empty()) {
      inputs["endpoint:" + options.embed_endpoint] = "";
    }
  }
  if (stage == Stage::Tokens) {
    inputs["translator:" + options.translator_endpoint] = "";
    inputs["tagger:" + options.tagger_endpoint] = "";
  }

  Manifest manifest(options.workdir);
  manifest.load();
  const std::string chash = config_hash(options.config);
  if (!options.force && manifest.up_to_date(stage, chash, inputs)) {
    logger.info(name, "up to date");
    return {stage, true, 0.0};
  }

  logger.info(name, "start");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<fs::path> outputs;
  try {
    outputs = def->run(Context{options, logger, name});
  } catch (...) {
    for (const auto& out : def->outputs) {
      std::error_code ec;
      fs::remove_all(options.workdir / out, ec);
    }
    throw;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest.load();
  manifest.set_config(to_json(options.config));
  manifest.record(stage, chash, inputs, outputs, seconds);
  manifest.save();
  logger.info(name, "done", {{"seconds", seconds}, {"outputs", outputs.size()}});
  return {stage, false, seconds};
}

std::vector<StageOutcome> run_all(const PipelineOptions& options, Logger& logger) {
  std::vector<StageOutcome> outcomes;
  for (Stage s : all_stages()) {
    outcomes.push_back(run_stage(s, options, logger));
  }
  return outcomes;
}

}  // namespace claimgraph
