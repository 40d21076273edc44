#include "claimgraph/synth.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>

#include "claimgraph/io.hpp"
#include "claimgraph/parallel.hpp"
#include "claimgraph/rng.hpp"

namespace claimgraph {

namespace {

constexpr int kCenterBudget = 10000;
constexpr std::uint64_t kCenterStream = 0;
constexpr std::uint64_t kSizeStream = 1;
constexpr std::uint64_t kDuplicateStream = 2;
constexpr std::uint64_t kClusterStreamBase = 1000;

const std::vector<std::string> kTopics{
    "vaccine", "mask",     "lockdown", "virus",    "election", "ballot",  "hospital", "doctor",
    "pfizer",  "moderna",  "tower",    "signal",   "border",   "police",  "school",   "teacher",
    "farmer",  "price",    "fuel",     "bank",     "minister", "senator", "protest",  "climate",
    "flood",   "fire",     "drought",  "army",     "missile",  "refugee", "airport",  "ticket",
    "market",  "tax",      "pension",  "salary",   "village",  "river",   "bridge",   "dam",
    "phone",   "video",    "photo",    "message",  "website",  "cure",    "herb",     "lemon",
    "garlic",  "water",    "test",     "kit",      "oxygen",   "bed",     "curfew",   "festival",
    "church",  "temple",   "mosque",   "stadium"};

const std::vector<std::string> kBoilerplate{"WHATSAPP - CHECK: ", "Verificamos: ", "FACT CHECK: "};

// Raw spellings per verdict class with their relative weights.
struct Spelling {
  const char* text;
  double weight;
};
const std::vector<std::vector<Spelling>> kVerdictSpellings{
    {{"False", 0.75}, {"FALSE", 0.15}, {"Falso", 0.1}},
    {{"Misleading", 0.6}, {"Mostly False", 0.4}},
    {{"Mostly True", 1.0}},
    {{"True", 0.8}, {"Verdadero", 0.2}}};
const std::vector<double> kVerdictClassWeights{0.6, 0.2, 0.1, 0.1};

template <typename Weights>
std::size_t draw_index(Rng& rng, const Weights& weights, double total) {
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) {
      return i;
    }
  }
  return weights.size() - 1;
}

std::vector<double> random_unit(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) {
    x /= norm;
  }
  return v;
}

void normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) {
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : v) {
    x /= norm;
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

// Unit vector orthogonal to w.
std::vector<double> orthogonal_unit(Rng& rng, const std::vector<double>& w) {
  for (;;) {
    std::vector<double> g(w.size());
    for (double& x : g) {
      x = rng.normal();
    }
    const double proj = dot(g, w);
    double norm = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] -= proj * w[i];
      norm += g[i] * g[i];
    }
    if (norm > 1e-12) {
      norm = std::sqrt(norm);
      for (double& x : g) {
        x /= norm;
      }
      return g;
    }
  }
}

std::vector<float> to_float(const std::vector<double>& v) {
  return {v.begin(), v.end()};
}

struct Member {
  Date date;
  std::vector<double> vector;
  std::optional<std::string> language;
  std::size_t verdict_class;
  std::string verdict;
  std::size_t domain;
  std::size_t author;
};

struct GeneratedCluster {
  std::string language;
  std::array<std::size_t, 3> topics{};
  std::vector<Member> members;
};

std::string domain_name(std::size_t d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "factcheck%02zu.example", d);
  return buf;
}

}  // namespace

void validate(const SynthSpec& spec) {
  auto fail = [](const std::string& what) { throw Error("synth spec: " + what); };
  if (spec.n_records == 0 && spec.n_clusters == 0) fail("n_clusters or n_records must be positive");
  if (spec.dimension < 3) fail("dimension must be at least 3");
  if (spec.size_weights.empty()) fail("size_weights is empty");
  if (spec.languages.empty()) fail("languages is empty");
  auto check_probabilities = [&](const std::vector<double>& p, const std::string& name) {
    double sum = 0.0;
    for (double x : p) {
      if (!(x >= 0.0)) fail(name + " has a negative entry");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail(name + " must sum to 1");
  };
  check_probabilities(spec.size_weights, "size_weights");
  std::vector<double> lang_p;
  for (const auto& [code, p] : spec.languages) {
    if (code.empty()) fail("empty language code");
    lang_p.push_back(p);
  }
  check_probabilities(lang_p, "language probabilities");
  if (!(spec.intra_similarity < 1.0 && spec.intra_similarity > spec.edge_threshold &&
        spec.edge_threshold > spec.inter_similarity_cap && spec.inter_similarity_cap > -1.0)) {
    fail("need 1 > intra_similarity > edge_threshold > inter_similarity_cap > -1");
  }
  for (double r : {spec.homophily, spec.verdict_consistency, spec.missing_language_rate,
                   spec.exact_duplicate_rate, spec.editorial_duplicate_rate,
                   spec.boilerplate_domain_rate, spec.headline_fallback_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) fail("rates must lie in [0, 1]");
  }
  if (!(spec.drift_rate >= 0.0)) fail("drift_rate must be non-negative");
  if (spec.date_spread_days < 0) fail("date_spread_days must be non-negative");
  if (spec.date_range.end.days() - spec.date_range.start.days() < spec.date_spread_days + 31) {
    fail("date_range is too short for date_spread_days plus duplicate offsets");
  }
  if (spec.n_domains == 0) fail("n_domains must be positive");
}

nlohmann::json to_json(const SynthSpec& s) {
  // An array of [code, probability] keeps the draw order stable.
  nlohmann::json langs = nlohmann::json::array();
  for (const auto& [code, p] : s.languages) {
    langs.push_back({code, p});
  }
  return {{"n_clusters", s.n_clusters},
          {"n_records", s.n_records},
          {"size_weights", s.size_weights},
          {"dimension", s.dimension},
          {"intra_similarity", s.intra_similarity},
          {"inter_similarity_cap", s.inter_similarity_cap},
          {"edge_threshold", s.edge_threshold},
          {"languages", langs},
          {"homophily", s.homophily},
          {"drift_rate", s.drift_rate},
          {"date_range", {s.date_range.start.iso(), s.date_range.end.iso()}},
          {"date_spread_days", s.date_spread_days},
          {"n_domains", s.n_domains},
          {"verdict_consistency", s.verdict_consistency},
          {"missing_language_rate", s.missing_language_rate},
          {"exact_duplicate_rate", s.exact_duplicate_rate},
          {"editorial_duplicate_rate", s.editorial_duplicate_rate},
          {"boilerplate_domain_rate", s.boilerplate_domain_rate},
          {"headline_fallback_rate", s.headline_fallback_rate},
          {"seed", s.seed}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) {
    throw Error("synth spec: expected a JSON object");
  }
  SynthSpec s;
  for (const auto& [key, v] : doc.items()) {
    try {
      if (key == "n_clusters") s.n_clusters = v.get<std::size_t>();
      else if (key == "n_records") s.n_records = v.get<std::size_t>();
      else if (key == "size_weights") s.size_weights = v.get<std::vector<double>>();
      else if (key == "dimension") s.dimension = v.get<std::size_t>();
      else if (key == "intra_similarity") s.intra_similarity = v.get<double>();
      else if (key == "inter_similarity_cap") s.inter_similarity_cap = v.get<double>();
      else if (key == "edge_threshold") s.edge_threshold = v.get<double>();
      else if (key == "languages") {
        s.languages.clear();
        if (v.is_object()) {
          for (const auto& [code, p] : v.items()) {
            s.languages.emplace_back(code, p.get<double>());
          }
        } else {
          for (const auto& entry : v) {
            s.languages.emplace_back(entry.at(0).get<std::string>(), entry.at(1).get<double>());
          }
        }
      } else if (key == "homophily") s.homophily = v.get<double>();
      else if (key == "drift_rate") s.drift_rate = v.get<double>();
      else if (key == "date_range") {
        s.date_range = {Date::from_iso(v.at(0).get<std::string>()),
                        Date::from_iso(v.at(1).get<std::string>())};
      } else if (key == "date_spread_days") s.date_spread_days = v.get<int>();
      else if (key == "n_domains") s.n_domains = v.get<std::size_t>();
      else if (key == "verdict_consistency") s.verdict_consistency = v.get<double>();
      else if (key == "missing_language_rate") s.missing_language_rate = v.get<double>();
      else if (key == "exact_duplicate_rate") s.exact_duplicate_rate = v.get<double>();
      else if (key == "editorial_duplicate_rate") s.editorial_duplicate_rate = v.get<double>();
      else if (key == "boilerplate_domain_rate") s.boilerplate_domain_rate = v.get<double>();
      else if (key == "headline_fallback_rate") s.headline_fallback_rate = v.get<double>();
      else if (key == "seed") s.seed = v.get<std::uint64_t>();
      else throw Error("synth spec: unknown key \"" + key + "\"");
    } catch (const nlohmann::json::exception& e) {
      throw Error("synth spec: bad value for \"" + key + "\": " + e.what());
    }
  }
  return s;
}

SynthCorpus generate(const SynthSpec& spec) {
  validate(spec);
  const std::size_t d = spec.dimension;

  // Cluster sizes.
  std::vector<std::size_t> sizes;
  {
    Rng rng(derive_seed(spec.seed, kSizeStream));
    std::size_t total = 0;
    while (spec.n_records > 0 ? total < spec.n_records : sizes.size() < spec.n_clusters) {
      std::size_t size = draw_index(rng, spec.size_weights, 1.0) + 1;
      if (spec.n_records > 0) {
        size = std::min(size, spec.n_records - total);
      }
      sizes.push_back(size);
      total += size;
    }
  }
  const std::size_t n_clusters = sizes.size();

  // Centers under the inter-similarity cap, placed one at a time.
  std::vector<std::vector<double>> centers;
  centers.reserve(n_clusters);
  {
    Rng rng(derive_seed(spec.seed, kCenterStream));
    for (std::size_t c = 0; c < n_clusters; ++c) {
      bool placed = false;
      for (int attempt = 0; attempt < kCenterBudget && !placed; ++attempt) {
        auto v = random_unit(rng, d);
        std::atomic<bool> clash{false};
        parallel_for(centers.size(), [&](std::size_t j) {
          if (!clash.load(std::memory_order_relaxed) && dot(v, centers[j]) > spec.inter_similarity_cap) {
            clash = true;
          }
        });
        if (!clash) {
          centers.push_back(std::move(v));
          placed = true;
        }
      }
      if (!placed) {
        throw Error("synth spec infeasible: center " + std::to_string(c) + " not placed within " +
                    std::to_string(kCenterBudget) + " draws under inter_similarity_cap");
      }
    }
  }

  std::vector<double> lang_weights;
  for (const auto& l : spec.languages) {
    lang_weights.push_back(l.second);
  }
  std::vector<std::size_t> domain_boilerplate(spec.n_domains, kBoilerplate.size());
  {
    Rng rng(derive_seed(spec.seed, kDuplicateStream + 1));
    for (auto& b : domain_boilerplate) {
      if (rng.bernoulli(spec.boilerplate_domain_rate)) {
        b = rng.below(kBoilerplate.size());
      }
    }
  }

  const double eta = std::sqrt(1.0 / spec.intra_similarity - 1.0);
  const int first_day = spec.date_range.start.days();
  const int start_span = spec.date_range.end.days() - first_day - spec.date_spread_days - 30;

  std::vector<GeneratedCluster> clusters(n_clusters);
  parallel_for(n_clusters, [&](std::size_t c) {
    Rng rng(derive_seed(spec.seed, kClusterStreamBase + c));
    GeneratedCluster& g = clusters[c];
    g.language = spec.languages[draw_index(rng, lang_weights, 1.0)].first;
    for (auto& t : g.topics) {
      t = rng.below(kTopics.size());
    }
    const int start = first_day + static_cast<int>(rng.below(static_cast<std::uint64_t>(start_span) + 1));
    std::vector<int> days(sizes[c]);
    for (int& day : days) {
      day = start + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.date_spread_days) + 1));
    }
    std::sort(days.begin(), days.end());
    const std::size_t cluster_class = draw_index(rng, kVerdictClassWeights, 1.0);

    std::vector<double> walk = centers[c];
    for (std::size_t k = 0; k < sizes[c]; ++k) {
      if (k > 0 && spec.drift_rate > 0.0 && days[k] > days[k - 1]) {
        // Brownian step on the sphere: E[cos] ~ exp(-rate * dt).
        const double sigma = std::sqrt(2.0 * spec.drift_rate * (days[k] - days[k - 1]) /
                                       static_cast<double>(d - 1));
        for (double& x : walk) {
          x += sigma * rng.normal();
        }
        normalize(walk);
      }
      Member m;
      m.date = Date(days[k]);
      const auto u = orthogonal_unit(rng, walk);
      m.vector.resize(d);
      for (std::size_t i = 0; i < d; ++i) {
        m.vector[i] = walk[i] + eta * u[i];
      }
      normalize(m.vector);
      if (!rng.bernoulli(spec.missing_language_rate)) {
        m.language = rng.bernoulli(spec.homophily)
                         ? g.language
                         : spec.languages[draw_index(rng, lang_weights, 1.0)].first;
      }
      m.verdict_class = cluster_class;
      if (!rng.bernoulli(spec.verdict_consistency)) {
        m.verdict_class = (cluster_class + 1 + rng.below(kVerdictSpellings.size() - 1)) %
                          kVerdictSpellings.size();
      }
      const auto& spellings = kVerdictSpellings[m.verdict_class];
      std::vector<double> sw;
      for (const auto& s : spellings) {
        sw.push_back(s.weight);
      }
      m.verdict = spellings[draw_index(rng, sw, 1.0)].text;
      m.domain = rng.below(spec.n_domains);
      m.author = rng.below(3);
      g.members.push_back(std::move(m));
    }
  });

  SynthCorpus corpus{{}, EmbeddingStore(d), {}, {}, {}, n_clusters};
  Rng extra(derive_seed(spec.seed, kDuplicateStream));
  RecordId next_id = 1;

  auto emit = [&](const Member& m, RecordId id, long long cluster, const GeneratedCluster& g,
                  const std::string& text, const std::string& text_en) {
    nlohmann::json r;
    r["id"] = id;
    const std::string domain = domain_name(m.domain);
    std::string claim = text;
    if (domain_boilerplate[m.domain] < kBoilerplate.size()) {
      claim = kBoilerplate[domain_boilerplate[m.domain]] + claim;
    }
    if (extra.bernoulli(spec.headline_fallback_rate)) {
      r["claimReviewed"] = "";
      r["headline"] = claim;
    } else {
      r["claimReviewed"] = claim;
    }
    r["url"] = "https://www." + domain + "/fact-check/" + std::to_string(id);
    r["author"] = {{"@type", "Organization"},
                   {"name", domain + " desk " + std::to_string(m.author + 1)}};
    r["datePublished"] = m.date.iso();
    r["reviewRating"] = {{"@type", "Rating"}, {"alternateName", m.verdict}};
    if (m.language) {
      r["language"] = *m.language;
    }
    r["claimTextEn"] = text_en;
    r["nounLemmas"] = {kTopics[g.topics[0]], kTopics[g.topics[1]], kTopics[g.topics[2]]};
    corpus.records.push_back(std::move(r));
    corpus.vectors.add(id, to_float(m.vector));
    corpus.truth.push_back(cluster);
  };

  for (std::size_t c = 0; c < n_clusters; ++c) {
    const auto& g = clusters[c];
    corpus.cluster_language.push_back(g.language);
    for (std::size_t k = 0; k < g.members.size(); ++k) {
      const Member& m = g.members[k];
      const RecordId id = next_id++;
      char body[160];
      std::snprintf(body, sizeof body, "claim %05zu about the %s and the %s near a %s, report %06llu",
                    c, kTopics[g.topics[0]].c_str(), kTopics[g.topics[1]].c_str(),
                    kTopics[g.topics[2]].c_str(), static_cast<unsigned long long>(id));
      const std::string lang_tag = m.language ? *m.language : "xx";
      const std::string text = "[" + lang_tag + "] " + body;
      emit(m, id, static_cast<long long>(c), g, text, body);

      if (extra.bernoulli(spec.exact_duplicate_rate)) {
        // Same text up to case and punctuation, republished elsewhere later.
        Member copy = m;
        copy.date = Date(m.date.days() + 1 + static_cast<int>(extra.below(30)));
        copy.domain = (m.domain + 1 + extra.below(spec.n_domains)) % spec.n_domains;
        std::string shouted = text;
        std::transform(shouted.begin(), shouted.end(), shouted.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
        const RecordId dup = next_id++;
        emit(copy, dup, static_cast<long long>(c), g, shouted + "!", body);
        corpus.duplicates.push_back({dup, id, "exact"});
      }
      if (extra.bernoulli(spec.editorial_duplicate_rate)) {
        // Same outlet re-publishes a lightly edited version.
        Member copy = m;
        copy.date = Date(m.date.days() + 1 + static_cast<int>(extra.below(30)));
        for (double& x : copy.vector) {
          x += 0.02 / std::sqrt(static_cast<double>(d)) * extra.normal();
        }
        normalize(copy.vector);
        const RecordId dup = next_id++;
        emit(copy, dup, static_cast<long long>(c), g, text + " (updated)", body);
        corpus.duplicates.push_back({dup, id, "editorial"});
      }
    }
  }
  return corpus;
}

void write_corpus(const SynthCorpus& corpus, const SynthSpec& spec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string jsonl;
  for (const auto& r : corpus.records) {
    jsonl += r.dump();
    jsonl += '\n';
  }
  io::write_file(dir / "records.jsonl", jsonl);
  write_vector_file(corpus.vectors, dir / "vectors.cgv");

  nlohmann::json truth;
  truth["spec"] = to_json(spec);
  truth["n_records"] = corpus.records.size();
  truth["n_clusters"] = corpus.n_clusters;
  nlohmann::json partition = nlohmann::json::array();
  for (std::size_t i = 0; i < corpus.truth.size(); ++i) {
    partition.push_back({corpus.vectors.id_at(i), corpus.truth[i]});
  }
  truth["partition"] = std::move(partition);
  truth["cluster_language"] = corpus.cluster_language;
  nlohmann::json dups = nlohmann::json::array();
  for (const auto& dup : corpus.duplicates) {
    dups.push_back({{"id", dup.id}, {"original", dup.original}, {"kind", dup.kind}});
  }
  truth["duplicates"] = std::move(dups);
  io::write_file(dir / "truth.json", truth.dump(1) + "\n");
}

}  // namespace claimgraph
