#include "claimgraph/homophily.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include <json.hpp>

#include "claimgraph/io.hpp"
#include "claimgraph/parallel.hpp"
#include "claimgraph/rng.hpp"
#include "claimgraph/stats.hpp"

namespace claimgraph {

namespace {

// "pt-BR" and "PT" both count as "pt".
std::string primary_subtag(std::string_view language) {
  std::string key;
  for (char ch : language.substr(0, language.find_first_of("-_"))) {
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  return key;
}

}  // namespace

std::size_t LingualityProfile::n_clusters() const {
  std::size_t n = 0;
  for (auto c : counts) {
    n += c;
  }
  return n;
}

LanguageClusters language_clusters(std::span<const Cluster> clusters) {
  LanguageClusters out;
  std::vector<std::vector<std::string>> kept;
  std::map<std::string, std::uint32_t> codes;
  for (const auto& c : clusters) {
    if (c.size() < 2) {
      continue;
    }
    if (c.languages.size() != c.members.size()) {
      throw Error("cluster " + std::to_string(c.cluster_id) + " has no attached languages");
    }
    std::vector<std::string> langs;
    for (const auto& l : c.languages) {
      std::string primary = l ? primary_subtag(*l) : std::string();
      if (!primary.empty()) {
        langs.push_back(std::move(primary));
      } else {
        ++out.excluded_members;
      }
    }
    if (langs.size() < 2) {
      ++out.excluded_clusters;
      continue;
    }
    for (const auto& l : langs) {
      codes.emplace(l, 0);
    }
    kept.push_back(std::move(langs));
  }
  // Codes follow sorted language order so they do not depend on cluster order.
  for (auto& [lang, code] : codes) {
    code = static_cast<std::uint32_t>(out.languages.size());
    out.languages.push_back(lang);
  }
  for (const auto& langs : kept) {
    auto& coded = out.clusters.emplace_back();
    for (const auto& l : langs) {
      coded.push_back(codes.at(l));
    }
  }
  return out;
}

namespace {

std::size_t arity_class(std::vector<std::uint32_t> langs) {
  std::sort(langs.begin(), langs.end());
  const auto distinct =
      static_cast<std::size_t>(std::unique(langs.begin(), langs.end()) - langs.begin());
  return std::min<std::size_t>(distinct, kArityClasses) - 1;
}

LingualityProfile profile_of(const std::vector<std::vector<std::uint32_t>>& clusters) {
  LingualityProfile p;
  for (const auto& c : clusters) {
    ++p.counts[arity_class(c)];
  }
  const std::size_t n = p.n_clusters();
  if (n > 0) {
    p.multilingual_fraction = static_cast<double>(n - p.counts[0]) / static_cast<double>(n);
  }
  return p;
}

}  // namespace

LingualityProfile linguality_profile(const LanguageClusters& lc) {
  if (lc.clusters.empty()) {
    throw Error("no cluster has two or more members with a language");
  }
  LingualityProfile p = profile_of(lc.clusters);
  p.excluded_members = lc.excluded_members;
  p.excluded_clusters = lc.excluded_clusters;
  return p;
}

LingualityProfile linguality_profile(std::span<const Cluster> clusters) {
  return linguality_profile(language_clusters(clusters));
}

std::vector<double> language_distribution(const LanguageClusters& lc) {
  std::vector<double> freq(lc.languages.size(), 0.0);
  double total = 0.0;
  for (const auto& c : lc.clusters) {
    for (auto code : c) {
      freq[code] += 1.0;
      total += 1.0;
    }
  }
  if (total == 0.0) {
    throw Error("no language-bearing members");
  }
  for (double& f : freq) {
    f /= total;
  }
  return freq;
}

NullModel null_model_profile(const LanguageClusters& lc, std::span<const double> distribution,
                             std::size_t replicates, std::uint64_t seed) {
  if (lc.clusters.empty()) {
    throw Error("no cluster has two or more members with a language");
  }
  if (distribution.empty()) {
    throw Error("empty language distribution");
  }
  std::vector<double> cdf(distribution.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < distribution.size(); ++i) {
    if (!(distribution[i] >= 0.0)) {
      throw Error("language distribution has a negative entry");
    }
    acc += distribution[i];
    cdf[i] = acc;
  }
  if (acc <= 0.0) {
    throw Error("language distribution sums to zero");
  }
  for (double& c : cdf) {
    c /= acc;
  }
  cdf.back() = 1.0;

  NullModel model;
  model.seed = seed;
  model.replicates.resize(replicates);
  parallel_for(replicates, [&](std::size_t r) {
    Rng rng(seed + r);
    std::vector<std::vector<std::uint32_t>> drawn;
    drawn.reserve(lc.clusters.size());
    for (const auto& c : lc.clusters) {
      auto& d = drawn.emplace_back(c.size());
      for (auto& code : d) {
        const double u = rng.uniform();
        code = static_cast<std::uint32_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        code = std::min<std::uint32_t>(code, static_cast<std::uint32_t>(cdf.size() - 1));
      }
    }
    model.replicates[r] = profile_of(drawn);
  });
  for (const auto& p : model.replicates) {
    for (std::size_t a = 0; a < kArityClasses; ++a) {
      model.expected_mean[a] += static_cast<double>(p.counts[a]);
    }
    model.expected_multilingual_fraction += p.multilingual_fraction;
  }
  if (replicates > 0) {
    for (auto& m : model.expected_mean) {
      m /= static_cast<double>(replicates);
    }
    model.expected_multilingual_fraction /= static_cast<double>(replicates);
  }
  return model;
}

HomophilyTest homophily_test(const LingualityProfile& observed, const NullModel& null_model,
                             double alpha) {
  HomophilyTest t;
  t.observed = observed;
  t.expected_mean = null_model.expected_mean;
  t.alpha = alpha;
  t.replicates = null_model.replicates.size();
  t.seed = null_model.seed;
  for (std::size_t a = 0; a < kArityClasses; ++a) {
    std::vector<double> samples;
    samples.reserve(null_model.replicates.size());
    for (const auto& p : null_model.replicates) {
      samples.push_back(static_cast<double>(p.counts[a]));
    }
    t.per_arity_p[a] = stats::permutation_p(static_cast<double>(observed.counts[a]), samples);
  }
  t.p_value = t.per_arity_p[0];
  t.significant = t.p_value < alpha;
  return t;
}

FamilyTable::FamilyTable(std::unordered_map<std::string, std::string> families)
    : families_(std::move(families)) {}

std::string FamilyTable::family_of(std::string_view language) const {
  auto it = families_.find(primary_subtag(language));
  return it == families_.end() ? std::string("unknown") : it->second;
}

FamilyTable parse_family_table(std::string_view json_text) {
  auto doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error("family table: expected a JSON object");
  }
  std::unordered_map<std::string, std::string> families;
  for (const auto& [code, family] : doc.items()) {
    if (!family.is_string()) {
      throw Error("family table: family for \"" + code + "\" is not a string");
    }
    families.emplace(code, family.get<std::string>());
  }
  return FamilyTable(std::move(families));
}

FamilyTable load_family_table(const std::filesystem::path& path) {
  return parse_family_table(io::read_file(path));
}

FamilyShare family_share(const LanguageClusters& lc, const FamilyTable& table) {
  FamilyShare s;
  for (const auto& c : lc.clusters) {
    std::vector<std::uint32_t> langs = c;
    std::sort(langs.begin(), langs.end());
    langs.erase(std::unique(langs.begin(), langs.end()), langs.end());
    if (langs.size() < 2) {
      continue;
    }
    ++s.n_clusters;
    const std::string first = table.family_of(lc.languages[langs[0]]);
    bool same = first != "unknown";
    for (std::size_t i = 1; same && i < langs.size(); ++i) {
      same = table.family_of(lc.languages[langs[i]]) == first;
    }
    if (same) {
      ++s.same_family;
    }
  }
  if (s.n_clusters == 0) {
    throw Error("no multilingual clusters");
  }
  s.share = static_cast<double>(s.same_family) / static_cast<double>(s.n_clusters);
  return s;
}

}  // namespace claimgraph
