#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "claimgraph/simgraph.hpp"

namespace claimgraph {

/// Distinct-language classes: mono, bi, tri, four or more.
inline constexpr std::size_t kArityClasses = 4;
inline constexpr std::array<std::string_view, kArityClasses> kArityNames{"mono", "bi", "tri",
                                                                         "four_plus"};

struct LingualityProfile {
  std::array<std::size_t, kArityClasses> counts{};
  double multilingual_fraction = 0.0;
  std::size_t excluded_members = 0;   // members without a language code
  std::size_t excluded_clusters = 0;  // fewer than two members with a language

  [[nodiscard]] std::size_t n_clusters() const;
  [[nodiscard]] std::size_t mono() const { return counts[0]; }
};

/// Language-bearing members of every cluster with at least two of them.
/// Codes are lowercased primary subtags ("pt-BR" -> "pt").
/// Members without a language are dropped; clusters left with fewer than
/// two members are excluded. Both are counted.
struct LanguageClusters {
  std::vector<std::vector<std::uint32_t>> clusters;  // language codes per member
  std::vector<std::string> languages;                // code -> language
  std::size_t excluded_members = 0;
  std::size_t excluded_clusters = 0;
};

LanguageClusters language_clusters(std::span<const Cluster> clusters);

/// Bins every eligible cluster by its number of distinct languages. Throws
/// when no cluster is eligible.
LingualityProfile linguality_profile(const LanguageClusters& lc);
LingualityProfile linguality_profile(std::span<const Cluster> clusters);

/// Empirical language frequencies over the members in `lc`, indexed by code.
std::vector<double> language_distribution(const LanguageClusters& lc);

struct NullModel {
  std::vector<LingualityProfile> replicates;
  std::array<double, kArityClasses> expected_mean{};
  double expected_multilingual_fraction = 0.0;
  std::uint64_t seed = 0;
};

/// Redraws every member's language i.i.d. from `distribution` while keeping
/// cluster memberships fixed. Replicate r uses seed + r.
NullModel null_model_profile(const LanguageClusters& lc, std::span<const double> distribution,
                             std::size_t replicates, std::uint64_t seed);

struct HomophilyTest {
  LingualityProfile observed;
  std::array<double, kArityClasses> expected_mean{};
  std::array<double, kArityClasses> per_arity_p{};
  double p_value = 1.0;  // on the mono-lingual cluster count
  double alpha = 0.01;
  bool significant = false;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
};

HomophilyTest homophily_test(const LingualityProfile& observed, const NullModel& null_model,
                             double alpha);

class FamilyTable {
 public:
  FamilyTable() = default;
  explicit FamilyTable(std::unordered_map<std::string, std::string> families);

  /// Lowercased primary subtag lookup ("pt-BR" -> "pt"); "unknown" if absent.
  [[nodiscard]] std::string family_of(std::string_view language) const;
  [[nodiscard]] std::size_t size() const { return families_.size(); }

 private:
  std::unordered_map<std::string, std::string> families_;
};

/// JSON object {"code": "family", ...}.
FamilyTable parse_family_table(std::string_view json_text);
FamilyTable load_family_table(const std::filesystem::path& path);

struct FamilyShare {
  double share = 0.0;
  std::size_t same_family = 0;
  std::size_t n_clusters = 0;
};

/// Share of multilingual clusters whose languages all fall in one known
/// family. Clusters with fewer than two distinct languages are ignored;
/// throws when none remain.
FamilyShare family_share(const LanguageClusters& lc, const FamilyTable& table);

}  // namespace claimgraph
