#include "claimgraph/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "claimgraph/parallel.hpp"

namespace claimgraph {

std::string_view to_string(PairPopulation p) {
  switch (p) {
    case PairPopulation::Edges:
      return "edges";
    case PairPopulation::Unconnected:
      return "unconnected_pairs";
    case PairPopulation::All:
      return "all_pairs";
  }
  return "edges";
}

PairDiffs pair_time_diffs(std::span<const Cluster> clusters, const Adjacency& adjacency,
                          const EmbeddingStore& store, PairPopulation population) {
  std::vector<PairDiffs> per_cluster(clusters.size());
  parallel_for(clusters.size(), [&](std::size_t k) {
    const Cluster& c = clusters[k];
    if (c.size() < 2) {
      return;
    }
    if (c.dates.size() != c.members.size()) {
      throw Error("cluster " + std::to_string(c.cluster_id) + " has no attached dates");
    }
    std::vector<std::size_t> rows(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      rows[i] = store.index_of(c.members[i]);
    }
    auto& out = per_cluster[k];
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = i + 1; j < c.size(); ++j) {
        if (population != PairPopulation::All) {
          const bool linked = adjacency.connected(c.members[i], c.members[j]);
          if (linked != (population == PairPopulation::Edges)) {
            continue;
          }
        }
        if (!c.dates[i] || !c.dates[j]) {
          ++out.excluded_pairs;
          continue;
        }
        out.pairs.push_back({c.members[i], c.members[j], days_between(*c.dates[i], *c.dates[j]),
                             store.row_similarity(rows[i], rows[j])});
      }
    }
  });
  PairDiffs all;
  for (auto& p : per_cluster) {
    all.pairs.insert(all.pairs.end(), p.pairs.begin(), p.pairs.end());
    all.excluded_pairs += p.excluded_pairs;
  }
  return all;
}

double TimeDiffCdf::at(int day) const {
  if (day < 0) {
    return 0.0;
  }
  if (static_cast<std::size_t>(day) >= cum_fraction.size()) {
    return 1.0;
  }
  return cum_fraction[static_cast<std::size_t>(day)];
}

TimeDiffCdf time_diff_cdf(std::span<const PairDiff> pairs, PairPopulation population) {
  if (pairs.empty()) {
    throw Error("time difference CDF of an empty pair list");
  }
  int max_day = 0;
  for (const auto& p : pairs) {
    max_day = std::max(max_day, p.days);
  }
  std::vector<std::size_t> counts(static_cast<std::size_t>(max_day) + 1, 0);
  for (const auto& p : pairs) {
    ++counts[static_cast<std::size_t>(p.days)];
  }
  TimeDiffCdf cdf;
  cdf.population = population;
  cdf.n_pairs = pairs.size();
  cdf.cum_fraction.resize(counts.size());
  std::size_t acc = 0;
  for (std::size_t d = 0; d < counts.size(); ++d) {
    acc += counts[d];
    cdf.cum_fraction[d] = static_cast<double>(acc) / static_cast<double>(pairs.size());
  }
  cdf.cum_fraction.back() = 1.0;
  return cdf;
}

std::vector<DriftRow> drift_curve(std::span<const PairDiff> pairs, int max_days, int bin_width) {
  if (pairs.empty()) {
    throw Error("drift curve of an empty pair list");
  }
  if (bin_width < 1) {
    throw Error("drift bin width must be at least one day");
  }
  std::map<int, std::vector<double>> bins;
  for (const auto& p : pairs) {
    if (p.days <= max_days) {
      bins[p.days / bin_width].push_back(p.similarity);
    }
  }
  std::vector<DriftRow> rows;
  for (const auto& [bin, sims] : bins) {
    const auto s = stats::mean_sd_se(sims);
    rows.push_back({bin * bin_width, s.mean, s.se, s.n});
  }
  return rows;
}

stats::Correlation drift_trend(std::span<const DriftRow> curve) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& r : curve) {
    x.push_back(r.bin_start);
    y.push_back(r.mean_similarity);
  }
  return stats::spearman(x, y);
}

DriftTest drift_test(std::span<const PairDiff> pairs, int early_max_days, int late_min_days,
                     int late_max_days) {
  std::vector<double> early;
  std::vector<double> late;
  for (const auto& p : pairs) {
    if (p.days <= early_max_days) {
      early.push_back(p.similarity);
    } else if (p.days >= late_min_days && p.days <= late_max_days) {
      late.push_back(p.similarity);
    }
  }
  if (early.size() < 2 || late.size() < 2) {
    throw Error("drift test needs at least two pairs per window (early " +
                std::to_string(early.size()) + ", late " + std::to_string(late.size()) + ")");
  }
  DriftTest t{stats::welch_t(early, late), early.size(), late.size(), 0.0, 0.0};
  t.mean_early = stats::mean_sd_se(early).mean;
  t.mean_late = stats::mean_sd_se(late).mean;
  return t;
}

DirectionalComparison compare_time_gaps(std::span<const PairDiff> connected,
                                        std::span<const PairDiff> unconnected) {
  auto days = [](std::span<const PairDiff> ps) {
    std::vector<double> d;
    d.reserve(ps.size());
    for (const auto& p : ps) {
      d.push_back(p.days);
    }
    return d;
  };
  const auto a = days(connected);
  const auto b = days(unconnected);
  DirectionalComparison c{stats::welch_t(a, b), 0.0, 0.0, stats::mean_sd_se(a).mean,
                          stats::mean_sd_se(b).mean};
  const double half = c.welch.p / 2.0;
  c.p_connected_greater = c.welch.t > 0 ? half : 1.0 - half;
  c.p_connected_less = c.welch.t < 0 ? half : 1.0 - half;
  return c;
}

}  // namespace claimgraph
