#include "claimgraph/ann_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include "claimgraph/io.hpp"
#include "claimgraph/parallel.hpp"
#include "claimgraph/rng.hpp"

namespace claimgraph {

namespace {

bool ranks_before(const NeighborHit& a, const NeighborHit& b) {
  if (a.similarity != b.similarity) {
    return a.similarity > b.similarity;
  }
  return a.record_id < b.record_id;
}

void check_params(const IndexParams& p) {
  if (p.n_hyperplanes < 1) {
    throw Error("n_hyperplanes must be at least 1");
  }
  if (p.table_bits < 1 || p.table_bits > 64) {
    throw Error("table_bits must lie in [1, 64]");
  }
  if (p.n_probe_bits < 0) {
    throw Error("n_probe_bits must be nonnegative");
  }
}

// Number of signatures within Hamming distance `radius` of a `bits`-bit key,
// saturating at `cap`.
std::size_t probe_count(int bits, int radius, std::size_t cap) {
  std::size_t total = 0;
  std::size_t choose = 1;
  for (int i = 0; i <= radius && i <= bits; ++i) {
    total += choose;
    if (total >= cap) {
      return cap;
    }
    choose = choose * static_cast<std::size_t>(bits - i) / static_cast<std::size_t>(i + 1);
  }
  return total;
}

template <typename Visit>
void enumerate_flips(std::uint64_t key, int bits, int radius, int start, Visit& visit) {
  visit(key);
  if (radius == 0) {
    return;
  }
  for (int b = start; b < bits; ++b) {
    enumerate_flips(key ^ (std::uint64_t{1} << b), bits, radius - 1, b + 1, visit);
  }
}

}  // namespace

HyperplaneIndex HyperplaneIndex::build(std::shared_ptr<const EmbeddingStore> store,
                                       const IndexParams& params) {
  check_params(params);
  if (!store || store->empty()) {
    throw Error("cannot index an empty store");
  }
  const std::size_t d = store->dimension();
  std::vector<float> planes(static_cast<std::size_t>(params.n_hyperplanes) * d);
  Rng rng(params.seed);
  for (auto& x : planes) {
    x = static_cast<float>(rng.normal());
  }
  return with_hyperplanes(std::move(store), params, std::move(planes));
}

HyperplaneIndex HyperplaneIndex::with_hyperplanes(std::shared_ptr<const EmbeddingStore> store,
                                                  const IndexParams& params,
                                                  std::vector<float> planes) {
  check_params(params);
  if (!store || store->empty()) {
    throw Error("cannot index an empty store");
  }
  const std::size_t d = store->dimension();
  if (planes.size() != static_cast<std::size_t>(params.n_hyperplanes) * d) {
    throw Error("hyperplane matrix has the wrong shape");
  }
  for (std::size_t p = 0; p < static_cast<std::size_t>(params.n_hyperplanes); ++p) {
    double norm2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      norm2 += static_cast<double>(planes[p * d + j]) * planes[p * d + j];
    }
    if (norm2 == 0.0) {
      throw Error("zero hyperplane");
    }
    const double norm = std::sqrt(norm2);
    for (std::size_t j = 0; j < d; ++j) {
      planes[p * d + j] = static_cast<float>(planes[p * d + j] / norm);
    }
  }
  HyperplaneIndex index(std::move(store), params);
  index.planes_ = std::move(planes);
  index.fill_tables();
  return index;
}

int HyperplaneIndex::bits_in_table(std::size_t table) const {
  const int used = static_cast<int>(table) * params_.table_bits;
  return std::min(params_.table_bits, params_.n_hyperplanes - used);
}

bool HyperplaneIndex::exhaustive() const { return params_.n_probe_bits >= params_.table_bits; }

std::uint64_t HyperplaneIndex::signature(std::size_t table, std::span<const float> v) const {
  const std::size_t d = store_->dimension();
  const std::size_t first = table * static_cast<std::size_t>(params_.table_bits);
  const int bits = bits_in_table(table);
  std::uint64_t sig = 0;
  for (int b = 0; b < bits; ++b) {
    const double dot = cosine(v, std::span<const float>(planes_.data() + (first + b) * d, d));
    if (dot >= 0.0) {
      sig |= std::uint64_t{1} << b;
    }
  }
  return sig;
}

std::uint64_t HyperplaneIndex::signature(std::size_t table, std::size_t row) const {
  return signature(table, store_->row(row));
}

void HyperplaneIndex::fill_tables() {
  const std::size_t n_tables =
      (static_cast<std::size_t>(params_.n_hyperplanes) + params_.table_bits - 1) /
      static_cast<std::size_t>(params_.table_bits);
  const std::size_t n = store_->size();
  std::vector<std::uint64_t> sigs(n * n_tables);
  parallel_for(n, [&](std::size_t row) {
    for (std::size_t t = 0; t < n_tables; ++t) {
      sigs[row * n_tables + t] = signature(t, row);
    }
  });
  tables_.assign(n_tables, {});
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t t = 0; t < n_tables; ++t) {
      tables_[t][sigs[row * n_tables + t]].push_back(static_cast<std::uint32_t>(row));
    }
  }
}

std::vector<std::uint32_t> HyperplaneIndex::candidate_rows(std::size_t row) const {
  const std::size_t n = store_->size();
  std::vector<std::uint32_t> out;
  auto all_rows = [&] {
    out.clear();
    out.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
      if (r != row) {
        out.push_back(static_cast<std::uint32_t>(r));
      }
    }
    return out;
  };
  if (exhaustive()) {
    return all_rows();
  }
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    const auto& table = tables_[t];
    const int bits = bits_in_table(t);
    const std::uint64_t key = signature(t, row);
    const int radius = std::min(params_.n_probe_bits, bits);
    if (probe_count(bits, radius, table.size() + 1) <= table.size()) {
      auto visit = [&](std::uint64_t probe) {
        if (auto it = table.find(probe); it != table.end()) {
          out.insert(out.end(), it->second.begin(), it->second.end());
        }
      };
      enumerate_flips(key, bits, radius, 0, visit);
    } else {
      for (const auto& [sig, rows] : table) {
        if (std::popcount(sig ^ key) <= radius) {
          out.insert(out.end(), rows.begin(), rows.end());
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  out.erase(std::remove(out.begin(), out.end(), static_cast<std::uint32_t>(row)), out.end());
  if (out.size() < kMinCandidates) {
    return all_rows();
  }
  return out;
}

std::vector<NeighborHit> HyperplaneIndex::ranked_candidates(std::size_t row) const {
  const auto rows = candidate_rows(row);
  std::vector<NeighborHit> hits;
  hits.reserve(rows.size());
  const auto query = store_->row(row);
  for (std::uint32_t r : rows) {
    hits.push_back({store_->id_at(r), cosine(query, store_->row(r))});
  }
  std::sort(hits.begin(), hits.end(), ranks_before);
  return hits;
}

std::vector<NeighborHit> HyperplaneIndex::query_topk(RecordId query, std::size_t k) const {
  if (k < 1) {
    throw Error("k must be at least 1");
  }
  auto hits = ranked_candidates(store_->index_of(query));
  if (hits.size() > k) {
    hits.resize(k);
  }
  return hits;
}

std::vector<NeighborHit> HyperplaneIndex::query_threshold(RecordId query, double threshold,
                                                          std::size_t initial_k, bool strict,
                                                          ThresholdTrace* trace) const {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error("threshold must lie in (0, 1]");
  }
  if (initial_k < 1) {
    throw Error("initial_k must be at least 1");
  }
  auto ranked = ranked_candidates(store_->index_of(query));
  auto qualifies = [&](const NeighborHit& h) {
    return strict ? h.similarity > threshold : h.similarity >= threshold;
  };

  // Each pass "retrieves" the top-k prefix of the same deterministic ranking.
  std::size_t k = initial_k;
  std::size_t batch = 0;
  for (;;) {
    batch = std::min(k, ranked.size());
    if (trace != nullptr) {
      trace->batch_sizes.push_back(batch);
    }
    if (batch == ranked.size() || batch == 0 || !qualifies(ranked[batch - 1])) {
      break;
    }
    k *= 2;
  }
  const auto cut_it = std::partition_point(ranked.begin(),
                                           ranked.begin() + static_cast<std::ptrdiff_t>(batch),
                                           qualifies);
  const auto cut = static_cast<std::size_t>(cut_it - ranked.begin());
  if (trace != nullptr) {
    trace->cut = cut;
  }
  ranked.resize(cut);
  return ranked;
}

std::vector<NeighborHit> brute_force_threshold(const EmbeddingStore& store, RecordId query,
                                               double threshold, bool strict) {
  const std::size_t q = store.index_of(query);
  std::vector<NeighborHit> hits;
  for (std::size_t r = 0; r < store.size(); ++r) {
    if (r == q) {
      continue;
    }
    const double s = store.row_similarity(q, r);
    if (strict ? s > threshold : s >= threshold) {
      hits.push_back({store.id_at(r), s});
    }
  }
  std::sort(hits.begin(), hits.end(), ranks_before);
  return hits;
}

void write_index(const HyperplaneIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot write index file " + path.string());
  }
  const auto& p = index.params_;
  const auto& store = *index.store_;
  out.write("CGI1", 4);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.n_hyperplanes));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.dimension()));
  io::write_le<std::uint64_t>(out, p.seed);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.table_bits));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.n_probe_bits));
  for (float x : index.planes_) {
    io::write_le<float>(out, x);
  }
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(index.tables_.size()));
  for (const auto& table : index.tables_) {
    std::vector<std::uint64_t> sigs;
    sigs.reserve(table.size());
    for (const auto& entry : table) {
      sigs.push_back(entry.first);
    }
    std::sort(sigs.begin(), sigs.end());
    io::write_le<std::uint64_t>(out, sigs.size());
    for (std::uint64_t sig : sigs) {
      const auto& rows = table.at(sig);
      io::write_le<std::uint64_t>(out, sig);
      io::write_le<std::uint64_t>(out, rows.size());
      for (std::uint32_t r : rows) {
        io::write_le<std::uint64_t>(out, store.id_at(r));
      }
    }
  }
  if (!out) {
    throw Error("I/O failure writing " + path.string());
  }
}

HyperplaneIndex read_index(const std::filesystem::path& path,
                           std::shared_ptr<const EmbeddingStore> store,
                           std::optional<int> probe_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open index file " + path.string());
  }
  io::expect_magic(in, "CGI1");
  IndexParams params;
  params.n_hyperplanes = static_cast<int>(io::read_le<std::uint32_t>(in, "n_hyperplanes"));
  const auto dimension = io::read_le<std::uint32_t>(in, "dimension");
  params.seed = io::read_le<std::uint64_t>(in, "seed");
  params.table_bits = static_cast<int>(io::read_le<std::uint32_t>(in, "table_bits"));
  params.n_probe_bits = static_cast<int>(io::read_le<std::uint32_t>(in, "n_probe_bits"));
  check_params(params);
  if (!store || store->dimension() != dimension) {
    throw Error("index dimension does not match the embedding store");
  }
  HyperplaneIndex index(std::move(store), params);
  index.planes_.resize(static_cast<std::size_t>(params.n_hyperplanes) * dimension);
  for (auto& x : index.planes_) {
    x = io::read_le<float>(in, "hyperplane");
  }
  const auto n_tables = io::read_le<std::uint32_t>(in, "n_tables");
  const std::size_t expected_tables =
      (static_cast<std::size_t>(params.n_hyperplanes) + params.table_bits - 1) /
      static_cast<std::size_t>(params.table_bits);
  if (n_tables != expected_tables) {
    throw Error("index table count does not match its parameters");
  }
  const auto& s = *index.store_;
  index.tables_.assign(n_tables, {});
  for (auto& table : index.tables_) {
    const auto n_buckets = io::read_le<std::uint64_t>(in, "bucket count");
    std::size_t placed = 0;
    for (std::uint64_t b = 0; b < n_buckets; ++b) {
      const auto sig = io::read_le<std::uint64_t>(in, "signature");
      const auto count = io::read_le<std::uint64_t>(in, "bucket size");
      auto& rows = table[sig];
      rows.reserve(count);
      for (std::uint64_t i = 0; i < count; ++i) {
        const auto id = io::read_le<std::uint64_t>(in, "bucket id");
        auto row = s.find(id);
        if (!row) {
          throw Error("index references id " + std::to_string(id) + " missing from the store");
        }
        rows.push_back(static_cast<std::uint32_t>(*row));
      }
      placed += count;
    }
    if (placed != s.size()) {
      throw Error("index does not cover the embedding store");
    }
  }
  if (probe_override) {
    index.params_.n_probe_bits = *probe_override;
    check_params(index.params_);
  }
  return index;
}

}  // namespace claimgraph
