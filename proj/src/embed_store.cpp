#include "claimgraph/embed_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "claimgraph/http.hpp"
#include "claimgraph/io.hpp"

namespace claimgraph {

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()));
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return dot;
}

EmbeddingStore::EmbeddingStore(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) {
    throw Error("embedding dimension must be positive");
  }
}

void EmbeddingStore::add(RecordId id, std::span<const float> vector) {
  if (vector.size() != dimension_) {
    throw Error("dimension mismatch for id " + std::to_string(id) + ": expected " +
                std::to_string(dimension_) + ", got " + std::to_string(vector.size()));
  }
  if (rows_.contains(id)) {
    throw Error("duplicate id " + std::to_string(id));
  }
  double norm2 = 0.0;
  for (float x : vector) {
    if (!std::isfinite(x)) {
      throw Error("non-finite component in vector for id " + std::to_string(id));
    }
    norm2 += static_cast<double>(x) * static_cast<double>(x);
  }
  if (norm2 == 0.0) {
    throw Error("zero vector cannot be normalized (id " + std::to_string(id) + ")");
  }
  const double norm = std::sqrt(norm2);
  const std::size_t offset = data_.size();
  data_.insert(data_.end(), vector.begin(), vector.end());
  // Already-unit vectors are kept bit-for-bit so write/load round-trips exactly.
  if (std::abs(norm - 1.0) > 1e-6) {
    for (std::size_t i = 0; i < dimension_; ++i) {
      data_[offset + i] = static_cast<float>(static_cast<double>(data_[offset + i]) / norm);
    }
  }
  rows_.emplace(id, ids_.size());
  ids_.push_back(id);
}

std::optional<std::size_t> EmbeddingStore::find(RecordId id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::size_t EmbeddingStore::index_of(RecordId id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) {
    throw Error("unknown record id " + std::to_string(id));
  }
  return it->second;
}

EmbeddingStore EmbeddingStore::subset(const std::vector<RecordId>& keep) const {
  std::vector<std::size_t> rows;
  rows.reserve(keep.size());
  for (RecordId id : keep) {
    rows.push_back(index_of(id));
  }
  std::sort(rows.begin(), rows.end());
  EmbeddingStore out(dimension_);
  for (std::size_t r : rows) {
    out.add(ids_[r], row(r));
  }
  return out;
}

EmbeddingStore load_vector_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open vector file " + path.string());
  }
  io::expect_magic(in, "CGV1");
  const auto dimension = io::read_le<std::uint32_t>(in, "dimension");
  if (dimension == 0) {
    throw Error("vector file declares dimension 0");
  }
  const auto count = io::read_le<std::uint64_t>(in, "count");
  EmbeddingStore store(dimension);
  std::vector<float> buf(dimension);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto id = io::read_le<std::uint64_t>(in, "record id");
    for (auto& x : buf) {
      x = io::read_le<float>(in, "vector component");
    }
    store.add(id, buf);
  }
  return store;
}

void write_vector_file(const EmbeddingStore& store, const std::filesystem::path& path) {
  if (store.empty()) {
    throw Error("refusing to write an empty vector file");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot write vector file " + path.string());
  }
  out.write("CGV1", 4);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.dimension()));
  io::write_le<std::uint64_t>(out, store.size());
  for (std::size_t r = 0; r < store.size(); ++r) {
    io::write_le<std::uint64_t>(out, store.id_at(r));
    for (float x : store.row(r)) {
      io::write_le<float>(out, x);
    }
  }
  if (!out) {
    throw Error("I/O failure writing " + path.string());
  }
}

namespace {

using nlohmann::json;

using Batch = std::vector<std::vector<float>>;

std::map<std::size_t, Batch> read_checkpoint(const std::filesystem::path& path,
                                             const std::vector<std::vector<RecordId>>& batch_ids) {
  std::map<std::size_t, Batch> done;
  if (path.empty() || !std::filesystem::exists(path)) {
    return done;
  }
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    json entry = json::parse(line, nullptr, false);
    if (entry.is_discarded() || !entry.contains("batch")) {
      continue;  // torn final line from an interrupted run
    }
    const auto b = entry["batch"].get<std::size_t>();
    if (b >= batch_ids.size() || entry["ids"].get<std::vector<RecordId>>() != batch_ids[b]) {
      continue;
    }
    done[b] = entry["vectors"].get<Batch>();
  }
  return done;
}

}  // namespace

EmbeddingStore fetch_embeddings(const std::vector<std::pair<RecordId, std::string>>& claims,
                                const std::string& endpoint, const FetchOptions& options,
                                FetchStats* stats) {
  if (claims.empty()) {
    throw Error("no claims to embed");
  }
  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
  std::vector<std::vector<RecordId>> batch_ids;
  for (std::size_t start = 0; start < claims.size(); start += batch_size) {
    auto& ids = batch_ids.emplace_back();
    for (std::size_t i = start; i < std::min(claims.size(), start + batch_size); ++i) {
      ids.push_back(claims[i].first);
    }
  }

  FetchStats local;
  auto done = read_checkpoint(options.checkpoint, batch_ids);
  std::ofstream checkpoint;
  if (!options.checkpoint.empty()) {
    checkpoint.open(options.checkpoint, std::ios::app);
  }

  http::RetryPolicy policy;
  policy.max_retries = options.max_retries;
  policy.initial_backoff_ms = options.initial_backoff_ms;
  policy.timeout_seconds = options.timeout_seconds;
  policy.on_retry = options.on_retry;

  std::optional<std::size_t> dimension;
  std::vector<Batch> results(batch_ids.size());
  for (std::size_t b = 0; b < batch_ids.size(); ++b) {
    ++local.batches;
    if (auto it = done.find(b); it != done.end()) {
      results[b] = std::move(it->second);
      ++local.batches_from_checkpoint;
    } else {
      json request;
      request["texts"] = json::array();
      for (std::size_t i = b * batch_size; i < std::min(claims.size(), (b + 1) * batch_size); ++i) {
        request["texts"].push_back(claims[i].second);
      }
      json response;
      try {
        response = http::post_json(endpoint, "/embed", request, policy, &local.retries);
      } catch (const Error& e) {
        throw Error(std::string("embedding service: ") + e.what());
      }
      if (!response.is_object() || !response.contains("vectors") ||
          !response["vectors"].is_array()) {
        throw Error("malformed embedding response");
      }
      results[b] = response["vectors"].get<Batch>();
      if (checkpoint.is_open()) {
        json entry;
        entry["batch"] = b;
        entry["ids"] = batch_ids[b];
        entry["vectors"] = results[b];
        checkpoint << entry.dump() << '\n' << std::flush;
      }
    }
    if (results[b].size() != batch_ids[b].size()) {
      throw Error("count mismatch: sent " + std::to_string(batch_ids[b].size()) +
                  " texts, received " + std::to_string(results[b].size()) + " vectors");
    }
    for (const auto& v : results[b]) {
      if (!dimension) {
        dimension = v.size();
      } else if (v.size() != *dimension) {
        throw Error("dimension drift: expected " + std::to_string(*dimension) + ", got " +
                    std::to_string(v.size()));
      }
    }
  }

  EmbeddingStore store(*dimension);
  for (std::size_t b = 0; b < batch_ids.size(); ++b) {
    for (std::size_t i = 0; i < batch_ids[b].size(); ++i) {
      store.add(batch_ids[b][i], results[b][i]);
    }
  }
  if (stats != nullptr) {
    *stats = local;
  }
  return store;
}

}  // namespace claimgraph
