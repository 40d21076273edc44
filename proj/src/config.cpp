#include "claimgraph/config.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "claimgraph/io.hpp"

namespace claimgraph {

using nlohmann::json;

namespace {

struct Field {
  std::string key;
  std::function<void(PipelineConfig&, const json&)> set;
  std::function<json(const PipelineConfig&)> get;
};

template <typename T>
Field member(std::string key, T PipelineConfig::*ptr) {
  return Field{
      std::move(key),
      [ptr](PipelineConfig& c, const json& v) {
        if constexpr (std::is_same_v<T, bool>) {
          if (!v.is_boolean()) {
            throw std::invalid_argument("expected true/false");
          }
        } else if constexpr (std::is_integral_v<T>) {
          if (!v.is_number_integer()) {
            throw std::invalid_argument("expected an integer");
          }
          if constexpr (std::is_unsigned_v<T>) {
            if (v.is_number_unsigned()) {
              c.*ptr = v.get<T>();
              return;
            }
            if (v.get<std::int64_t>() < 0) {
              throw std::invalid_argument("expected a nonnegative integer");
            }
          } else if (v.is_number_unsigned() &&
                     v.get<std::uint64_t>() >
                         static_cast<std::uint64_t>(std::numeric_limits<T>::max())) {
            throw std::invalid_argument("integer out of range");
          } else {
            const auto wide = v.get<std::int64_t>();
            if (wide < std::numeric_limits<T>::min() || wide > std::numeric_limits<T>::max()) {
              throw std::invalid_argument("integer out of range");
            }
          }
        } else if constexpr (std::is_floating_point_v<T>) {
          if (!v.is_number()) {
            throw std::invalid_argument("expected a number");
          }
        } else if constexpr (std::is_same_v<T, std::string>) {
          if (!v.is_string()) {
            throw std::invalid_argument("expected a string");
          }
        }
        c.*ptr = v.get<T>();
      },
      [ptr](const PipelineConfig& c) { return json(c.*ptr); }};
}

DateRange parse_date_range(const json& v) {
  if (v.is_array() && v.size() == 2 && v[0].is_string() && v[1].is_string()) {
    return DateRange{Date::from_iso(v[0].get<std::string>()),
                     Date::from_iso(v[1].get<std::string>())};
  }
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    const auto sep = s.find("..");
    if (sep != std::string::npos) {
      return DateRange{Date::from_iso(s.substr(0, sep)), Date::from_iso(s.substr(sep + 2))};
    }
  }
  throw std::invalid_argument("expected [\"YYYY-MM-DD\", \"YYYY-MM-DD\"] or \"start..end\"");
}

std::vector<double> parse_threshold_list(const json& v) {
  std::vector<double> out;
  if (v.is_array()) {
    for (const auto& x : v) {
      if (!x.is_number()) {
        throw std::invalid_argument("expected a list of numbers");
      }
      out.push_back(x.get<double>());
    }
    return out;
  }
  if (v.is_number()) {
    return {v.get<double>()};
  }
  if (v.is_string()) {
    std::stringstream ss(v.get<std::string>());
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t used = 0;
      const double d = std::stod(item, &used);
      if (used != item.size()) {
        throw std::invalid_argument("bad number '" + item + "'");
      }
      out.push_back(d);
    }
    return out;
  }
  throw std::invalid_argument("expected a list of numbers");
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(member("edge_threshold", &PipelineConfig::edge_threshold));
    f.push_back(member("near_dup_threshold", &PipelineConfig::near_dup_threshold));
    f.push_back(member("strict_threshold", &PipelineConfig::strict_threshold));
    f.push_back(member("n_hyperplanes", &PipelineConfig::n_hyperplanes));
    f.push_back(member("table_bits", &PipelineConfig::table_bits));
    f.push_back(member("n_probe_bits", &PipelineConfig::n_probe_bits));
    f.push_back(member("ann_initial_k", &PipelineConfig::ann_initial_k));
    f.push_back(member("length_sd_multiplier", &PipelineConfig::length_sd_multiplier));
    f.push_back(member("length_window_two_sided", &PipelineConfig::length_window_two_sided));
    f.push_back(member("per_domain_min_share", &PipelineConfig::per_domain_min_share));
    f.push_back(Field{"date_range",
                      [](PipelineConfig& c, const json& v) { c.date_range = parse_date_range(v); },
                      [](const PipelineConfig& c) {
                        return json::array({c.date_range.start.iso(), c.date_range.end.iso()});
                      }});
    f.push_back(member("min_verdict_count", &PipelineConfig::min_verdict_count));
    f.push_back(member("min_token_count", &PipelineConfig::min_token_count));
    f.push_back(member("alpha", &PipelineConfig::alpha));
    f.push_back(member("null_model_replicates", &PipelineConfig::null_model_replicates));
    f.push_back(member("inter_cluster_sample_cap", &PipelineConfig::inter_cluster_sample_cap));
    f.push_back(Field{
        "sweep_thresholds",
        [](PipelineConfig& c, const json& v) { c.sweep_thresholds = parse_threshold_list(v); },
        [](const PipelineConfig& c) { return json(c.sweep_thresholds); }});
    f.push_back(member("drift_early_max_days", &PipelineConfig::drift_early_max_days));
    f.push_back(member("drift_late_min_days", &PipelineConfig::drift_late_min_days));
    f.push_back(member("drift_late_max_days", &PipelineConfig::drift_late_max_days));
    f.push_back(member("drift_max_days", &PipelineConfig::drift_max_days));
    f.push_back(member("drift_bin_width", &PipelineConfig::drift_bin_width));
    f.push_back(Field{"path_mode",
                      [](PipelineConfig& c, const json& v) {
                        const auto s = v.is_string() ? v.get<std::string>() : std::string();
                        if (s == "hops") {
                          c.path_mode = PathMode::Hops;
                        } else if (s == "distance") {
                          c.path_mode = PathMode::Distance;
                        } else {
                          throw std::invalid_argument("expected \"hops\" or \"distance\"");
                        }
                      },
                      [](const PipelineConfig& c) {
                        return json(c.path_mode == PathMode::Hops ? "hops" : "distance");
                      }});
    f.push_back(member("max_exhaustive_cluster", &PipelineConfig::max_exhaustive_cluster));
    f.push_back(member("embed_batch_size", &PipelineConfig::embed_batch_size));
    f.push_back(member("boilerplate_list", &PipelineConfig::boilerplate_list));
    f.push_back(member("verdict_table", &PipelineConfig::verdict_table));
    f.push_back(member("family_table", &PipelineConfig::family_table));
    f.push_back(member("rng_seed", &PipelineConfig::rng_seed));
    return f;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      return &f;
    }
  }
  return nullptr;
}

void apply(PipelineConfig& config, const std::string& key, const json& value) {
  const Field* field = find_field(key);
  if (field == nullptr) {
    throw ConfigError(key, "unknown config key");
  }
  try {
    field->set(config, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

void flatten(const json& doc, std::vector<std::pair<std::string, json>>& out) {
  for (const auto& [key, value] : doc.items()) {
    if (value.is_object()) {
      flatten(value, out);
    } else {
      out.emplace_back(key, value);
    }
  }
}

json parse_override(const std::string& raw) {
  json parsed = json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) {
    return json(raw);
  }
  return parsed;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) {
    throw ConfigError(key, what);
  }
}

bool in_unit_interval(double v) { return v > 0.0 && v <= 1.0; }

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) {
      k.push_back(f.key);
    }
    return k;
  }();
  return keys;
}

void validate(const PipelineConfig& c) {
  require(in_unit_interval(c.edge_threshold), "edge_threshold", "must lie in (0, 1]");
  require(in_unit_interval(c.near_dup_threshold), "near_dup_threshold", "must lie in (0, 1]");
  require(c.n_hyperplanes >= 1, "n_hyperplanes", "must be positive");
  require(c.table_bits >= 1 && c.table_bits <= 64, "table_bits", "must lie in [1, 64]");
  require(c.n_probe_bits >= 0, "n_probe_bits", "must be nonnegative");
  require(c.ann_initial_k >= 1, "ann_initial_k", "must be positive");
  require(c.length_sd_multiplier >= 0.0, "length_sd_multiplier", "must be nonnegative");
  require(c.per_domain_min_share > 0.0 && c.per_domain_min_share <= 1.0, "per_domain_min_share",
          "must lie in (0, 1]");
  require(c.date_range.start < c.date_range.end, "date_range", "start must precede end");
  require(c.min_verdict_count >= 1, "min_verdict_count", "must be positive");
  require(c.min_token_count >= 1, "min_token_count", "must be positive");
  require(c.alpha > 0.0 && c.alpha < 1.0, "alpha", "must lie in (0, 1)");
  require(c.null_model_replicates >= 100, "null_model_replicates", "must be at least 100");
  require(c.inter_cluster_sample_cap >= 1, "inter_cluster_sample_cap", "must be positive");
  require(!c.sweep_thresholds.empty(), "sweep_thresholds", "must not be empty");
  require(std::is_sorted(c.sweep_thresholds.begin(), c.sweep_thresholds.end()), "sweep_thresholds",
          "must be sorted ascending");
  for (double t : c.sweep_thresholds) {
    require(in_unit_interval(t), "sweep_thresholds", "every threshold must lie in (0, 1]");
  }
  require(c.drift_early_max_days >= 0, "drift_early_max_days", "must be nonnegative");
  require(c.drift_late_min_days <= c.drift_late_max_days, "drift_late_min_days",
          "must not exceed drift_late_max_days");
  require(c.drift_max_days >= 1, "drift_max_days", "must be positive");
  require(c.drift_bin_width >= 1, "drift_bin_width", "must be at least 1 day");
  require(c.max_exhaustive_cluster >= 2, "max_exhaustive_cluster", "must be at least 2");
  require(c.embed_batch_size >= 1, "embed_batch_size", "must be positive");
}

PipelineConfig config_from_json(const json& doc, const ConfigOverrides& overrides) {
  if (!doc.is_object()) {
    throw Error("config document must be a JSON object");
  }
  PipelineConfig config;
  std::vector<std::pair<std::string, json>> flat;
  flatten(doc, flat);
  for (const auto& [key, value] : flat) {
    apply(config, key, value);
  }
  for (const auto& [key, raw] : overrides) {
    apply(config, key, parse_override(raw));
  }
  validate(config);
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  json doc = json::object();
  if (!path.empty()) {
    const std::string contents = io::read_file(path);
    if (contents.find_first_not_of(" \t\r\n") != std::string::npos) {
      try {
        doc = json::parse(contents);
      } catch (const json::parse_error& e) {
        throw Error("cannot parse config " + path.string() + ": " + e.what());
      }
    }
  }
  return config_from_json(doc, overrides);
}

json to_json(const PipelineConfig& config) {
  json out = json::object();
  for (const auto& f : fields()) {
    out[f.key] = f.get(config);
  }
  return out;
}

}  // namespace claimgraph
