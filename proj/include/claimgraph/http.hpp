#pragma once

#include <functional>
#include <string>

#include <json.hpp>

namespace claimgraph::http {

struct RetryPolicy {
  int max_retries = 3;
  /// Backoff before retry n (1-based) is initial_backoff_ms * 2^(n-1).
  int initial_backoff_ms = 200;
  int timeout_seconds = 60;
  std::function<void(const std::string&)> on_retry;
};

/// POSTs `body` to `endpoint` + `path` (endpoint may carry a path prefix)
/// and returns the parsed JSON response. Connection failures, 429 and 5xx
/// are retried; other statuses and unparsable bodies throw Error.
nlohmann::json post_json(const std::string& endpoint, const std::string& path,
                         const nlohmann::json& body, const RetryPolicy& policy,
                         std::size_t* retries = nullptr);

}  // namespace claimgraph::http
