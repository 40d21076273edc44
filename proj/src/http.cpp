#include "claimgraph/http.hpp"

#include <chrono>
#include <optional>
#include <thread>

#include <httplib.h>

#include "claimgraph/common.hpp"

namespace claimgraph::http {

namespace {

struct Endpoint {
  std::string base;
  std::string path_prefix;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', host_start);
  if (slash == std::string::npos) {
    return {url, ""};
  }
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') {
    prefix.pop_back();
  }
  return {url.substr(0, slash), prefix};
}

}  // namespace

nlohmann::json post_json(const std::string& endpoint, const std::string& path,
                         const nlohmann::json& body, const RetryPolicy& policy,
                         std::size_t* retries) {
  const Endpoint ep = split_endpoint(endpoint);
  httplib::Client client(ep.base);
  client.set_connection_timeout(policy.timeout_seconds, 0);
  client.set_read_timeout(policy.timeout_seconds, 0);
  const std::string full_path = ep.path_prefix + path;
  const std::string payload = body.dump();

  std::optional<std::string> response;
  std::string last_failure = "no response";
  for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
    if (attempt > 0) {
      if (retries != nullptr) {
        ++*retries;
      }
      if (policy.on_retry) {
        policy.on_retry(full_path + " retry " + std::to_string(attempt) + " after " + last_failure);
      }
      std::this_thread::sleep_for(
          std::chrono::milliseconds(policy.initial_backoff_ms * (1 << (attempt - 1))));
    }
    auto res = client.Post(full_path, payload, "application/json");
    if (!res) {
      last_failure = "connection error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      response = res->body;
      break;
    }
    if (res->status != 429 && res->status < 500) {
      throw Error(full_path + " returned HTTP " + std::to_string(res->status));
    }
    last_failure = "HTTP " + std::to_string(res->status);
  }
  if (!response) {
    throw Error(full_path + " failed after " + std::to_string(policy.max_retries) +
                " retries (" + last_failure + ")");
  }
  auto parsed = nlohmann::json::parse(*response, nullptr, false);
  if (parsed.is_discarded()) {
    throw Error(full_path + " returned malformed JSON");
  }
  return parsed;
}

}  // namespace claimgraph::http
