#pragma once

// Thin JSON-over-HTTP client used by every external provider.

#include <chrono>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <httplib.h>

#include "claimkit/error.hpp"

namespace claimkit::http {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // begins with '/'
};

inline Url split_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) throw ValidationError("URL without scheme: " + std::string(url));
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ValidationError("unsupported URL scheme: " + std::string(url));
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

struct Response {
  int status = 0;
  std::string body;
};

// POSTs `body` as application/json. Connection failures raise TransportError;
// HTTP error statuses are returned to the caller.
inline Response post_json(const std::string& url, const std::string& body,
                          std::chrono::milliseconds timeout,
                          const std::vector<std::pair<std::string, std::string>>& headers = {}) {
  const Url u = split_url(url);
  httplib::Client client(u.origin);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                                static_cast<long>((timeout.count() % 1000) * 1000));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                          static_cast<long>((timeout.count() % 1000) * 1000));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                           static_cast<long>((timeout.count() % 1000) * 1000));
  httplib::Headers hs;
  for (const auto& [k, v] : headers) hs.emplace(k, v);
  auto res = client.Post(u.path, hs, body, "application/json");
  if (!res) throw TransportError("request to " + url + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

}  // namespace claimkit::http
