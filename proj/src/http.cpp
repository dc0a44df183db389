// Copyright 2026 The tagcl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "tagcl/http.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "tagcl/errors.hpp"
#include "tagcl/rng.hpp"

namespace tagcl {
namespace {

using nlohmann::json;

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

json parse_or_string(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error&) {
    return body;
  }
}

}  // namespace

struct ReplayTransport::Exchange {
  std::string url_path;
  json request;
  int status = 200;
  std::string response;
};

HttpResponse HttplibTransport::post(const std::string& url,
                                    const HttpHeaders& headers,
                                    const std::string& body) {
  const auto [origin, path] = split_url(url);
  httplib::Client client(origin);
  const auto secs = static_cast<time_t>(timeout_seconds_);
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto result = client.Post(path, h, body, "application/json");
  if (!result) return HttpResponse{0, httplib::to_string(result.error())};
  return HttpResponse{result->status, result->body};
}

ReplayTransport::ReplayTransport(const std::filesystem::path& fixture) {
  std::ifstream in(fixture);
  if (!in) throw ConfigError("cannot open fixture " + fixture.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("fixture " + fixture.string() + ": " + e.what());
  }
  for (const auto& entry : doc) {
    auto ex = std::make_shared<Exchange>();
    ex->url_path = entry.at("url_path").get<std::string>();
    ex->request = entry.at("request");
    ex->status = entry.value("status", 200);
    const auto& response = entry.at("response");
    ex->response = response.is_string() ? response.get<std::string>()
                                        : response.dump();
    exchanges_.push_back(std::move(ex));
  }
}

HttpResponse ReplayTransport::post(const std::string& url, const HttpHeaders&,
                                   const std::string& body) {
  ++calls_;
  const auto path = split_url(url).second;
  const json request = parse_or_string(body);
  for (const auto& ex : exchanges_) {
    if (ex->url_path == path && ex->request == request) {
      return HttpResponse{ex->status, ex->response};
    }
  }
  return HttpResponse{404, R"({"error":"no recorded exchange"})"};
}

HttpResponse RecordingTransport::post(const std::string& url,
                                      const HttpHeaders& headers,
                                      const std::string& body) {
  HttpResponse response = inner_.post(url, headers, body);
  std::lock_guard lock(mu_);
  json doc = json::array();
  if (std::ifstream in(fixture_); in) {
    try {
      doc = json::parse(in);
    } catch (const json::parse_error&) {
      doc = json::array();
    }
  }
  doc.push_back({{"url_path", split_url(url).second},
                 {"request", parse_or_string(body)},
                 {"status", response.status},
                 {"response", parse_or_string(response.body)}});
  std::ofstream(fixture_, std::ios::trunc) << doc.dump(2) << '\n';
  return response;
}

bool is_retryable_status(int status) {
  return status == 0 || status == 429 || (status >= 500 && status <= 599);
}

HttpResponse post_with_retry(HttpTransport& transport, const std::string& url,
                             const HttpHeaders& headers,
                             const std::string& body,
                             const RetryPolicy& policy) {
  static std::atomic<std::uint64_t> jitter_stream{0};
  Rng jitter(derive_seed(
      static_cast<std::uint64_t>(
          std::chrono::steady_clock::now().time_since_epoch().count()),
      jitter_stream++));
  HttpResponse last;
  const int attempts = std::max(1, policy.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    last = transport.post(url, headers, body);
    if (!is_retryable_status(last.status)) return last;
    if (attempt == attempts) break;
    const double backoff =
        std::min(policy.max_delay_seconds,
                 policy.base_delay_seconds * std::pow(2.0, attempt - 1));
    const double delay = backoff * (0.5 + 0.5 * jitter.uniform());
    if (policy.sleep) {
      policy.sleep(delay);
    } else {
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
  }
  throw TransportError("POST " + url + " failed after " +
                           std::to_string(attempts) +
                           " attempts; last status " +
                           std::to_string(last.status) + ": " +
                           last.body.substr(0, 200),
                       last.status);
}

std::string join_url(const std::string& base_url, const std::string& path) {
  std::string base = base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  if (!path.empty() && path.front() != '/') base += '/';
  return base + path;
}

}  // namespace tagcl
