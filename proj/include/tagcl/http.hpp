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

#ifndef TAGCL_HTTP_HPP_
#define TAGCL_HTTP_HPP_

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace tagcl {

using HttpHeaders = std::map<std::string, std::string>;

struct HttpResponse {
  int status = 0;  // 0 means the request never completed (connect, timeout)
  std::string body;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& url, const HttpHeaders& headers,
                            const std::string& body) = 0;
};

// cpp-httplib backed transport; url is "scheme://host[:port]/path".
class HttplibTransport : public HttpTransport {
 public:
  explicit HttplibTransport(double timeout_seconds = 120.0)
      : timeout_seconds_(timeout_seconds) {}
  HttpResponse post(const std::string& url, const HttpHeaders& headers,
                    const std::string& body) override;

 private:
  double timeout_seconds_;
};

// Replays recorded exchanges. A fixture file is a JSON array of
// {"url_path": ..., "request": <json body>, "status": int, "response": <json
// body>}; requests are matched on path and structurally equal JSON body.
class ReplayTransport : public HttpTransport {
 public:
  explicit ReplayTransport(const std::filesystem::path& fixture);
  HttpResponse post(const std::string& url, const HttpHeaders& headers,
                    const std::string& body) override;
  std::size_t calls() const { return calls_; }

 private:
  struct Exchange;
  std::vector<std::shared_ptr<Exchange>> exchanges_;
  std::atomic<std::size_t> calls_{0};
};

// Forwards to another transport and appends each exchange to a fixture
// readable by ReplayTransport.
class RecordingTransport : public HttpTransport {
 public:
  RecordingTransport(HttpTransport& inner, std::filesystem::path fixture)
      : inner_(inner), fixture_(std::move(fixture)) {}
  HttpResponse post(const std::string& url, const HttpHeaders& headers,
                    const std::string& body) override;

 private:
  HttpTransport& inner_;
  std::filesystem::path fixture_;
  std::mutex mu_;
};

struct RetryPolicy {
  int max_attempts = 5;
  double base_delay_seconds = 1.0;
  double max_delay_seconds = 60.0;
  // Replaceable so tests do not sleep.
  std::function<void(double)> sleep;
};

bool is_retryable_status(int status);

// Retries 429, 5xx and incomplete requests with exponential backoff and
// jitter. Returns the first non-retryable response; throws TransportError
// with the last status once the attempts are spent.
HttpResponse post_with_retry(HttpTransport& transport, const std::string& url,
                             const HttpHeaders& headers,
                             const std::string& body,
                             const RetryPolicy& policy);

// Trims a trailing '/' so base_url + "/v1/..." is well formed.
std::string join_url(const std::string& base_url, const std::string& path);

}  // namespace tagcl

#endif  // TAGCL_HTTP_HPP_
