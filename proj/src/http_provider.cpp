// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "tag/http_provider.hpp"

#include <httplib.h>

#include <algorithm>

#include "tag/error.hpp"

namespace tag {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl s;
  s.origin = url.substr(0, path_start);
  s.prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!s.prefix.empty() && s.prefix.back() == '/') s.prefix.pop_back();
  return s;
}

}  // namespace

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
  if (config_.endpoint_url.empty()) throw ConfigError("endpoint_url is required for the HTTP provider");
  if (config_.embedding_endpoint_url.empty()) config_.embedding_endpoint_url = config_.endpoint_url;
  split_url(config_.endpoint_url);
  split_url(config_.embedding_endpoint_url);
}

std::string HttpProvider::post(const std::string& base_url, const std::string& path, const std::string& body,
                               const std::string& tag) const {
  const SplitUrl url = split_url(base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_write_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto res = client.Post(url.prefix + path, headers, body, "application/json");
  if (!res) throw TransportError("HTTP request failed: " + httplib::to_string(res.error()), tag, true);
  if (res->status >= 500 || res->status == 429)
    throw TransportError("HTTP status " + std::to_string(res->status), tag, true);
  if (res->status < 200 || res->status >= 300)
    throw TransportError("HTTP status " + std::to_string(res->status) + ": " + res->body.substr(0, 200), tag, false);
  return res->body;
}

std::string HttpProvider::complete(const ChatRequest& req) {
  json body = {{"model", req.model_id},
               {"messages",
                json::array({{{"role", "system"}, {"content", req.system_message}},
                             {{"role", "user"}, {"content", req.user_message}}})},
               {"temperature", req.temperature},
               {"top_p", config_.top_p},
               {"max_tokens", req.max_output_tokens},
               {"stream", false}};
  const std::string raw = post(config_.endpoint_url, "/chat/completions", body.dump(), req.request_tag);
  try {
    json j = json::parse(raw);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string{} : content.get<std::string>();
  } catch (const json::exception& e) {
    // A 2xx with an unusable body is a provider fault, not a model answer.
    throw TransportError(std::string("malformed completion response: ") + e.what(), req.request_tag, false);
  }
}

std::vector<std::vector<double>> HttpProvider::embed(const std::vector<std::string>& texts,
                                                     const std::string& model_id) {
  json body = {{"model", model_id}, {"input", texts}};
  const std::string raw = post(config_.embedding_endpoint_url, "/embeddings", body.dump(), "embed");
  try {
    json j = json::parse(raw);
    std::vector<std::pair<std::size_t, std::vector<double>>> items;
    std::size_t pos = 0;
    for (const auto& d : j.at("data")) {
      items.emplace_back(d.value("index", pos), d.at("embedding").get<std::vector<double>>());
      ++pos;
    }
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::vector<double>> out;
    for (auto& [idx, v] : items) out.push_back(std::move(v));
    return out;
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed embedding response: ") + e.what(), "embed", false);
  }
}

}  // namespace tag
