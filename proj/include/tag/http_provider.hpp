// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "tag/llm_gateway.hpp"

namespace tag {

struct HttpProviderConfig {
  /// Base URL of an OpenAI-compatible API, e.g. "https://host/v1". Requests
  /// go to <base>/chat/completions and <embedding base>/embeddings.
  std::string endpoint_url;
  std::string embedding_endpoint_url;  // defaults to endpoint_url
  std::string api_key;
  int timeout_seconds = 120;
  double top_p = 1.0;
};

/// Chat/embedding provider over HTTP. 5xx, 429 and connection failures are
/// reported as retryable TransportError; other non-2xx statuses are not.
class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig config);
  std::string complete(const ChatRequest& req) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts, const std::string& model_id) override;

 private:
  std::string post(const std::string& base_url, const std::string& path, const std::string& body,
                   const std::string& tag) const;
  HttpProviderConfig config_;
};

}  // namespace tag
