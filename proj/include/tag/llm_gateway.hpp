// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace tag {

inline constexpr int kDefaultMaxOutputTokens = 4096;

/// One chat completion. Every pipeline stage issues these at temperature 0.
struct ChatRequest {
  std::string model_id;
  std::string system_message;
  std::string user_message;
  double temperature = 0.0;
  int max_output_tokens = kDefaultMaxOutputTokens;
  std::string request_tag;

  /// Content address of the request. The tag is logging-only and excluded.
  std::string cache_key() const;
  nlohmann::ordered_json to_json() const;
};

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;

  std::size_t dim() const noexcept { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

/// Upstream model access. Implementations signal transport failures by
/// throwing TransportError; anything else propagates unchanged.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string complete(const ChatRequest& req) = 0;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                                 const std::string& model_id) = 0;
};

/// Request matcher of a provider script: the tag must equal `request_tag`
/// (when non-empty) and system+user text must contain every pattern.
struct ScriptEntry {
  std::string request_tag;
  std::vector<std::string> contains;
  std::string response;
};

/// Canned responses for offline and test runs. A request must match exactly
/// one entry; zero or several matches raise ScriptError.
struct ProviderScript {
  std::vector<ScriptEntry> entries;
  std::map<std::string, std::vector<double>> embedding_table;
  /// When non-zero, texts absent from the table get a feature-hashed vector
  /// of this dimension instead of raising ScriptError.
  std::size_t hash_embedding_dim = 0;

  static ProviderScript from_json(const nlohmann::json& j);
  static ProviderScript load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;
};

class ScriptedProvider final : public Provider {
 public:
  explicit ScriptedProvider(ProviderScript script);
  std::string complete(const ChatRequest& req) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts, const std::string& model_id) override;

 private:
  ProviderScript script_;
};

/// Provider backed by callables; handy for programmatic fixtures.
class FunctionProvider final : public Provider {
 public:
  using ChatFn = std::function<std::string(const ChatRequest&)>;
  using EmbedFn = std::function<std::vector<double>(const std::string&)>;
  FunctionProvider(ChatFn chat, EmbedFn embed);
  std::string complete(const ChatRequest& req) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts, const std::string& model_id) override;

 private:
  ChatFn chat_;
  EmbedFn embed_;
};

/// Deterministic feature-hashing embedding over lower-cased word unigrams and
/// character trigrams. Offline stand-in for a dense encoder.
std::vector<double> hash_embedding(std::string_view text, std::size_t dim);

struct GatewayOptions {
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{500};
  /// On-disk cache directory (one JSON file per request hash). Empty keeps the
  /// cache in memory only.
  std::filesystem::path cache_dir;
  bool cache_enabled = true;
  std::string embedding_model_id = "embedding";
  std::size_t embed_batch_size = 64;
  std::size_t max_parallel_requests = 8;
};

/// Single access point for chat completions and embeddings. Thread-safe.
/// Identical requests are served from a content-addressed cache; transport
/// failures are retried with exponential backoff.
class Gateway {
 public:
  struct Stats {
    std::size_t upstream_chat_calls = 0;
    std::size_t upstream_embed_calls = 0;
    std::size_t upstream_embed_texts = 0;
    std::size_t cache_hits = 0;
  };

  Gateway(std::shared_ptr<Provider> provider, GatewayOptions options = {});

  std::string complete(const ChatRequest& req);
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts);

  Stats stats() const;
  const GatewayOptions& options() const noexcept { return options_; }

 private:
  std::string call_with_retry(const ChatRequest& req);
  std::vector<std::vector<double>> embed_with_retry(const std::vector<std::string>& texts);
  std::optional<std::string> read_disk(const std::string& key, const ChatRequest& req) const;
  void write_disk(const std::string& key, const ChatRequest& req, const std::string& response) const;

  std::shared_ptr<Provider> provider_;
  GatewayOptions options_;

  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::shared_future<std::string>> chat_cache_;
  std::mutex embed_mutex_;
  std::unordered_map<std::string, std::vector<double>> embed_cache_;
  std::optional<std::size_t> embed_dim_;
  Stats stats_;
};

}  // namespace tag
