// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "tag/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <thread>

#include "tag/corpus.hpp"
#include "tag/error.hpp"
#include "tag/hashing.hpp"

namespace tag {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// --- ChatRequest -----------------------------------------------------------

ordered_json ChatRequest::to_json() const {
  ordered_json j;
  j["model_id"] = model_id;
  j["system_message"] = system_message;
  j["user_message"] = user_message;
  j["temperature"] = temperature;
  j["max_output_tokens"] = max_output_tokens;
  return j;
}

std::string ChatRequest::cache_key() const { return sha256_hex(to_json().dump()); }

// --- Scripts -----------------------------------------------------------------

ProviderScript ProviderScript::from_json(const json& j) {
  ProviderScript s;
  try {
    if (j.contains("entries"))
      for (const auto& e : j.at("entries")) {
        ScriptEntry entry;
        entry.request_tag = e.value("request_tag", std::string{});
        entry.contains = e.value("contains", std::vector<std::string>{});
        entry.response = e.at("response").get<std::string>();
        s.entries.push_back(std::move(entry));
      }
    if (j.contains("embedding_table"))
      for (const auto& [text, vec] : j.at("embedding_table").items())
        s.embedding_table[text] = vec.get<std::vector<double>>();
    s.hash_embedding_dim = j.value("hash_embedding_dim", std::size_t{0});
  } catch (const json::exception& e) {
    throw ParseError(std::string("provider script: ") + e.what());
  }
  return s;
}

ProviderScript ProviderScript::load(const fs::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

ordered_json ProviderScript::to_json() const {
  ordered_json j;
  ordered_json entries_json = ordered_json::array();
  for (const auto& e : entries)
    entries_json.push_back({{"request_tag", e.request_tag}, {"contains", e.contains}, {"response", e.response}});
  j["entries"] = std::move(entries_json);
  j["embedding_table"] = embedding_table;
  j["hash_embedding_dim"] = hash_embedding_dim;
  return j;
}

ScriptedProvider::ScriptedProvider(ProviderScript script) : script_(std::move(script)) {}

std::string ScriptedProvider::complete(const ChatRequest& req) {
  const ScriptEntry* hit = nullptr;
  std::size_t matches = 0;
  for (const auto& e : script_.entries) {
    if (!e.request_tag.empty() && e.request_tag != req.request_tag) continue;
    bool all = std::all_of(e.contains.begin(), e.contains.end(), [&](const std::string& p) {
      return req.system_message.find(p) != std::string::npos || req.user_message.find(p) != std::string::npos;
    });
    if (!all) continue;
    if (!hit) hit = &e;
    ++matches;
  }
  if (matches == 0) throw ScriptError("no script entry matches request tagged '" + req.request_tag + "'");
  if (matches > 1)
    throw ScriptError(std::to_string(matches) + " script entries match request tagged '" + req.request_tag + "'");
  return hit->response;
}

std::vector<std::vector<double>> ScriptedProvider::embed(const std::vector<std::string>& texts, const std::string&) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto it = script_.embedding_table.find(t);
    if (it != script_.embedding_table.end()) {
      out.push_back(it->second);
    } else if (script_.hash_embedding_dim > 0) {
      out.push_back(hash_embedding(t, script_.hash_embedding_dim));
    } else {
      throw ScriptError("no scripted embedding for text '" + t.substr(0, 40) + "'");
    }
  }
  return out;
}

FunctionProvider::FunctionProvider(ChatFn chat, EmbedFn embed) : chat_(std::move(chat)), embed_(std::move(embed)) {}

std::string FunctionProvider::complete(const ChatRequest& req) {
  if (!chat_) throw ScriptError("function provider has no chat handler");
  return chat_(req);
}

std::vector<std::vector<double>> FunctionProvider::embed(const std::vector<std::string>& texts, const std::string&) {
  if (!embed_) throw ScriptError("function provider has no embedding handler");
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_(t));
  return out;
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t salt) {
  std::uint64_t h = 1469598103934665603ULL ^ salt;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::vector<double> hash_embedding(std::string_view text, std::size_t dim) {
  std::vector<double> v(std::max<std::size_t>(dim, 1), 0.0);
  std::string lower(text);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  auto add = [&](std::string_view feature, std::uint64_t salt, double weight) {
    const std::uint64_t h = fnv1a(feature, salt);
    v[h % v.size()] += (h >> 63) ? -weight : weight;
  };
  std::size_t start = std::string::npos;
  for (std::size_t i = 0; i <= lower.size(); ++i) {
    const bool word = i < lower.size() && std::isalnum(static_cast<unsigned char>(lower[i]));
    if (word && start == std::string::npos) start = i;
    if (!word && start != std::string::npos) {
      add(std::string_view(lower).substr(start, i - start), 1, 1.0);
      start = std::string::npos;
    }
  }
  for (std::size_t i = 0; i + 3 <= lower.size(); ++i) add(std::string_view(lower).substr(i, 3), 2, 0.5);
  if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) v[0] = 1.0;
  return v;
}

// --- Gateway -------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<Provider> provider, GatewayOptions options)
    : provider_(std::move(provider)), options_(std::move(options)) {
  if (!provider_) throw ConfigError("gateway requires a provider");
  if (options_.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
  if (!options_.cache_dir.empty()) fs::create_directories(options_.cache_dir);
}

Gateway::Stats Gateway::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

std::string Gateway::call_with_retry(const ChatRequest& req) {
  for (int attempt = 1;; ++attempt) {
    try {
      {
        std::lock_guard lock(mutex_);
        ++stats_.upstream_chat_calls;
      }
      return provider_->complete(req);
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= options_.max_attempts)
        throw TransportError(std::string(e.what()) + " (after " + std::to_string(attempt) + " attempt(s))",
                             req.request_tag, false);
      std::this_thread::sleep_for(options_.backoff_base * (1 << (attempt - 1)));
    }
  }
}

std::optional<std::string> Gateway::read_disk(const std::string& key, const ChatRequest& req) const {
  if (options_.cache_dir.empty()) return std::nullopt;
  const fs::path p = options_.cache_dir / (key + ".json");
  if (!fs::exists(p)) return std::nullopt;
  try {
    json j = json::parse(read_file(p));
    if (j.at("request") != json::parse(req.to_json().dump())) return std::nullopt;
    return j.at("response").get<std::string>();
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entries are re-fetched
  }
}

void Gateway::write_disk(const std::string& key, const ChatRequest& req, const std::string& response) const {
  if (options_.cache_dir.empty()) return;
  ordered_json j;
  j["request"] = req.to_json();
  j["request_tag"] = req.request_tag;
  j["response"] = response;
  write_file_atomic(options_.cache_dir / (key + ".json"), j.dump(2));
}

std::string Gateway::complete(const ChatRequest& req) {
  if (!options_.cache_enabled) return call_with_retry(req);

  const std::string key = req.cache_key();
  std::promise<std::string> promise;
  {
    std::unique_lock lock(mutex_);
    auto it = chat_cache_.find(key);
    if (it != chat_cache_.end()) {
      ++stats_.cache_hits;
      auto fut = it->second;
      lock.unlock();
      return fut.get();
    }
    chat_cache_.emplace(key, promise.get_future().share());
  }

  try {
    std::string response;
    if (auto cached = read_disk(key, req)) {
      std::lock_guard lock(mutex_);
      ++stats_.cache_hits;
      response = std::move(*cached);
    } else {
      response = call_with_retry(req);
      write_disk(key, req, response);
    }
    promise.set_value(response);
    return response;
  } catch (...) {
    {
      std::lock_guard lock(mutex_);
      chat_cache_.erase(key);  // a later identical request may try again
    }
    promise.set_exception(std::current_exception());
    throw;
  }
}

std::vector<std::vector<double>> Gateway::embed_with_retry(const std::vector<std::string>& texts) {
  for (int attempt = 1;; ++attempt) {
    try {
      {
        std::lock_guard lock(mutex_);
        ++stats_.upstream_embed_calls;
        stats_.upstream_embed_texts += texts.size();
      }
      return provider_->embed(texts, options_.embedding_model_id);
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= options_.max_attempts)
        throw TransportError(std::string(e.what()) + " (after " + std::to_string(attempt) + " attempt(s))", "embed",
                             false);
      std::this_thread::sleep_for(options_.backoff_base * (1 << (attempt - 1)));
    }
  }
}

std::vector<EmbeddingVector> Gateway::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw ValidationError("embed requires at least one text");
  std::lock_guard embed_lock(embed_mutex_);

  auto key_of = [&](const std::string& t) { return sha256_hex(options_.embedding_model_id + '\0' + t); };
  auto check_dim = [&](std::size_t d) {
    if (d == 0) throw DimensionMismatchError("provider returned an empty embedding");
    if (embed_dim_ && *embed_dim_ != d)
      throw DimensionMismatchError("embedding dimension " + std::to_string(d) + " differs from " +
                                   std::to_string(*embed_dim_));
    embed_dim_ = d;
  };

  std::vector<std::string> missing;
  std::vector<std::string> missing_keys;
  for (const auto& t : texts) {
    const std::string key = key_of(t);
    if (options_.cache_enabled && embed_cache_.count(key)) continue;
    if (options_.cache_enabled && !options_.cache_dir.empty()) {
      const fs::path p = options_.cache_dir / ("emb-" + key + ".json");
      if (fs::exists(p)) {
        try {
          json j = json::parse(read_file(p));
          if (j.at("text") == t && j.at("model_id") == options_.embedding_model_id) {
            auto v = j.at("vector").get<std::vector<double>>();
            check_dim(v.size());
            embed_cache_[key] = std::move(v);
            continue;
          }
        } catch (const json::exception&) {
        }
      }
    }
    if (std::find(missing_keys.begin(), missing_keys.end(), key) != missing_keys.end()) continue;
    missing.push_back(t);
    missing_keys.push_back(key);
  }

  std::unordered_map<std::string, std::vector<double>> fresh;
  const std::size_t batch = std::max<std::size_t>(options_.embed_batch_size, 1);
  for (std::size_t i = 0; i < missing.size(); i += batch) {
    std::vector<std::string> part(missing.begin() + static_cast<std::ptrdiff_t>(i),
                                  missing.begin() + static_cast<std::ptrdiff_t>(std::min(i + batch, missing.size())));
    auto vecs = embed_with_retry(part);
    if (vecs.size() != part.size()) throw DimensionMismatchError("provider returned a wrong number of embeddings");
    for (std::size_t k = 0; k < part.size(); ++k) {
      check_dim(vecs[k].size());
      const std::string& key = missing_keys[i + k];
      if (options_.cache_enabled && !options_.cache_dir.empty()) {
        ordered_json j;
        j["model_id"] = options_.embedding_model_id;
        j["text"] = part[k];
        j["vector"] = vecs[k];
        write_file_atomic(options_.cache_dir / ("emb-" + key + ".json"), j.dump());
      }
      fresh[key] = std::move(vecs[k]);
    }
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    const std::string key = key_of(t);
    auto it = fresh.find(key);
    if (it != fresh.end()) {
      out.push_back({it->second, options_.embedding_model_id});
    } else {
      out.push_back({embed_cache_.at(key), options_.embedding_model_id});
    }
  }
  if (options_.cache_enabled)
    for (auto& [k, v] : fresh) embed_cache_[k] = std::move(v);
  return out;
}

}  // namespace tag
