// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tag/executor.hpp"
#include "tag/extraction.hpp"
#include "tag/llm_gateway.hpp"
#include "tag/matcher.hpp"

namespace tag {

/// Parses the TOML subset used by run configs: [table] and [a.b] headers,
/// bare or quoted keys, basic and literal strings, integers, floats,
/// booleans, and (possibly multi-line) arrays of those. Throws ConfigError
/// with the offending line.
nlohmann::json parse_toml(std::string_view text);

enum class ProviderKind { scripted, http };

struct GatewayConfig {
  ProviderKind provider = ProviderKind::scripted;
  std::filesystem::path script;
  std::string endpoint;
  std::string embedding_endpoint;
  /// Name of the environment variable holding the API key.
  std::string api_key_env = "TAG_API_KEY";
  int timeout_seconds = 120;
  int max_attempts = 3;
  int backoff_ms = 500;
  std::size_t max_parallel_requests = 8;
  std::size_t embed_batch_size = 64;
  std::string embedding_model = "embedding";
  std::string extractor_model = "extractor";
  std::string matcher_model = "matcher";
  std::string executor_model = "executor";
  std::string judge_model = "judge";
};

/// Everything that determines a run's results. Paths are absolute.
struct ExperimentPlan {
  TaskDomain domain = TaskDomain::npov;
  std::string domain_description;
  std::filesystem::path doc_path;
  std::filesystem::path cases_path;
  std::filesystem::path ruleset_path;
  /// Extract and verify a rule set from doc_path when ruleset_path is empty.
  bool extract_if_missing = false;
  std::filesystem::path run_dir;
  std::filesystem::path templates_dir;
  std::filesystem::path code_report_path;
  std::int64_t seed = 0;

  std::vector<std::string> methods{"M0", "M1", "M2:5", "M2:10", "M2:15", "M2:20", "M3"};
  MatcherTemplate matcher_template = MatcherTemplate::general;
  std::size_t chunk_size = kDefaultChunkSize;
  std::size_t chunk_overlap = kDefaultChunkOverlap;
  std::size_t factorial_similarity_k = 20;
  bool relevance_control = true;
  double trivial_threshold = 0.98;
  std::size_t parallelism = 8;

  ExtractionConfig extraction;
  GatewayConfig gateway;

  /// Canonical snapshot; secrets (API keys) never appear in it.
  nlohmann::ordered_json to_json() const;
};

/// Loads a run config. Relative paths resolve against the config's directory.
ExperimentPlan load_plan(const std::filesystem::path& path);
ExperimentPlan plan_from_toml(const nlohmann::json& toml, const std::filesystem::path& base_dir);

/// "M0" | "M1" | "M2:<k>" | "M3"; throws ConfigError otherwise.
void validate_method_id(const std::string& method_id);

/// Provider described by the gateway section.
std::shared_ptr<Provider> make_provider(const GatewayConfig& cfg);
GatewayOptions gateway_options(const GatewayConfig& cfg, const std::filesystem::path& cache_dir);

}  // namespace tag
