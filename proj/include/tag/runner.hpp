// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tag/config.hpp"
#include "tag/evaluation.hpp"
#include "tag/executor.hpp"
#include "tag/llm_gateway.hpp"
#include "tag/matcher.hpp"
#include "tag/prompts.hpp"
#include "tag/retrieval.hpp"
#include "tag/rule_model.hpp"

namespace tag {

/// File-name form of a method id (':' becomes '-').
std::string method_file_stem(const std::string& method_id);

struct MethodResult {
  std::string method_id;
  std::string label;
  std::filesystem::path records_path;
  std::filesystem::path scores_path;
  std::optional<SummaryRow> row;
  /// Mean units shown to the executor per case.
  double mean_units = 0.0;
  /// Set when the method failed; other methods still complete.
  std::optional<std::string> error;
  /// Rule count of the rule set the method used (phase ablation only).
  std::optional<std::size_t> rule_count;
};

struct RunRecord {
  std::string kind;  // matrix | phase_ablation | factorial
  nlohmann::ordered_json plan;
  std::string config_hash;
  std::map<std::string, std::string> template_hashes;
  std::vector<MethodResult> methods;
  nlohmann::ordered_json summary;

  nlohmann::ordered_json to_json() const;
};

/// SHA-256 over the plan snapshot and every template hash.
std::string config_hash(const ExperimentPlan& plan, const PromptLibrary& prompts);

/// Orchestrates methods over the case set. Methods run one after another;
/// cases within a method run concurrently. All upstream traffic goes through
/// the gateway, whose on-disk cache under <run_dir>/cache makes an
/// interrupted run resumable without repeating calls.
class Runner {
 public:
  Runner(ExperimentPlan plan, Gateway& gateway);

  RunRecord run_matrix();
  RunRecord run_phase_ablation();
  RunRecord run_factorial();

  const PromptLibrary& prompts() const noexcept { return prompts_; }
  const ExperimentPlan& plan() const noexcept { return plan_; }

 private:
  struct Outcome {
    std::vector<ExecutionRecord> records;
    std::vector<MatchedSet> matches;
  };

  RunRecord begin(const std::string& kind);
  void finish(RunRecord& rr, const nlohmann::ordered_json& summary);
  void log_event(const std::string& event, const nlohmann::ordered_json& fields = {});

  const Document& document();
  const std::vector<TaskCase>& cases();
  const RuleSet& verified_ruleset();
  const std::vector<Chunk>& chunks();
  const SimilarityIndex& chunk_index();

  Outcome run_none();
  Outcome run_all_rules(const std::vector<Rule>& rules);
  Outcome run_similarity_chunks(std::size_t k);
  Outcome run_similarity_rules(const std::vector<Rule>& rules, std::size_t k);
  Outcome run_applicability_rules(const std::vector<Rule>& rules, MatchMode mode);
  Outcome run_applicability_chunks();

  /// Executes, scores and persists one method; failures are captured.
  MethodResult run_method(const std::string& method_id, const std::string& label,
                          const std::function<Outcome()>& produce);
  void append_matches(const std::string& method_id, const std::vector<MatchedSet>& matches);

  ExperimentPlan plan_;
  Gateway& gateway_;
  PromptLibrary prompts_;
  std::optional<Document> doc_;
  std::optional<std::vector<TaskCase>> cases_;
  std::optional<RuleSet> ruleset_;
  std::optional<std::vector<Chunk>> chunks_;
  std::optional<SimilarityIndex> chunk_index_;
  std::optional<std::map<std::string, CodeScore>> code_report_;
  std::vector<std::string> matches_lines_;
  std::string current_method_;
  std::mutex log_mutex_;
};

}  // namespace tag
