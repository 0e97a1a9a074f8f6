// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tag/corpus.hpp"
#include "tag/executor.hpp"
#include "tag/llm_gateway.hpp"
#include "tag/prompts.hpp"

namespace tag {

/// Per-case score. Exactly one domain's field group is populated.
struct EvalScore {
  std::string case_id;
  std::string method_id;
  TaskDomain domain = TaskDomain::npov;
  std::size_t units_shown = 0;

  // npov
  std::optional<bool> vfr;
  std::optional<int> rem, pres, tone, flu;
  std::optional<std::string> judge_reason;
  bool filtered_trivial = false;
  /// Executor output could not be parsed; the score floor was assigned.
  bool floor = false;

  // nba
  std::optional<bool> strict_correct;
  std::optional<std::string> level;

  // code
  std::optional<bool> pass1;
  std::optional<double> lint_score;

  bool operator==(const EvalScore&) const = default;
};

inline constexpr double kTrivialRewriteThreshold = 0.98;

/// True when the rewrite is too close to the original to count as a fix.
bool trivial_rewrite_filter(std::string_view original, std::string_view rewrite,
                            double threshold = kTrivialRewriteThreshold);

struct JudgeOptions {
  std::string model_id = "judge";
  const PromptLibrary* prompts = nullptr;
  double trivial_threshold = kTrivialRewriteThreshold;

  const PromptLibrary& library() const { return prompts ? *prompts : PromptLibrary::defaults(); }
};

/// The violation description of an NPOV case: metadata "violation", else a
/// string gold value. Throws MissingGoldError.
std::string npov_violation(const TaskCase& c);

/// Filter first; the judge is called only for parsed, non-trivial rewrites.
EvalScore judge_npov(const TaskCase& c, const ExecutionRecord& rec, Gateway& gateway, const JudgeOptions& opts = {});

/// ASCII case-fold, trim, collapse internal whitespace.
std::string normalize_answer_text(std::string_view s);

/// Gold ({"answer", "illegal_operation", "operation_id"?, "problematic_team"})
/// against the parsed prediction. Throws MissingGoldError.
EvalScore score_nba_strict(const TaskCase& c, const ExecutionRecord& rec);

struct CodeScore {
  bool pass1 = false;
  double lint_score = 0.0;
};

/// case_id -> {pass1, lint_score}. Throws ParseError.
std::map<std::string, CodeScore> parse_code_report(const nlohmann::json& j);
std::map<std::string, CodeScore> load_code_report(const std::filesystem::path& path);

/// Joins external scores to records. Throws MissingScoreError listing every
/// record without a score.
std::vector<EvalScore> ingest_code_scores(const std::vector<ExecutionRecord>& records,
                                          const std::map<std::string, CodeScore>& report);
std::vector<EvalScore> ingest_code_scores(const std::vector<ExecutionRecord>& records,
                                          const std::filesystem::path& report_path);

/// Scores every record of one method. Cases are looked up by case_id.
std::vector<EvalScore> evaluate_records(const std::vector<ExecutionRecord>& records, const std::vector<TaskCase>& cases,
                                        TaskDomain domain, Gateway* gateway, const JudgeOptions& opts = {},
                                        const std::map<std::string, CodeScore>* code_report = nullptr,
                                        std::size_t parallelism = 8);

struct SummaryRow {
  std::string method_id;
  std::size_t cases = 0;
  double mean_units = 0.0;

  // npov
  std::optional<double> vfr_pct;
  std::optional<double> rem, pres, tone, flu, aux_avg;
  std::size_t filtered_trivial = 0;
  std::size_t floored = 0;

  // nba
  std::optional<double> strict_pct;
  std::map<std::string, double> level_pct;
  std::map<std::string, std::size_t> level_cases;

  // code
  std::optional<double> pass1_pct;
  std::optional<double> mean_lint;
};

struct Summary {
  TaskDomain domain = TaskDomain::npov;
  std::vector<SummaryRow> rows;
};

/// Sort key placing M0, M1, M2:k (ascending k), M3, then other labels.
std::pair<int, std::string> method_order_key(const std::string& method_id);

/// Per-method rows in canonical method order. Values are unrounded; to_json
/// rounds percentages to 1 decimal and means to 2. Throws EmptyInputError or
/// MixedDomainError.
Summary aggregate(const std::vector<EvalScore>& scores);

nlohmann::ordered_json to_json(const EvalScore& s);
EvalScore eval_score_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SummaryRow& r, TaskDomain domain);
nlohmann::ordered_json to_json(const Summary& s);

double round_to(double x, int decimals);

}  // namespace tag
