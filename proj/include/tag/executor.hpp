// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tag/corpus.hpp"
#include "tag/llm_gateway.hpp"
#include "tag/prompts.hpp"
#include "tag/rule_model.hpp"

namespace tag {

enum class TaskDomain { npov, code, nba };
std::string_view to_string(TaskDomain d);
std::optional<TaskDomain> parse_task_domain(std::string_view s);

enum class ContextMode { rule, chunk, none };
std::string_view to_string(ContextMode m);

/// Reference material shown to the executor.
struct ExecutionContext {
  ContextMode mode = ContextMode::none;
  std::vector<Rule> rules;
  std::vector<Chunk> chunks;

  static ExecutionContext none() { return {}; }
  static ExecutionContext of_rules(std::vector<Rule> rules) { return {ContextMode::rule, std::move(rules), {}}; }
  static ExecutionContext of_chunks(std::vector<Chunk> chunks) { return {ContextMode::chunk, {}, std::move(chunks)}; }
  /// Unit ids in display order.
  std::vector<std::string> unit_ids() const;
};

inline constexpr const char* kNoReferencePlaceholder = "(no reference material provided)";

struct NpovOutput {
  /// True for "Applied rules: NONE".
  bool none = false;
  std::vector<std::string> applied_rules;
  std::string reasoning;
  std::string rewrite;

  bool operator==(const NpovOutput&) const = default;
};

struct NbaOutput {
  bool answer = false;
  std::optional<std::string> illegal_operation;
  std::optional<std::string> problematic_team;
  std::string rationale;

  bool operator==(const NbaOutput&) const = default;
};

struct CodeOutput {
  std::string source_code;

  bool operator==(const CodeOutput&) const = default;
};

using ParsedOutput = std::variant<std::monostate, NpovOutput, CodeOutput, NbaOutput>;

struct ExecutionRecord {
  std::string case_id;
  std::string method_id;
  TaskDomain domain = TaskDomain::npov;
  std::vector<std::string> units_shown;
  std::string prompt_hash;
  std::string raw_output;
  ParsedOutput parsed;
  bool parse_ok = false;
  std::string parse_error;

  bool operator==(const ExecutionRecord&) const = default;
};

struct ExecutorOptions {
  std::string model_id = "executor";
  const PromptLibrary* prompts = nullptr;

  const PromptLibrary& library() const { return prompts ? *prompts : PromptLibrary::defaults(); }
};

/// Reference section text: "<rule_id>: <action>" lines by ascending rule_id,
/// verbatim excerpts for chunks, or the placeholder.
std::string render_reference(const ExecutionContext& ctx);

ChatRequest assemble_prompt(const TaskCase& c, const ExecutionContext& ctx, TaskDomain domain,
                            const ExecutorOptions& opts = {});

/// Calls the executor and parses its output. Only TransportError escapes;
/// parse failures are recorded in the returned record.
ExecutionRecord execute(const TaskCase& c, const ExecutionContext& ctx, TaskDomain domain,
                        const std::string& method_id, Gateway& gateway, const ExecutorOptions& opts = {});

/// Throws ParseError when no "Rewrite:" line is present.
NpovOutput parse_npov(std::string_view raw);
/// Throws ParseError.
NbaOutput parse_nba(std::string_view raw);
/// Throws ParseError on empty output.
CodeOutput parse_code(std::string_view raw);

nlohmann::ordered_json to_json(const ExecutionRecord& r);
ExecutionRecord execution_record_from_json(const nlohmann::json& j);

}  // namespace tag
