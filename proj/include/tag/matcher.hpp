// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tag/corpus.hpp"
#include "tag/error.hpp"
#include "tag/llm_gateway.hpp"
#include "tag/prompts.hpp"
#include "tag/rule_model.hpp"

namespace tag {

enum class MatchMode { applicability_rule, applicability_chunk, relevance_rule };
enum class Verdict { yes, no };
/// Which applicability template family judges rule units.
enum class MatcherTemplate { general, nba };

std::string_view to_string(MatchMode m);
std::string_view to_string(Verdict v);
std::optional<MatchMode> parse_match_mode(std::string_view s);

struct MatchDecision {
  std::string case_id;
  std::string unit_id;
  Verdict verdict = Verdict::no;
  MatchMode mode = MatchMode::applicability_rule;
  std::optional<std::string> reason;
  std::string raw_response;

  bool operator==(const MatchDecision&) const = default;
};

struct MatchedSet {
  std::string case_id;
  std::vector<std::string> unit_ids;  // YES verdicts, ascending
  std::vector<MatchDecision> decisions;

  bool operator==(const MatchedSet&) const = default;
};

/// A unit presented to the matcher: a rule or a document chunk.
struct MatchTarget {
  std::string unit_id;
  std::optional<Rule> rule;
  std::string chunk_text;

  static MatchTarget of(const Rule& r) { return {r.rule_id, r, {}}; }
  static MatchTarget of(const Chunk& c) { return {chunk_unit_id(c.chunk_id), std::nullopt, c.text}; }
};

std::vector<MatchTarget> targets_of(const std::vector<Rule>& rules);
std::vector<MatchTarget> targets_of(const std::vector<Chunk>& chunks);

struct MatchOptions {
  MatcherTemplate family = MatcherTemplate::general;
  std::string model_id = "matcher";
  const PromptLibrary* prompts = nullptr;
  std::size_t parallelism = 8;

  const PromptLibrary& library() const { return prompts ? *prompts : PromptLibrary::defaults(); }
};

/// Builds the single-pair prompt. Applicability modes never show the action.
ChatRequest assemble_match_request(const TaskCase& c, const MatchTarget& t, MatchMode mode,
                                   const MatchOptions& opts = {});

/// One pair, one call. Throws ParseError when the verdict cannot be read
/// after the repair re-prompt.
MatchDecision judge_pair(const TaskCase& c, const MatchTarget& t, MatchMode mode, Gateway& gateway,
                         const MatchOptions& opts = {});

/// A case in which at least one pair failed. `partial` holds the decisions
/// that succeeded; `failures` lists (unit_id, message).
class CaseMatchError : public Error {
 public:
  CaseMatchError(MatchedSet partial, std::vector<std::pair<std::string, std::string>> failures);
  const MatchedSet& partial() const noexcept { return partial_; }
  const std::vector<std::pair<std::string, std::string>>& failures() const noexcept { return failures_; }

 private:
  MatchedSet partial_;
  std::vector<std::pair<std::string, std::string>> failures_;
};

/// Judges every unit in isolation. Decisions are ordered by unit_id.
MatchedSet match_all(const TaskCase& c, const std::vector<MatchTarget>& units, MatchMode mode, Gateway& gateway,
                     const MatchOptions& opts = {});

nlohmann::ordered_json to_json(const MatchedSet& m);
MatchedSet matched_set_from_json(const nlohmann::json& j);

}  // namespace tag
