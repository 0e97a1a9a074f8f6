// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace tag {

enum class NormativeType { requirement, prohibition, recommendation, permission, exception, conditional };
enum class RelationshipKind { duplicate, subsumption, overlap, conflict };
enum class PreferredAction { merge, keep_both, manual_review };

std::string_view to_string(NormativeType t);
std::string_view to_string(RelationshipKind k);
std::string_view to_string(PreferredAction a);
std::optional<NormativeType> parse_normative_type(std::string_view s);
std::optional<RelationshipKind> parse_relationship_kind(std::string_view s);
std::optional<PreferredAction> parse_preferred_action(std::string_view s);

/// Formats "<prefix>-<n>" zero-padded to three digits, e.g. make_id('R', 7) == "R-007".
std::string make_id(char prefix, std::size_t n);
bool is_valid_id(std::string_view id, char prefix);

/// Verbatim normative text found in the document.
struct SourceSpan {
  std::string span_id;
  std::string text;
  NormativeType normative_type = NormativeType::requirement;
  std::string context_summary;

  bool operator==(const SourceSpan&) const = default;
};

struct AtomicUnit {
  std::string atomic_id;
  std::string source_span_id;
  std::string text;
  std::string original_text;
  bool was_split = false;
  std::optional<std::string> split_rationale;

  bool operator==(const AtomicUnit&) const = default;
};

/// Provenance of a rule folded into a survivor by duplicate merging.
struct MergedProvenance {
  std::string rule_id;
  std::string source_atomic_id;
  std::string rule_name;

  bool operator==(const MergedProvenance&) const = default;
};

/// Operational rule (name, condition, action, source, tags).
///
/// `extensions` carries optional domain fields some matcher templates expose
/// (for the NBA template: constraint, violation_check, does_not_apply_to).
struct Rule {
  std::string rule_id;
  std::string source_atomic_id;
  std::string rule_name;
  std::string condition;
  std::string action;
  std::string source_text;
  std::vector<std::string> category_tags;
  bool verified = false;
  std::vector<MergedProvenance> merged_from;
  std::map<std::string, std::string> extensions;

  bool operator==(const Rule&) const = default;
};

/// A non-independent pair. rule_i < rule_j lexicographically.
struct RuleRelationship {
  std::string rule_i;
  std::string rule_j;
  RelationshipKind relationship = RelationshipKind::overlap;
  PreferredAction preferred_action = PreferredAction::keep_both;
  std::string explanation;

  bool operator==(const RuleRelationship&) const = default;
};

/// Output of programmatic verification.
struct VerificationReport {
  double faithfulness = 0.0;
  /// Covered spans over all spans after the optional re-extraction round,
  /// before uncovered spans are excluded.
  double coverage = 0.0;
  /// Same ratio before re-extraction.
  double coverage_initial = 0.0;
  /// Ratio over the spans kept in the final rule set.
  double coverage_post_exclusion = 0.0;
  double independence = 0.0;
  std::vector<std::string> removed_rule_ids;
  std::vector<std::string> uncovered_span_ids;
  std::vector<std::string> unlocated_span_ids;
  std::vector<std::string> excluded_span_ids;
  std::vector<std::string> reextracted_rule_ids;
  std::vector<std::pair<std::string, std::string>> flagged_name_collisions;
  std::size_t conflict_count = 0;
  std::size_t rules_before = 0;
  std::size_t rules_after = 0;

  bool operator==(const VerificationReport&) const = default;
};

struct RuleSet {
  std::string doc_id;
  std::vector<Rule> rules;
  std::vector<SourceSpan> spans;
  std::vector<AtomicUnit> atomics;
  std::vector<RuleRelationship> relationships;
  std::optional<VerificationReport> verification_report;

  bool operator==(const RuleSet&) const = default;

  /// Rules present before duplicate merging (survivors plus merged-away).
  std::size_t rules_before_dedup() const;
};

/// Throws ValidationError describing the first violated invariant. An empty
/// rule list is accepted only when `allow_empty_rules` is set.
void validate_ruleset(const RuleSet& rs, bool allow_empty_rules = false);

nlohmann::ordered_json to_json(const Rule& r);
nlohmann::ordered_json to_json(const VerificationReport& r);
nlohmann::ordered_json to_json(const RuleSet& rs);
/// Throws ParseError on schema violations.
Rule rule_from_json(const nlohmann::json& j);
VerificationReport report_from_json(const nlohmann::json& j);
RuleSet ruleset_from_json(const nlohmann::json& j);

void save_ruleset(const RuleSet& rs, const std::filesystem::path& path);
RuleSet load_ruleset(const std::filesystem::path& path);

/// Folds duplicate components (union-find over duplicate pairs) into their
/// smallest rule_id. Survivor tags become the union of the component's tags
/// and removed rules are recorded in `merged_from`. Other relationships are
/// kept as they are; the report's conflict_count is refreshed if present.
RuleSet merge_duplicates(const RuleSet& rs);

/// Conflict relationships whose two rules are both still present.
std::size_t count_conflicts(const RuleSet& rs);

/// Trimmed, lower-cased form used for tag comparison.
std::string normalize_tag(std::string_view tag);

}  // namespace tag
