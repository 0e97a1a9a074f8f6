// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tag/corpus.hpp"
#include "tag/llm_gateway.hpp"
#include "tag/prompts.hpp"
#include "tag/rule_model.hpp"
#include "tag/verification.hpp"

namespace tag {

/// Pipeline phases; 5 is programmatic verification.
enum class Phase : int { spans = 1, atomics = 2, operationalize = 3, dedup = 4, verify = 5 };

struct ExtractionConfig {
  std::size_t section_char_limit = 8000;
  std::size_t atomic_batch_size = 20;
  std::size_t rule_batch_size = 20;
  std::size_t pair_batch_size = 10;
  std::set<int> enabled_phases{1, 2, 3, 4, 5};
  std::string model_id = "extractor";
  /// Text for the templates' {domain} slot; the document's domain label when empty.
  std::string domain;
  std::size_t max_parallel_requests = 4;
  /// Prepended to every request tag ("phase<N>:<batch>").
  std::string request_tag_prefix;
  const PromptLibrary* prompts = nullptr;

  bool enabled(Phase p) const { return enabled_phases.count(static_cast<int>(p)) > 0; }
  const PromptLibrary& library() const { return prompts ? *prompts : PromptLibrary::defaults(); }
  /// Throws InvalidParams unless every limit is positive.
  void validate() const;
};

struct ExtractionLogRecord {
  int phase = 0;
  std::size_t batch = 0;
  std::string request_tag;
  std::size_t prompt_chars = 0;
  std::size_t response_chars = 0;
  std::size_t items_in = 0;
  std::size_t items_out = 0;
  bool repaired = false;
  std::vector<std::string> warnings;
};

/// One record per phase call. Safe to append from concurrent batches.
class ExtractionLog {
 public:
  void add(ExtractionLogRecord rec);
  /// Records ordered by (phase, batch).
  std::vector<ExtractionLogRecord> records() const;
  std::size_t warning_count(Phase phase) const;
  std::string to_jsonl() const;

 private:
  mutable std::mutex mutex_;
  std::vector<ExtractionLogRecord> records_;
};

/// A slice of the document handed to one span-detection call.
struct Section {
  std::size_t start = 0;  // characters
  std::size_t end = 0;
  std::string text;
};

/// Splits at the paragraph break ("\n\n") closest below `limit` characters;
/// falls back to a hard cut when a section has no paragraph break.
std::vector<Section> split_sections(const Document& doc, std::size_t limit);

std::vector<SourceSpan> phase1_detect_spans(const Document& doc, const ExtractionConfig& cfg, Gateway& gateway,
                                            ExtractionLog* log = nullptr);

std::vector<AtomicUnit> phase2_decompose(const std::vector<SourceSpan>& spans, const ExtractionConfig& cfg,
                                         Gateway& gateway, ExtractionLog* log = nullptr);

/// Rule ids are assigned sequentially from `first_rule_number`.
std::vector<Rule> phase3_operationalize(const std::vector<AtomicUnit>& atomics, const ExtractionConfig& cfg,
                                        Gateway& gateway, ExtractionLog* log = nullptr,
                                        std::size_t first_rule_number = 1);

/// Unordered pairs (i < j by rule_id) sharing a normalized tag.
std::vector<std::pair<std::size_t, std::size_t>> tag_sharing_pairs(const std::vector<Rule>& rules);

struct DedupResult {
  std::vector<Rule> rules;
  std::vector<RuleRelationship> relationships;
  std::size_t candidate_pairs = 0;
  std::size_t calls = 0;
};

/// Judges tag-sharing pairs in batches and merges duplicates. Surviving rules
/// keep their ids.
DedupResult phase4_deduplicate(const std::vector<Rule>& rules, const ExtractionConfig& cfg, Gateway& gateway,
                               ExtractionLog* log = nullptr);

/// Phases 1-4 with disabled phases bypassed. The result is unverified.
RuleSet run_extraction(const Document& doc, const ExtractionConfig& cfg, Gateway& gateway,
                       ExtractionLog* log = nullptr);

/// Re-extraction hook for verify(): runs operationalization on the given atomics.
ReextractFn make_reextractor(const ExtractionConfig& cfg, Gateway& gateway, ExtractionLog* log = nullptr);

/// run_extraction followed by verify() unless the verification phase is disabled.
RuleSet extract_and_verify(const Document& doc, const ExtractionConfig& cfg, Gateway& gateway,
                           ExtractionLog* log = nullptr);

}  // namespace tag
