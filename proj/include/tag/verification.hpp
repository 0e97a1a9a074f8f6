// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tag/corpus.hpp"
#include "tag/gestalt.hpp"
#include "tag/rule_model.hpp"

namespace tag {

struct FaithfulnessParams {
  double tau = 0.85;
  std::size_t stride = 50;
  /// Window length is |source| + window_extra.
  std::size_t window_extra = 50;
};

/// Where a piece of source text sits in the document (character offsets).
struct TextLocation {
  std::size_t start = 0;
  std::size_t end = 0;
  double ratio = 0.0;
  bool exact = false;
};

/// Best-scoring sliding window of `doc` against `src`. Windows start at 0,
/// stride, 2·stride, … (every start < |doc|) and are clipped at the end of
/// the document. Ties keep the smallest start. An exact occurrence short-
/// circuits the search with ratio 1.
TextLocation best_window_match(std::u32string_view doc, std::u32string_view src, const FaithfulnessParams& p = {});

/// Exact occurrence, else best window scoring above tau.
std::optional<TextLocation> locate_text(std::u32string_view doc, std::u32string_view src,
                                        const FaithfulnessParams& p = {});

struct FaithfulnessResult {
  RuleSet ruleset;  // unfaithful rules removed
  double faithfulness = 0.0;
  std::vector<std::string> removed_rule_ids;
  std::map<std::string, TextLocation> locations;  // rule_id -> located source
};

FaithfulnessResult check_faithfulness(const RuleSet& rs, const Document& doc, const FaithfulnessParams& p = {});

struct CoverageResult {
  double coverage = 0.0;
  std::vector<std::string> covered_span_ids;
  std::vector<std::string> uncovered_span_ids;
  /// Spans that could not be found in the document; also counted uncovered.
  std::vector<std::string> unlocated_span_ids;
};

/// Characters shared by [a_start, a_end) and [b_start, b_end).
std::size_t overlap_length(std::size_t a_start, std::size_t a_end, std::size_t b_start, std::size_t b_end);

/// True when the rule interval overlaps the span interval by at least
/// min_overlap · |span|.
bool covers(const TextLocation& span, const TextLocation& rule, double min_overlap);

/// A rule's intervals are its own source text and the original text of every
/// atomic behind a rule merged into it.
CoverageResult check_coverage(const RuleSet& rs, const Document& doc, double min_overlap = 0.5,
                              const FaithfulnessParams& p = {});

struct IndependenceResult {
  double independence = 0.0;
  std::vector<std::pair<std::string, std::string>> collisions;
};

/// Unique trimmed rule names over rule count. Colliding pairs are reported
/// only; rules are never removed.
IndependenceResult check_independence(const RuleSet& rs);

/// Re-runs operationalization for the atomics of uncovered spans.
using ReextractFn = std::function<std::vector<Rule>(const std::vector<AtomicUnit>&)>;

struct VerifyOptions {
  FaithfulnessParams faithfulness;
  double min_overlap = 0.5;
};

/// Full programmatic verification: drop unfaithful rules, measure coverage,
/// optionally send uncovered spans through one re-extraction round, exclude
/// spans that stay uncovered, measure independence, and mark survivors
/// verified. The report is attached to the returned rule set.
RuleSet verify(const RuleSet& rs, const Document& doc, const ReextractFn& reextract = {},
               const VerifyOptions& options = {});

}  // namespace tag
