// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "tag/verification.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "tag/error.hpp"
#include "tag/parallel.hpp"
#include "tag/utf8.hpp"

namespace tag {
namespace {

// Best window restricted to ratios above `floor`; windows whose upper bound
// cannot beat the current best (or the floor) are skipped.
TextLocation scan_windows(std::u32string_view doc, std::u32string_view src, const FaithfulnessParams& p,
                          double floor) {
  if (!src.empty()) {
    const auto pos = doc.find(src);
    if (pos != std::u32string_view::npos) return {pos, pos + src.size(), 1.0, true};
  }
  TextLocation best{0, 0, -1.0, false};
  const std::size_t stride = std::max<std::size_t>(p.stride, 1);
  const std::size_t width = src.size() + p.window_extra;
  for (std::size_t start = 0; start < doc.size(); start += stride) {
    const std::size_t end = std::min(start + width, doc.size());
    const std::u32string_view w = doc.substr(start, end - start);
    const double bar = std::max(best.ratio, floor);
    if (best.ratio >= 0.0 && gestalt_upper_bound(src, w) <= bar) continue;
    const double r = gestalt_ratio(src, w);
    if (r > best.ratio) best = {start, end, r, false};
  }
  if (best.ratio < 0.0) best = {0, 0, doc.empty() ? gestalt_ratio(src, U"") : 0.0, false};
  return best;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t id_number(const std::string& id) {
  std::size_t n = 0;
  for (std::size_t i = 2; i < id.size(); ++i) n = n * 10 + static_cast<std::size_t>(id[i] - '0');
  return n;
}

}  // namespace

TextLocation best_window_match(std::u32string_view doc, std::u32string_view src, const FaithfulnessParams& p) {
  return scan_windows(doc, src, p, -1.0);
}

std::optional<TextLocation> locate_text(std::u32string_view doc, std::u32string_view src,
                                        const FaithfulnessParams& p) {
  TextLocation loc = scan_windows(doc, src, p, p.tau);
  if (loc.exact || loc.ratio > p.tau) return loc;
  return std::nullopt;
}

FaithfulnessResult check_faithfulness(const RuleSet& rs, const Document& doc, const FaithfulnessParams& p) {
  const std::u32string text = utf8::decode(doc.text);
  std::vector<std::optional<TextLocation>> located(rs.rules.size());
  auto errors = parallel_for(rs.rules.size(), std::thread::hardware_concurrency(), [&](std::size_t i) {
    located[i] = locate_text(text, utf8::decode(rs.rules[i].source_text), p);
  });
  rethrow_first(errors);

  FaithfulnessResult out;
  out.ruleset = rs;
  out.ruleset.rules.clear();
  for (std::size_t i = 0; i < rs.rules.size(); ++i) {
    if (located[i]) {
      out.locations[rs.rules[i].rule_id] = *located[i];
      out.ruleset.rules.push_back(rs.rules[i]);
    } else {
      out.removed_rule_ids.push_back(rs.rules[i].rule_id);
    }
  }
  out.faithfulness = rs.rules.empty() ? 1.0
                                      : static_cast<double>(out.ruleset.rules.size()) /
                                            static_cast<double>(rs.rules.size());
  return out;
}

std::size_t overlap_length(std::size_t a_start, std::size_t a_end, std::size_t b_start, std::size_t b_end) {
  const std::size_t lo = std::max(a_start, b_start);
  const std::size_t hi = std::min(a_end, b_end);
  return hi > lo ? hi - lo : 0;
}

bool covers(const TextLocation& span, const TextLocation& rule, double min_overlap) {
  const std::size_t len = span.end - span.start;
  const std::size_t ov = overlap_length(span.start, span.end, rule.start, rule.end);
  return static_cast<double>(ov) >= min_overlap * static_cast<double>(len);
}

CoverageResult check_coverage(const RuleSet& rs, const Document& doc, double min_overlap,
                              const FaithfulnessParams& p) {
  const std::u32string text = utf8::decode(doc.text);
  // A survivor also stands for the atomics of the rules merged into it.
  std::map<std::string, const AtomicUnit*> atomic_by_id;
  for (const auto& a : rs.atomics) atomic_by_id[a.atomic_id] = &a;
  std::vector<std::string> sources;
  for (const auto& r : rs.rules) {
    sources.push_back(r.source_text);
    for (const auto& m : r.merged_from) {
      auto it = atomic_by_id.find(m.source_atomic_id);
      if (it != atomic_by_id.end()) sources.push_back(it->second->original_text);
    }
  }
  std::vector<std::optional<TextLocation>> rule_locs(sources.size());
  std::vector<std::optional<TextLocation>> span_locs(rs.spans.size());
  const std::size_t threads = std::thread::hardware_concurrency();
  rethrow_first(parallel_for(sources.size(), threads, [&](std::size_t i) {
    rule_locs[i] = locate_text(text, utf8::decode(sources[i]), p);
  }));
  rethrow_first(parallel_for(rs.spans.size(), threads, [&](std::size_t i) {
    span_locs[i] = locate_text(text, utf8::decode(rs.spans[i].text), p);
  }));

  CoverageResult out;
  for (std::size_t s = 0; s < rs.spans.size(); ++s) {
    const auto& id = rs.spans[s].span_id;
    if (!span_locs[s]) {
      out.unlocated_span_ids.push_back(id);
      out.uncovered_span_ids.push_back(id);
      continue;
    }
    const bool hit = std::any_of(rule_locs.begin(), rule_locs.end(), [&](const auto& loc) {
      return loc && covers(*span_locs[s], *loc, min_overlap);
    });
    (hit ? out.covered_span_ids : out.uncovered_span_ids).push_back(id);
  }
  out.coverage = rs.spans.empty() ? 1.0
                                  : static_cast<double>(out.covered_span_ids.size()) /
                                        static_cast<double>(rs.spans.size());
  return out;
}

IndependenceResult check_independence(const RuleSet& rs) {
  IndependenceResult out;
  std::map<std::string, std::vector<std::string>> by_name;
  for (const auto& r : rs.rules) by_name[trim(r.rule_name)].push_back(r.rule_id);
  for (const auto& [name, ids] : by_name)
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = i + 1; j < ids.size(); ++j) out.collisions.emplace_back(ids[i], ids[j]);
  std::sort(out.collisions.begin(), out.collisions.end());
  out.independence = rs.rules.empty() ? 1.0
                                      : static_cast<double>(by_name.size()) / static_cast<double>(rs.rules.size());
  return out;
}

RuleSet verify(const RuleSet& rs, const Document& doc, const ReextractFn& reextract, const VerifyOptions& options) {
  VerificationReport report;
  report.rules_before = rs.rules.size();

  FaithfulnessResult faith = check_faithfulness(rs, doc, options.faithfulness);
  RuleSet cur = std::move(faith.ruleset);
  report.faithfulness = faith.faithfulness;
  report.removed_rule_ids = faith.removed_rule_ids;

  CoverageResult cov = check_coverage(cur, doc, options.min_overlap, options.faithfulness);
  report.coverage_initial = cov.coverage;

  if (reextract && !cov.uncovered_span_ids.empty()) {
    const std::set<std::string> uncovered(cov.uncovered_span_ids.begin(), cov.uncovered_span_ids.end());
    std::size_t next_atomic = 0, next_rule = 0;
    for (const auto& a : cur.atomics) next_atomic = std::max(next_atomic, id_number(a.atomic_id));
    for (const auto& r : rs.rules) next_rule = std::max(next_rule, id_number(r.rule_id));

    std::vector<AtomicUnit> pending;
    std::set<std::string> with_atomics;
    for (const auto& a : cur.atomics)
      if (uncovered.count(a.source_span_id)) {
        pending.push_back(a);
        with_atomics.insert(a.source_span_id);
      }
    for (const auto& s : cur.spans)
      if (uncovered.count(s.span_id) && !with_atomics.count(s.span_id)) {
        AtomicUnit a{make_id('A', ++next_atomic), s.span_id, s.text, s.text, false, std::nullopt};
        cur.atomics.push_back(a);
        pending.push_back(std::move(a));
      }

    std::set<std::string> allowed;
    for (const auto& a : pending) allowed.insert(a.atomic_id);
    RuleSet fresh = cur;
    fresh.rules.clear();
    for (Rule r : reextract(pending)) {
      if (!allowed.count(r.source_atomic_id) || r.rule_name.empty() || r.condition.empty() || r.action.empty() ||
          r.source_text.empty() || r.category_tags.empty())
        continue;
      r.rule_id = make_id('R', ++next_rule);
      fresh.rules.push_back(std::move(r));
    }
    FaithfulnessResult fresh_faith = check_faithfulness(fresh, doc, options.faithfulness);
    for (const auto& id : fresh_faith.removed_rule_ids) report.removed_rule_ids.push_back(id);
    for (auto& r : fresh_faith.ruleset.rules) {
      report.reextracted_rule_ids.push_back(r.rule_id);
      cur.rules.push_back(std::move(r));
    }
    cov = check_coverage(cur, doc, options.min_overlap, options.faithfulness);
  }
  report.coverage = cov.coverage;
  report.uncovered_span_ids = cov.uncovered_span_ids;
  report.unlocated_span_ids = cov.unlocated_span_ids;

  // Spans still uncovered leave the rule set unless a surviving rule derives
  // from them, which keeps the provenance chain total.
  std::map<std::string, std::string> atomic_span;
  for (const auto& a : cur.atomics) atomic_span[a.atomic_id] = a.source_span_id;
  std::set<std::string> referenced;
  for (const auto& r : cur.rules)
    if (auto it = atomic_span.find(r.source_atomic_id); it != atomic_span.end()) referenced.insert(it->second);
  std::set<std::string> excluded;
  for (const auto& id : cov.uncovered_span_ids)
    if (!referenced.count(id)) excluded.insert(id);
  report.excluded_span_ids.assign(excluded.begin(), excluded.end());
  std::erase_if(cur.spans, [&](const SourceSpan& s) { return excluded.count(s.span_id) > 0; });
  std::erase_if(cur.atomics, [&](const AtomicUnit& a) { return excluded.count(a.source_span_id) > 0; });
  const std::size_t still_uncovered = cov.uncovered_span_ids.size() - excluded.size();
  report.coverage_post_exclusion =
      cur.spans.empty() ? 1.0
                        : static_cast<double>(cur.spans.size() - still_uncovered) / static_cast<double>(cur.spans.size());

  IndependenceResult ind = check_independence(cur);
  report.independence = ind.independence;
  report.flagged_name_collisions = ind.collisions;
  report.conflict_count = count_conflicts(cur);
  for (auto& r : cur.rules) r.verified = true;
  report.rules_after = cur.rules.size();
  cur.verification_report = std::move(report);
  return cur;
}

}  // namespace tag
