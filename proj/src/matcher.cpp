// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "tag/matcher.hpp"

#include <algorithm>
#include <sstream>

#include "tag/json_output.hpp"
#include "tag/parallel.hpp"

namespace tag {

using nlohmann::json;

std::string_view to_string(MatchMode m) {
  switch (m) {
    case MatchMode::applicability_rule: return "applicability_rule";
    case MatchMode::applicability_chunk: return "applicability_chunk";
    case MatchMode::relevance_rule: return "relevance_rule";
  }
  return "applicability_rule";
}

std::string_view to_string(Verdict v) { return v == Verdict::yes ? "YES" : "NO"; }

std::optional<MatchMode> parse_match_mode(std::string_view s) {
  if (s == "applicability_rule" || s == "applicability") return MatchMode::applicability_rule;
  if (s == "applicability_chunk" || s == "chunk") return MatchMode::applicability_chunk;
  if (s == "relevance_rule" || s == "relevance") return MatchMode::relevance_rule;
  return std::nullopt;
}

std::vector<MatchTarget> targets_of(const std::vector<Rule>& rules) {
  std::vector<MatchTarget> out;
  out.reserve(rules.size());
  for (const auto& r : rules) out.push_back(MatchTarget::of(r));
  return out;
}

std::vector<MatchTarget> targets_of(const std::vector<Chunk>& chunks) {
  std::vector<MatchTarget> out;
  out.reserve(chunks.size());
  for (const auto& c : chunks) out.push_back(MatchTarget::of(c));
  return out;
}

namespace {

constexpr const char* kNotSpecified = "(not specified)";

std::string join_tags(const std::vector<std::string>& tags) {
  std::string out;
  for (const auto& t : tags) out += (out.empty() ? "" : ", ") + t;
  return out;
}

std::string extension(const Rule& r, const std::string& key) {
  auto it = r.extensions.find(key);
  return it == r.extensions.end() || it->second.empty() ? kNotSpecified : it->second;
}

std::string bullet_lines(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out += (out.empty() ? "" : "\n") + std::string("  - ") + line;
  }
  return out.empty() ? std::string("  - ") + kNotSpecified : out;
}

void validate_general(const json& v) {
  if (!v.is_object()) throw OutputInvalid("expected a JSON object");
  auto it = v.find("verdict");
  if (it == v.end() || !it->is_string()) throw OutputInvalid("missing string field \"verdict\"");
  const auto s = it->get<std::string>();
  if (s != "YES" && s != "NO") throw OutputInvalid("verdict must be \"YES\" or \"NO\"");
}

void validate_nba(const json& v) {
  if (!v.is_object()) throw OutputInvalid("expected a JSON object");
  auto it = v.find("applicable");
  if (it == v.end() || !it->is_boolean()) throw OutputInvalid("missing boolean field \"applicable\"");
  auto r = v.find("reason");
  if (r != v.end() && !r->is_string()) throw OutputInvalid("\"reason\" must be a string");
}

bool uses_nba_schema(MatchMode mode, const MatchOptions& opts) {
  return mode == MatchMode::applicability_rule && opts.family == MatcherTemplate::nba;
}

}  // namespace

ChatRequest assemble_match_request(const TaskCase& c, const MatchTarget& t, MatchMode mode, const MatchOptions& opts) {
  const PromptLibrary& lib = opts.library();
  ChatRequest req;
  req.model_id = opts.model_id;
  req.request_tag = std::string(mode == MatchMode::relevance_rule ? "relevance:" : "match:") + c.case_id + ":" +
                    t.unit_id;

  if (mode == MatchMode::applicability_chunk) {
    req.system_message = lib.get("matcher.general.system");
    req.user_message = lib.render("matcher.general.user", {{"query", c.input_text},
                                                           {"rule_id", t.unit_id},
                                                           {"rule_name", "Policy excerpt"},
                                                           {"condition", t.chunk_text},
                                                           {"tags", "excerpt"}});
    return req;
  }
  if (!t.rule) throw InvalidParams("unit " + t.unit_id + " is not a rule but the mode requires one");
  const Rule& r = *t.rule;
  if (mode == MatchMode::relevance_rule) {
    req.system_message = lib.get("relevance.system");
    req.user_message = lib.render("relevance.user", {{"query", c.input_text},
                                                     {"rule_id", r.rule_id},
                                                     {"rule_name", r.rule_name},
                                                     {"condition", r.condition},
                                                     {"action", r.action},
                                                     {"tags", join_tags(r.category_tags)}});
    return req;
  }
  if (opts.family == MatcherTemplate::nba) {
    req.system_message = lib.get("matcher.nba.system");
    req.user_message =
        lib.render("matcher.nba.user", {{"scenario", c.input_text},
                                        {"rule_id", r.rule_id},
                                        {"rule_name", r.rule_name},
                                        {"primary_tag", r.category_tags.empty() ? kNotSpecified : r.category_tags[0]},
                                        {"applies_when", r.condition},
                                        {"constraint", extension(r, "constraint")},
                                        {"violation_check", extension(r, "violation_check")},
                                        {"does_not_apply_to", bullet_lines(extension(r, "does_not_apply_to"))}});
    return req;
  }
  req.system_message = lib.get("matcher.general.system");
  req.user_message = lib.render("matcher.general.user", {{"query", c.input_text},
                                                         {"rule_id", r.rule_id},
                                                         {"rule_name", r.rule_name},
                                                         {"condition", r.condition},
                                                         {"tags", join_tags(r.category_tags)}});
  return req;
}

MatchDecision judge_pair(const TaskCase& c, const MatchTarget& t, MatchMode mode, Gateway& gateway,
                         const MatchOptions& opts) {
  const ChatRequest req = assemble_match_request(c, t, mode, opts);
  const bool nba = uses_nba_schema(mode, opts);
  StructuredOutput out = complete_json(gateway, req, nba ? validate_nba : validate_general, OutputErrorKind::parse,
                                       opts.library());
  MatchDecision d;
  d.case_id = c.case_id;
  d.unit_id = t.unit_id;
  d.mode = mode;
  d.raw_response = out.raw;
  if (nba) {
    d.verdict = out.value["applicable"].get<bool>() ? Verdict::yes : Verdict::no;
    if (auto it = out.value.find("reason"); it != out.value.end()) d.reason = it->get<std::string>();
  } else {
    d.verdict = out.value["verdict"].get<std::string>() == "YES" ? Verdict::yes : Verdict::no;
  }
  return d;
}

CaseMatchError::CaseMatchError(MatchedSet partial, std::vector<std::pair<std::string, std::string>> failures)
    : Error([&] {
        std::string s = "case " + partial.case_id + ": " + std::to_string(failures.size()) + " pair(s) failed";
        if (!failures.empty()) s += "; first: " + failures.front().first + ": " + failures.front().second;
        return s;
      }()),
      partial_(std::move(partial)),
      failures_(std::move(failures)) {}

MatchedSet match_all(const TaskCase& c, const std::vector<MatchTarget>& units, MatchMode mode, Gateway& gateway,
                     const MatchOptions& opts) {
  if (units.empty()) throw EmptyInputError("no units to match for case " + c.case_id);
  std::vector<std::size_t> order(units.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return units[a].unit_id < units[b].unit_id; });
  for (std::size_t i = 1; i < order.size(); ++i)
    if (units[order[i]].unit_id == units[order[i - 1]].unit_id)
      throw ValidationError("duplicate unit id " + units[order[i]].unit_id);

  std::vector<std::optional<MatchDecision>> slots(units.size());
  auto errors = parallel_for(order.size(), opts.parallelism, [&](std::size_t i) {
    slots[i] = judge_pair(c, units[order[i]], mode, gateway, opts);
  });

  MatchedSet out;
  out.case_id = c.case_id;
  std::vector<std::pair<std::string, std::string>> failures;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        failures.emplace_back(units[order[i]].unit_id, e.what());
      }
      continue;
    }
    if (slots[i]->verdict == Verdict::yes) out.unit_ids.push_back(slots[i]->unit_id);
    out.decisions.push_back(std::move(*slots[i]));
  }
  if (!failures.empty()) throw CaseMatchError(std::move(out), std::move(failures));
  return out;
}

nlohmann::ordered_json to_json(const MatchedSet& m) {
  nlohmann::ordered_json j;
  j["case_id"] = m.case_id;
  j["unit_ids"] = m.unit_ids;
  auto& ds = j["decisions"] = nlohmann::ordered_json::array();
  for (const auto& d : m.decisions) {
    nlohmann::ordered_json e;
    e["unit_id"] = d.unit_id;
    e["verdict"] = to_string(d.verdict);
    e["mode"] = to_string(d.mode);
    e["reason"] = d.reason ? nlohmann::ordered_json(*d.reason) : nlohmann::ordered_json(nullptr);
    e["raw_response"] = d.raw_response;
    ds.push_back(std::move(e));
  }
  return j;
}

MatchedSet matched_set_from_json(const json& j) {
  try {
    MatchedSet m;
    m.case_id = j.at("case_id").get<std::string>();
    m.unit_ids = j.at("unit_ids").get<std::vector<std::string>>();
    for (const auto& e : j.at("decisions")) {
      MatchDecision d;
      d.case_id = m.case_id;
      d.unit_id = e.at("unit_id").get<std::string>();
      const auto v = e.at("verdict").get<std::string>();
      if (v != "YES" && v != "NO") throw ParseError("bad verdict '" + v + "'");
      d.verdict = v == "YES" ? Verdict::yes : Verdict::no;
      const auto mode = parse_match_mode(e.at("mode").get<std::string>());
      if (!mode) throw ParseError("bad match mode");
      d.mode = *mode;
      if (e.contains("reason") && e["reason"].is_string()) d.reason = e["reason"].get<std::string>();
      d.raw_response = e.value("raw_response", "");
      m.decisions.push_back(std::move(d));
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("matched set: ") + e.what());
  }
}

}  // namespace tag
