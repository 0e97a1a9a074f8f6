// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "tag/executor.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "tag/error.hpp"
#include "tag/json_output.hpp"

namespace tag {

using nlohmann::json;

std::string_view to_string(TaskDomain d) {
  switch (d) {
    case TaskDomain::npov: return "npov";
    case TaskDomain::code: return "code";
    case TaskDomain::nba: return "nba";
  }
  return "npov";
}

std::optional<TaskDomain> parse_task_domain(std::string_view s) {
  if (s == "npov") return TaskDomain::npov;
  if (s == "code") return TaskDomain::code;
  if (s == "nba") return TaskDomain::nba;
  return std::nullopt;
}

std::string_view to_string(ContextMode m) {
  switch (m) {
    case ContextMode::rule: return "rule";
    case ContextMode::chunk: return "chunk";
    case ContextMode::none: return "none";
  }
  return "none";
}

namespace {

std::vector<const Rule*> sorted_rules(const ExecutionContext& ctx) {
  std::vector<const Rule*> out;
  for (const auto& r : ctx.rules) out.push_back(&r);
  std::sort(out.begin(), out.end(), [](const Rule* a, const Rule* b) { return a->rule_id < b->rule_id; });
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool starts_with_ci(std::string_view line, std::string_view prefix) {
  if (line.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(line[i])) != std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  return true;
}

std::optional<std::string> optional_string(const json& v, const char* key) {
  auto it = v.find(key);
  if (it == v.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ParseError(std::string("\"") + key + "\" must be a string or null");
  return it->get<std::string>();
}

}  // namespace

std::vector<std::string> ExecutionContext::unit_ids() const {
  std::vector<std::string> out;
  if (mode == ContextMode::rule)
    for (const Rule* r : sorted_rules(*this)) out.push_back(r->rule_id);
  else if (mode == ContextMode::chunk)
    for (const auto& c : chunks) out.push_back(chunk_unit_id(c.chunk_id));
  return out;
}

std::string render_reference(const ExecutionContext& ctx) {
  std::string out;
  switch (ctx.mode) {
    case ContextMode::none:
      return kNoReferencePlaceholder;
    case ContextMode::rule:
      for (const Rule* r : sorted_rules(ctx)) out += (out.empty() ? "" : "\n") + r->rule_id + ": " + r->action;
      break;
    case ContextMode::chunk:
      for (const auto& c : ctx.chunks) out += (out.empty() ? "" : "\n\n") + c.text;
      break;
  }
  return out.empty() ? kNoReferencePlaceholder : out;
}

ChatRequest assemble_prompt(const TaskCase& c, const ExecutionContext& ctx, TaskDomain domain,
                            const ExecutorOptions& opts) {
  const PromptLibrary& lib = opts.library();
  std::string prefix;
  std::string input_slot;
  switch (domain) {
    case TaskDomain::npov:
      prefix = ctx.mode == ContextMode::chunk ? "executor.npov.chunk" : "executor.npov.rule";
      input_slot = "query";
      break;
    case TaskDomain::code:
      prefix = "executor.code";
      input_slot = "prompt";
      break;
    case TaskDomain::nba:
      prefix = "executor.nba";
      input_slot = "scenario";
      break;
  }
  ChatRequest req;
  req.model_id = opts.model_id;
  req.system_message = lib.get(prefix + ".system");
  req.user_message = lib.render(prefix + ".user", {{input_slot, c.input_text}, {"reference_rules", render_reference(ctx)}});
  req.request_tag = "execute:" + c.case_id;
  return req;
}

NpovOutput parse_npov(std::string_view raw) {
  std::optional<std::string> applied, reasoning, rewrite;
  std::istringstream in{std::string(raw)};
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    // Tolerate light markdown emphasis around the labels.
    while (!t.empty() && (t.front() == '*' || t.front() == '_')) t.erase(0, 1);
    auto take = [&](std::string_view label, std::optional<std::string>& slot) {
      if (!starts_with_ci(t, label)) return false;
      std::string rest = t.substr(label.size());
      while (!rest.empty() && (rest.front() == '*' || rest.front() == '_')) rest.erase(0, 1);
      slot = trim(rest);
      return true;
    };
    take("Applied rules:", applied) || take("Reasoning:", reasoning) || take("Rewrite:", rewrite);
  }
  if (!rewrite) throw ParseError("no \"Rewrite:\" line in executor output");
  NpovOutput out;
  out.rewrite = *rewrite;
  out.reasoning = reasoning.value_or("");
  if (applied) {
    std::string upper;
    for (char ch : *applied) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (upper == "NONE" || upper.empty()) {
      out.none = true;
    } else {
      std::istringstream ids(*applied);
      std::string id;
      while (std::getline(ids, id, ','))
        if (auto t = trim(id); !t.empty()) out.applied_rules.push_back(t);
    }
  } else {
    out.none = true;
  }
  return out;
}

NbaOutput parse_nba(std::string_view raw) {
  json v;
  try {
    v = parse_json_text(raw);
  } catch (const OutputInvalid& e) {
    throw ParseError(e.what());
  }
  if (!v.is_object()) throw ParseError("executor output is not a JSON object");
  auto it = v.find("answer");
  if (it == v.end() || !it->is_boolean()) throw ParseError("missing boolean field \"answer\"");
  NbaOutput out;
  out.answer = it->get<bool>();
  out.illegal_operation = optional_string(v, "illegal_operation");
  out.problematic_team = optional_string(v, "problematic_team");
  out.rationale = optional_string(v, "rationale").value_or("");
  return out;
}

CodeOutput parse_code(std::string_view raw) {
  std::string code = strip_code_fences(raw);
  if (code.empty()) throw ParseError("empty code output");
  return {code};
}

ExecutionRecord execute(const TaskCase& c, const ExecutionContext& ctx, TaskDomain domain,
                        const std::string& method_id, Gateway& gateway, const ExecutorOptions& opts) {
  ChatRequest req = assemble_prompt(c, ctx, domain, opts);
  req.request_tag += ":" + method_id;
  ExecutionRecord rec;
  rec.case_id = c.case_id;
  rec.method_id = method_id;
  rec.domain = domain;
  rec.units_shown = ctx.unit_ids();
  rec.prompt_hash = req.cache_key();
  rec.raw_output = gateway.complete(req);
  try {
    switch (domain) {
      case TaskDomain::npov: rec.parsed = parse_npov(rec.raw_output); break;
      case TaskDomain::code: rec.parsed = parse_code(rec.raw_output); break;
      case TaskDomain::nba: rec.parsed = parse_nba(rec.raw_output); break;
    }
    rec.parse_ok = true;
  } catch (const ParseError& e) {
    rec.parse_ok = false;
    rec.parse_error = e.what();
  }
  return rec;
}

nlohmann::ordered_json to_json(const ExecutionRecord& r) {
  nlohmann::ordered_json j;
  j["case_id"] = r.case_id;
  j["method_id"] = r.method_id;
  j["domain"] = to_string(r.domain);
  j["units_shown"] = r.units_shown;
  j["prompt_hash"] = r.prompt_hash;
  j["raw_output"] = r.raw_output;
  j["parse_ok"] = r.parse_ok;
  if (!r.parse_ok) j["parse_error"] = r.parse_error;
  nlohmann::ordered_json p(nullptr);
  if (const auto* n = std::get_if<NpovOutput>(&r.parsed)) {
    p = nlohmann::ordered_json::object();
    p["applied_rules"] = n->none ? nlohmann::ordered_json("NONE") : nlohmann::ordered_json(n->applied_rules);
    p["reasoning"] = n->reasoning;
    p["rewrite"] = n->rewrite;
  } else if (const auto* c = std::get_if<CodeOutput>(&r.parsed)) {
    p = nlohmann::ordered_json::object();
    p["source_code"] = c->source_code;
  } else if (const auto* b = std::get_if<NbaOutput>(&r.parsed)) {
    p = nlohmann::ordered_json::object();
    p["answer"] = b->answer;
    p["illegal_operation"] = b->illegal_operation ? nlohmann::ordered_json(*b->illegal_operation) : nlohmann::ordered_json(nullptr);
    p["problematic_team"] = b->problematic_team ? nlohmann::ordered_json(*b->problematic_team) : nlohmann::ordered_json(nullptr);
    p["rationale"] = b->rationale;
  }
  j["parsed"] = std::move(p);
  return j;
}

ExecutionRecord execution_record_from_json(const json& j) {
  try {
    ExecutionRecord r;
    r.case_id = j.at("case_id").get<std::string>();
    r.method_id = j.at("method_id").get<std::string>();
    const auto d = parse_task_domain(j.at("domain").get<std::string>());
    if (!d) throw ParseError("unknown domain in execution record");
    r.domain = *d;
    r.units_shown = j.at("units_shown").get<std::vector<std::string>>();
    r.prompt_hash = j.at("prompt_hash").get<std::string>();
    r.raw_output = j.at("raw_output").get<std::string>();
    r.parse_ok = j.at("parse_ok").get<bool>();
    r.parse_error = j.value("parse_error", "");
    const json& p = j.at("parsed");
    if (!p.is_null()) {
      switch (r.domain) {
        case TaskDomain::npov: {
          NpovOutput n;
          const json& ar = p.at("applied_rules");
          if (ar.is_string()) n.none = true;
          else n.applied_rules = ar.get<std::vector<std::string>>();
          n.reasoning = p.at("reasoning").get<std::string>();
          n.rewrite = p.at("rewrite").get<std::string>();
          r.parsed = n;
          break;
        }
        case TaskDomain::code: r.parsed = CodeOutput{p.at("source_code").get<std::string>()}; break;
        case TaskDomain::nba: {
          NbaOutput b;
          b.answer = p.at("answer").get<bool>();
          if (p.at("illegal_operation").is_string()) b.illegal_operation = p["illegal_operation"].get<std::string>();
          if (p.at("problematic_team").is_string()) b.problematic_team = p["problematic_team"].get<std::string>();
          b.rationale = p.value("rationale", "");
          r.parsed = b;
          break;
        }
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("execution record: ") + e.what());
  }
}

}  // namespace tag
