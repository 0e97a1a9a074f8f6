// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "tag/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "tag/error.hpp"
#include "tag/gestalt.hpp"
#include "tag/json_output.hpp"
#include "tag/parallel.hpp"

namespace tag {

using nlohmann::json;

bool trivial_rewrite_filter(std::string_view original, std::string_view rewrite, double threshold) {
  return gestalt_ratio(original, rewrite) > threshold;
}

std::string npov_violation(const TaskCase& c) {
  if (auto it = c.metadata.find("violation"); it != c.metadata.end() && !it->second.empty()) return it->second;
  if (c.gold && c.gold->is_string()) return c.gold->get<std::string>();
  if (c.gold && c.gold->is_object() && c.gold->contains("violation") && (*c.gold)["violation"].is_string())
    return (*c.gold)["violation"].get<std::string>();
  throw MissingGoldError("case " + c.case_id + " has no violation description");
}

namespace {

void validate_judge(const json& v) {
  if (!v.is_object()) throw OutputInvalid("expected a JSON object");
  auto vfr = v.find("VFR");
  if (vfr == v.end() || !vfr->is_boolean()) throw OutputInvalid("missing boolean field \"VFR\"");
  for (const char* key : {"Rem", "Pres", "Tone", "Flu"}) {
    auto it = v.find(key);
    if (it == v.end() || !it->is_number_integer())
      throw OutputInvalid(std::string("field \"") + key + "\" must be an integer");
    const auto x = it->get<long long>();
    if (x < 1 || x > 5) throw OutputInvalid(std::string("field \"") + key + "\" out of range 1-5");
  }
  auto r = v.find("reason");
  if (r != v.end() && !r->is_string()) throw OutputInvalid("\"reason\" must be a string");
}

EvalScore base_score(const ExecutionRecord& rec, TaskDomain domain) {
  EvalScore s;
  s.case_id = rec.case_id;
  s.method_id = rec.method_id;
  s.domain = domain;
  s.units_shown = rec.units_shown.size();
  return s;
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// `id` occurs in `text` delimited by non-alphanumeric characters.
bool contains_token(const std::string& text, const std::string& id) {
  if (id.empty()) return false;
  for (std::size_t pos = text.find(id); pos != std::string::npos; pos = text.find(id, pos + 1)) {
    const bool left = pos == 0 || !is_alnum(text[pos - 1]);
    const std::size_t end = pos + id.size();
    const bool right = end == text.size() || !is_alnum(text[end]);
    if (left && right) return true;
  }
  return false;
}

std::optional<std::string> gold_string(const json& g, const char* key) {
  auto it = g.find(key);
  if (it == g.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw MissingGoldError(std::string("gold field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

}  // namespace

EvalScore judge_npov(const TaskCase& c, const ExecutionRecord& rec, Gateway& gateway, const JudgeOptions& opts) {
  EvalScore s = base_score(rec, TaskDomain::npov);
  const auto* out = std::get_if<NpovOutput>(&rec.parsed);
  if (!rec.parse_ok || !out) {
    s.floor = true;
    s.vfr = false;
    s.rem = s.pres = s.tone = s.flu = 1;
    return s;
  }
  if (trivial_rewrite_filter(c.input_text, out->rewrite, opts.trivial_threshold)) {
    s.filtered_trivial = true;
    s.vfr = false;
    return s;
  }
  const PromptLibrary& lib = opts.library();
  ChatRequest req;
  req.model_id = opts.model_id;
  req.system_message = lib.get("judge.npov.system");
  req.user_message = lib.render("judge.npov.user",
                                {{"original", c.input_text}, {"violation", npov_violation(c)}, {"rewrite", out->rewrite}});
  req.request_tag = "judge:" + rec.case_id + ":" + rec.method_id;
  StructuredOutput res = complete_json(gateway, req, validate_judge, OutputErrorKind::parse, lib);
  s.vfr = res.value["VFR"].get<bool>();
  s.rem = res.value["Rem"].get<int>();
  s.pres = res.value["Pres"].get<int>();
  s.tone = res.value["Tone"].get<int>();
  s.flu = res.value["Flu"].get<int>();
  if (res.value.contains("reason")) s.judge_reason = res.value["reason"].get<std::string>();
  return s;
}

std::string normalize_answer_text(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return out;
}

EvalScore score_nba_strict(const TaskCase& c, const ExecutionRecord& rec) {
  if (!c.gold || !c.gold->is_object()) throw MissingGoldError("case " + c.case_id + " has no gold answer");
  const json& g = *c.gold;
  auto ans = g.find("answer");
  if (ans == g.end() || !ans->is_boolean()) throw MissingGoldError("case " + c.case_id + " gold lacks \"answer\"");

  EvalScore s = base_score(rec, TaskDomain::nba);
  if (auto it = c.metadata.find("level"); it != c.metadata.end()) s.level = it->second;
  const auto* p = std::get_if<NbaOutput>(&rec.parsed);
  if (!rec.parse_ok || !p) {
    s.floor = true;
    s.strict_correct = false;
    return s;
  }
  const bool gold_answer = ans->get<bool>();
  bool correct = p->answer == gold_answer;
  if (correct && gold_answer) {
    const std::string pred_op = normalize_answer_text(p->illegal_operation.value_or(""));
    const auto gold_id = gold_string(g, "operation_id");
    const auto gold_op = gold_string(g, "illegal_operation");
    bool op_ok = false;
    if (gold_id && !normalize_answer_text(*gold_id).empty()) {
      const std::string id = normalize_answer_text(*gold_id);
      op_ok = pred_op == id || contains_token(pred_op, id);
    } else if (gold_op) {
      op_ok = pred_op == normalize_answer_text(*gold_op);
    }
    const auto gold_team = gold_string(g, "problematic_team");
    const bool team_ok =
        gold_team && normalize_answer_text(p->problematic_team.value_or("")) == normalize_answer_text(*gold_team);
    correct = op_ok && team_ok;
  }
  s.strict_correct = correct;
  return s;
}

std::map<std::string, CodeScore> parse_code_report(const json& j) {
  if (!j.is_object()) throw ParseError("code report must be a JSON object keyed by case_id");
  std::map<std::string, CodeScore> out;
  for (const auto& [id, v] : j.items()) {
    if (!v.is_object()) throw ParseError("code report entry '" + id + "' is not an object");
    auto p = v.find("pass1");
    auto l = v.find("lint_score");
    if (p == v.end() || !p->is_boolean()) throw ParseError("code report entry '" + id + "' lacks boolean pass1");
    if (l == v.end() || !l->is_number()) throw ParseError("code report entry '" + id + "' lacks numeric lint_score");
    const double lint = l->get<double>();
    if (!(lint >= -10.0 && lint <= 10.0)) throw ParseError("code report entry '" + id + "' lint_score outside [-10, 10]");
    out[id] = {p->get<bool>(), lint};
  }
  return out;
}

std::map<std::string, CodeScore> load_code_report(const std::filesystem::path& path) {
  try {
    return parse_code_report(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<EvalScore> ingest_code_scores(const std::vector<ExecutionRecord>& records,
                                          const std::map<std::string, CodeScore>& report) {
  std::vector<EvalScore> out;
  std::vector<std::string> missing;
  for (const auto& rec : records) {
    auto it = report.find(rec.case_id);
    if (it == report.end()) {
      missing.push_back(rec.case_id);
      continue;
    }
    EvalScore s = base_score(rec, TaskDomain::code);
    s.pass1 = it->second.pass1;
    s.lint_score = it->second.lint_score;
    out.push_back(std::move(s));
  }
  if (!missing.empty()) throw MissingScoreError(std::move(missing));
  return out;
}

std::vector<EvalScore> ingest_code_scores(const std::vector<ExecutionRecord>& records,
                                          const std::filesystem::path& report_path) {
  return ingest_code_scores(records, load_code_report(report_path));
}

std::vector<EvalScore> evaluate_records(const std::vector<ExecutionRecord>& records, const std::vector<TaskCase>& cases,
                                        TaskDomain domain, Gateway* gateway, const JudgeOptions& opts,
                                        const std::map<std::string, CodeScore>* code_report, std::size_t parallelism) {
  if (domain == TaskDomain::code) {
    if (!code_report) throw ConfigError("code-domain scoring needs an external score report");
    return ingest_code_scores(records, *code_report);
  }
  std::map<std::string, const TaskCase*> by_id;
  for (const auto& c : cases) by_id[c.case_id] = &c;
  std::vector<EvalScore> out(records.size());
  auto errors = parallel_for(records.size(), parallelism, [&](std::size_t i) {
    auto it = by_id.find(records[i].case_id);
    if (it == by_id.end()) throw MissingGoldError("no case for record " + records[i].case_id);
    if (domain == TaskDomain::npov) {
      if (!gateway) throw ConfigError("npov scoring needs a judge gateway");
      out[i] = judge_npov(*it->second, records[i], *gateway, opts);
    } else {
      out[i] = score_nba_strict(*it->second, records[i]);
    }
  });
  rethrow_first(errors);
  return out;
}

std::pair<int, std::string> method_order_key(const std::string& m) {
  if (m == "M0") return {0, ""};
  if (m == "M1") return {1, ""};
  if (m.rfind("M2:", 0) == 0) {
    const std::string k = m.substr(3);
    const bool numeric = !k.empty() && std::all_of(k.begin(), k.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    if (numeric) return {2, std::string(20 - std::min<std::size_t>(k.size(), 20), '0') + k};
    return {2, k};
  }
  if (m == "M3") return {3, ""};
  return {4, m};
}

double round_to(double x, int decimals) {
  const double f = std::pow(10.0, decimals);
  return std::round(x * f) / f;
}

Summary aggregate(const std::vector<EvalScore>& scores) {
  if (scores.empty()) throw EmptyInputError("no scores to aggregate");
  const TaskDomain domain = scores.front().domain;
  for (const auto& s : scores)
    if (s.domain != domain) throw MixedDomainError("scores span several task domains");

  std::map<std::string, std::vector<const EvalScore*>> by_method;
  for (const auto& s : scores) by_method[s.method_id].push_back(&s);

  Summary out;
  out.domain = domain;
  for (auto& [method, group] : by_method) {
    std::sort(group.begin(), group.end(), [](const EvalScore* a, const EvalScore* b) { return a->case_id < b->case_id; });
    SummaryRow row;
    row.method_id = method;
    row.cases = group.size();
    const double n = static_cast<double>(group.size());
    std::size_t units = 0;
    for (const auto* s : group) units += s->units_shown;
    row.mean_units = static_cast<double>(units) / n;

    if (domain == TaskDomain::npov) {
      std::size_t fixed = 0, judged = 0;
      long rem = 0, pres = 0, tone = 0, flu = 0;
      for (const auto* s : group) {
        if (s->vfr.value_or(false)) ++fixed;
        if (s->filtered_trivial) ++row.filtered_trivial;
        if (s->floor) ++row.floored;
        if (s->rem && s->pres && s->tone && s->flu) {
          ++judged;
          rem += *s->rem;
          pres += *s->pres;
          tone += *s->tone;
          flu += *s->flu;
        }
      }
      row.vfr_pct = 100.0 * static_cast<double>(fixed) / n;
      if (judged) {
        const double d = static_cast<double>(judged);
        row.rem = rem / d;
        row.pres = pres / d;
        row.tone = tone / d;
        row.flu = flu / d;
        row.aux_avg = static_cast<double>(rem + pres + tone + flu) / (4.0 * d);
      }
    } else if (domain == TaskDomain::nba) {
      std::size_t correct = 0;
      std::map<std::string, std::size_t> level_correct;
      for (const auto* s : group) {
        const bool ok = s->strict_correct.value_or(false);
        if (ok) ++correct;
        if (s->floor) ++row.floored;
        if (s->level) {
          ++row.level_cases[*s->level];
          if (ok) ++level_correct[*s->level];
        }
      }
      row.strict_pct = 100.0 * static_cast<double>(correct) / n;
      for (const auto& [lvl, cnt] : row.level_cases)
        row.level_pct[lvl] = 100.0 * static_cast<double>(level_correct[lvl]) / static_cast<double>(cnt);
    } else {
      std::size_t passed = 0;
      double lint = 0.0;
      for (const auto* s : group) {
        if (s->pass1.value_or(false)) ++passed;
        lint += s->lint_score.value_or(0.0);
      }
      row.pass1_pct = 100.0 * static_cast<double>(passed) / n;
      row.mean_lint = lint / n;
    }
    out.rows.push_back(std::move(row));
  }
  std::sort(out.rows.begin(), out.rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    return method_order_key(a.method_id) < method_order_key(b.method_id);
  });
  return out;
}

nlohmann::ordered_json to_json(const EvalScore& s) {
  nlohmann::ordered_json j;
  j["case_id"] = s.case_id;
  j["method_id"] = s.method_id;
  j["domain"] = to_string(s.domain);
  j["units_shown"] = s.units_shown;
  auto opt = [&](const char* key, const auto& v) {
    if (v) j[key] = *v;
  };
  switch (s.domain) {
    case TaskDomain::npov:
      opt("vfr", s.vfr);
      opt("rem", s.rem);
      opt("pres", s.pres);
      opt("tone", s.tone);
      opt("flu", s.flu);
      opt("judge_reason", s.judge_reason);
      j["filtered_trivial"] = s.filtered_trivial;
      j["floor"] = s.floor;
      break;
    case TaskDomain::nba:
      opt("strict_correct", s.strict_correct);
      opt("level", s.level);
      j["floor"] = s.floor;
      break;
    case TaskDomain::code:
      opt("pass1", s.pass1);
      opt("lint_score", s.lint_score);
      break;
  }
  return j;
}

EvalScore eval_score_from_json(const json& j) {
  try {
    EvalScore s;
    s.case_id = j.at("case_id").get<std::string>();
    s.method_id = j.at("method_id").get<std::string>();
    const auto d = parse_task_domain(j.at("domain").get<std::string>());
    if (!d) throw ParseError("unknown domain in score record");
    s.domain = *d;
    s.units_shown = j.value("units_shown", std::size_t{0});
    auto get = [&](const char* key, auto& slot) {
      if (j.contains(key) && !j[key].is_null()) slot = j[key].get<typename std::decay_t<decltype(slot)>::value_type>();
    };
    get("vfr", s.vfr);
    get("rem", s.rem);
    get("pres", s.pres);
    get("tone", s.tone);
    get("flu", s.flu);
    get("judge_reason", s.judge_reason);
    get("strict_correct", s.strict_correct);
    get("level", s.level);
    get("pass1", s.pass1);
    get("lint_score", s.lint_score);
    s.filtered_trivial = j.value("filtered_trivial", false);
    s.floor = j.value("floor", false);
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("score record: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const SummaryRow& r, TaskDomain domain) {
  nlohmann::ordered_json j;
  j["method_id"] = r.method_id;
  j["cases"] = r.cases;
  j["mean_units"] = round_to(r.mean_units, 2);
  auto mean = [&](const char* key, const std::optional<double>& v) {
    j[key] = v ? nlohmann::ordered_json(round_to(*v, 2)) : nlohmann::ordered_json(nullptr);
  };
  switch (domain) {
    case TaskDomain::npov:
      j["vfr_pct"] = round_to(r.vfr_pct.value_or(0.0), 1);
      mean("rem", r.rem);
      mean("pres", r.pres);
      mean("tone", r.tone);
      mean("flu", r.flu);
      mean("aux_avg", r.aux_avg);
      j["filtered_trivial"] = r.filtered_trivial;
      j["floored"] = r.floored;
      break;
    case TaskDomain::nba: {
      j["strict_pct"] = round_to(r.strict_pct.value_or(0.0), 1);
      auto& levels = j["levels"] = nlohmann::ordered_json::object();
      for (const auto& [lvl, pct] : r.level_pct)
        levels[lvl] = {{"cases", r.level_cases.at(lvl)}, {"strict_pct", round_to(pct, 1)}};
      j["floored"] = r.floored;
      break;
    }
    case TaskDomain::code:
      j["pass1_pct"] = round_to(r.pass1_pct.value_or(0.0), 1);
      mean("mean_lint", r.mean_lint);
      break;
  }
  return j;
}

nlohmann::ordered_json to_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["domain"] = to_string(s.domain);
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : s.rows) rows.push_back(to_json(r, s.domain));
  return j;
}

}  // namespace tag
