// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "tag/runner.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include "tag/error.hpp"
#include "tag/extraction.hpp"
#include "tag/hashing.hpp"
#include "tag/parallel.hpp"

namespace tag {

using nlohmann::json;
using nlohmann::ordered_json;

std::string method_file_stem(const std::string& method_id) {
  std::string out = method_id;
  for (char& c : out)
    if (c == ':' || c == '/' || c == '\\' || c == ' ') c = '-';
  return out;
}

std::string config_hash(const ExperimentPlan& plan, const PromptLibrary& prompts) {
  std::string material = plan.to_json().dump();
  for (const auto& [name, hash] : prompts.hashes()) material += "\n" + name + "=" + hash;
  return sha256_hex(material);
}

ordered_json RunRecord::to_json() const {
  ordered_json j;
  j["kind"] = kind;
  j["config_hash"] = config_hash;
  j["template_hashes"] = template_hashes;
  j["plan"] = plan;
  auto& ms = j["methods"] = ordered_json::array();
  for (const auto& m : methods) {
    ordered_json e;
    e["method_id"] = m.method_id;
    e["label"] = m.label;
    e["records"] = m.records_path.filename().string();
    e["scores"] = m.scores_path.filename().string();
    e["mean_units"] = round_to(m.mean_units, 2);
    if (m.rule_count) e["rule_count"] = *m.rule_count;
    e["error"] = m.error ? ordered_json(*m.error) : ordered_json(nullptr);
    ms.push_back(std::move(e));
  }
  j["summary"] = summary;
  return j;
}

namespace {

std::string method_label(const std::string& m) {
  if (m == "M0") return "No retrieval";
  if (m == "M1") return "All rules";
  if (m.rfind("M2:", 0) == 0) return "Standard RAG (top-" + m.substr(3) + ")";
  if (m == "M3") return "TAG";
  return m;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename T>
std::string to_jsonl(const std::vector<T>& items) {
  std::string out;
  for (const auto& it : items) out += to_json(it).dump() + "\n";
  return out;
}

bool needs_rules(const std::string& m) { return m == "M1" || m == "M3"; }
bool needs_doc(const std::string& m) { return m.rfind("M2:", 0) == 0; }

}  // namespace

Runner::Runner(ExperimentPlan plan, Gateway& gateway)
    : plan_(std::move(plan)),
      gateway_(gateway),
      prompts_(plan_.templates_dir.empty() ? PromptLibrary::defaults() : PromptLibrary::with_overrides(plan_.templates_dir)) {
  plan_.extraction.prompts = nullptr;
  plan_.extraction.model_id = plan_.gateway.extractor_model;
  plan_.extraction.domain = plan_.domain_description;
  plan_.extraction.max_parallel_requests = plan_.gateway.max_parallel_requests;
}

void Runner::log_event(const std::string& event, const ordered_json& fields) {
  ordered_json j;
  j["time"] = utc_now();
  j["event"] = event;
  for (const auto& [k, v] : fields.items()) j[k] = v;
  std::lock_guard lock(log_mutex_);
  std::ofstream out(plan_.run_dir / "log.jsonl", std::ios::app);
  out << j.dump() << "\n";
}

RunRecord Runner::begin(const std::string& kind) {
  std::filesystem::create_directories(plan_.run_dir / "cache");
  RunRecord rr;
  rr.kind = kind;
  rr.plan = plan_.to_json();
  rr.config_hash = config_hash(plan_, prompts_);
  rr.template_hashes = prompts_.hashes();

  const auto plan_file = plan_.run_dir / "plan.json";
  if (std::filesystem::exists(plan_file)) {
    json prev;
    try {
      prev = json::parse(read_file(plan_file));
    } catch (const json::parse_error&) {
      throw ConfigError(plan_file.string() + " is not valid JSON");
    }
    if (prev.value("config_hash", "") != rr.config_hash)
      throw ConfigError("run directory " + plan_.run_dir.string() +
                        " holds a run with a different configuration; use a fresh run_dir");
  }
  ordered_json pj;
  pj["config_hash"] = rr.config_hash;
  pj["plan"] = rr.plan;
  pj["template_hashes"] = rr.template_hashes;
  write_file_atomic(plan_file, pj.dump(2) + "\n");
  matches_lines_.clear();
  log_event("run_start", {{"kind", kind}, {"config_hash", rr.config_hash}});
  return rr;
}

void Runner::finish(RunRecord& rr, const ordered_json& summary) {
  rr.summary = summary;
  write_file_atomic(plan_.run_dir / "summary.json", summary.dump(2) + "\n");
  write_file_atomic(plan_.run_dir / "run_record.json", rr.to_json().dump(2) + "\n");
  const auto stats = gateway_.stats();
  log_event("run_end", {{"kind", rr.kind},
                        {"upstream_chat_calls", stats.upstream_chat_calls},
                        {"upstream_embed_calls", stats.upstream_embed_calls},
                        {"cache_hits", stats.cache_hits}});
}

const Document& Runner::document() {
  if (!doc_) {
    if (plan_.doc_path.empty()) throw ConfigError("[corpus] doc is required for this run");
    if (!std::filesystem::exists(plan_.doc_path)) throw ConfigError("document not found: " + plan_.doc_path.string());
    doc_ = load_document(plan_.doc_path, plan_.doc_path.stem().string(), plan_.domain_description);
  }
  return *doc_;
}

const std::vector<TaskCase>& Runner::cases() {
  if (!cases_) {
    if (!std::filesystem::exists(plan_.cases_path)) throw ConfigError("cases not found: " + plan_.cases_path.string());
    cases_ = load_cases(plan_.cases_path);
    if (cases_->empty()) throw ConfigError("case file is empty: " + plan_.cases_path.string());
  }
  return *cases_;
}

const RuleSet& Runner::verified_ruleset() {
  if (ruleset_) return *ruleset_;
  if (!plan_.ruleset_path.empty()) {
    if (!std::filesystem::exists(plan_.ruleset_path))
      throw ConfigError("verified rule set not found: " + plan_.ruleset_path.string());
    RuleSet rs = load_ruleset(plan_.ruleset_path);
    if (!rs.verification_report) throw ConfigError("rule set " + plan_.ruleset_path.string() + " is not verified");
    ruleset_ = std::move(rs);
  } else if (plan_.extract_if_missing) {
    ExtractionLog log;
    RuleSet rs = extract_and_verify(document(), plan_.extraction, gateway_, &log);
    write_file_atomic(plan_.run_dir / "extraction-log.jsonl", log.to_jsonl());
    save_ruleset(rs, plan_.run_dir / "ruleset.json");
    ruleset_ = std::move(rs);
  } else {
    throw ConfigError("a verified rule set is required ([corpus] ruleset or extract_if_missing)");
  }
  if (ruleset_->rules.empty()) throw ConfigError("the verified rule set has no rules");
  return *ruleset_;
}

const std::vector<Chunk>& Runner::chunks() {
  if (!chunks_) chunks_ = chunk_document(document(), plan_.chunk_size, plan_.chunk_overlap);
  return *chunks_;
}

const SimilarityIndex& Runner::chunk_index() {
  if (!chunk_index_) chunk_index_ = build_index(chunk_units(chunks()), UnitKind::chunk, gateway_);
  return *chunk_index_;
}

Runner::Outcome Runner::run_none() {
  const auto& cs = cases();
  Outcome out;
  out.records.resize(cs.size());
  ExecutorOptions eo{plan_.gateway.executor_model, &prompts_};
  rethrow_first(parallel_for(cs.size(), plan_.parallelism, [&](std::size_t i) {
    out.records[i] = execute(cs[i], ExecutionContext::none(), plan_.domain, current_method_, gateway_, eo);
  }));
  return out;
}

Runner::Outcome Runner::run_all_rules(const std::vector<Rule>& rules) {
  const auto& cs = cases();
  Outcome out;
  out.records.resize(cs.size());
  ExecutorOptions eo{plan_.gateway.executor_model, &prompts_};
  const ExecutionContext ctx = ExecutionContext::of_rules(rules);
  rethrow_first(parallel_for(cs.size(), plan_.parallelism, [&](std::size_t i) {
    out.records[i] = execute(cs[i], ctx, plan_.domain, current_method_, gateway_, eo);
  }));
  return out;
}

Runner::Outcome Runner::run_similarity_chunks(std::size_t k) {
  const auto& cs = cases();
  const auto& index = chunk_index();
  const auto& all = chunks();
  std::vector<std::string> queries;
  for (const auto& c : cs) queries.push_back(c.input_text);
  const auto qv = gateway_.embed(queries);
  Outcome out;
  out.records.resize(cs.size());
  ExecutorOptions eo{plan_.gateway.executor_model, &prompts_};
  rethrow_first(parallel_for(cs.size(), plan_.parallelism, [&](std::size_t i) {
    std::vector<Chunk> picked;
    for (const auto& s : top_k(index, qv[i], k))
      for (const auto& ch : all)
        if (chunk_unit_id(ch.chunk_id) == s.unit_id) picked.push_back(ch);
    out.records[i] = execute(cs[i], ExecutionContext::of_chunks(std::move(picked)), plan_.domain, current_method_, gateway_, eo);
  }));
  return out;
}

Runner::Outcome Runner::run_similarity_rules(const std::vector<Rule>& rules, std::size_t k) {
  const auto& cs = cases();
  const SimilarityIndex index = build_index(rule_units(rules), UnitKind::rule, gateway_);
  std::map<std::string, const Rule*> by_id;
  for (const auto& r : rules) by_id[r.rule_id] = &r;
  std::vector<std::string> queries;
  for (const auto& c : cs) queries.push_back(c.input_text);
  const auto qv = gateway_.embed(queries);
  Outcome out;
  out.records.resize(cs.size());
  ExecutorOptions eo{plan_.gateway.executor_model, &prompts_};
  rethrow_first(parallel_for(cs.size(), plan_.parallelism, [&](std::size_t i) {
    std::vector<Rule> picked;
    for (const auto& s : top_k(index, qv[i], k)) picked.push_back(*by_id.at(s.unit_id));
    out.records[i] = execute(cs[i], ExecutionContext::of_rules(std::move(picked)), plan_.domain, current_method_, gateway_, eo);
  }));
  return out;
}

Runner::Outcome Runner::run_applicability_rules(const std::vector<Rule>& rules, MatchMode mode) {
  const auto& cs = cases();
  MatchOptions mo{plan_.matcher_template, plan_.gateway.matcher_model, &prompts_, plan_.gateway.max_parallel_requests};
  ExecutorOptions eo{plan_.gateway.executor_model, &prompts_};
  const auto targets = targets_of(rules);
  std::map<std::string, const Rule*> by_id;
  for (const auto& r : rules) by_id[r.rule_id] = &r;
  Outcome out;
  out.records.resize(cs.size());
  out.matches.resize(cs.size());
  rethrow_first(parallel_for(cs.size(), plan_.parallelism, [&](std::size_t i) {
    out.matches[i] = match_all(cs[i], targets, mode, gateway_, mo);
    std::vector<Rule> picked;
    for (const auto& id : out.matches[i].unit_ids) picked.push_back(*by_id.at(id));
    out.records[i] = execute(cs[i], ExecutionContext::of_rules(std::move(picked)), plan_.domain, current_method_, gateway_, eo);
  }));
  return out;
}

Runner::Outcome Runner::run_applicability_chunks() {
  const auto& cs = cases();
  const auto& all = chunks();
  MatchOptions mo{MatcherTemplate::general, plan_.gateway.matcher_model, &prompts_, plan_.gateway.max_parallel_requests};
  ExecutorOptions eo{plan_.gateway.executor_model, &prompts_};
  const auto targets = targets_of(all);
  Outcome out;
  out.records.resize(cs.size());
  out.matches.resize(cs.size());
  rethrow_first(parallel_for(cs.size(), plan_.parallelism, [&](std::size_t i) {
    out.matches[i] = match_all(cs[i], targets, MatchMode::applicability_chunk, gateway_, mo);
    std::vector<Chunk> picked;
    for (const auto& ch : all)
      if (std::binary_search(out.matches[i].unit_ids.begin(), out.matches[i].unit_ids.end(), chunk_unit_id(ch.chunk_id)))
        picked.push_back(ch);
    out.records[i] = execute(cs[i], ExecutionContext::of_chunks(std::move(picked)), plan_.domain, current_method_, gateway_, eo);
  }));
  return out;
}

void Runner::append_matches(const std::string& method_id, const std::vector<MatchedSet>& matches) {
  for (const auto& m : matches) {
    ordered_json j;
    j["method_id"] = method_id;
    const auto fields = to_json(m);
    for (const auto& [k, v] : fields.items()) j[k] = v;
    matches_lines_.push_back(j.dump());
  }
  std::string text;
  for (const auto& l : matches_lines_) text += l + "\n";
  write_file_atomic(plan_.run_dir / "matches.jsonl", text);
}

MethodResult Runner::run_method(const std::string& method_id, const std::string& label,
                                const std::function<Outcome()>& produce) {
  MethodResult res;
  res.method_id = method_id;
  res.label = label;
  const std::string stem = method_file_stem(method_id);
  res.records_path = plan_.run_dir / ("records-" + stem + ".jsonl");
  res.scores_path = plan_.run_dir / ("scores-" + stem + ".jsonl");
  log_event("method_start", {{"method_id", method_id}});
  current_method_ = method_id;
  try {
    Outcome o = produce();
    write_file_atomic(res.records_path, to_jsonl(o.records));
    if (!o.matches.empty()) append_matches(method_id, o.matches);

    if (plan_.domain == TaskDomain::code && !code_report_) {
      if (plan_.code_report_path.empty()) throw ConfigError("[evaluation] code_report is required for code runs");
      code_report_ = load_code_report(plan_.code_report_path);
    }
    JudgeOptions jo{plan_.gateway.judge_model, &prompts_, plan_.trivial_threshold};
    auto scores = evaluate_records(o.records, cases(), plan_.domain, &gateway_, jo,
                                   code_report_ ? &*code_report_ : nullptr, plan_.parallelism);
    write_file_atomic(res.scores_path, to_jsonl(scores));
    Summary s = aggregate(scores);
    res.row = s.rows.front();
    res.mean_units = res.row->mean_units;
    log_event("method_end", {{"method_id", method_id}, {"cases", scores.size()}});
  } catch (const std::exception& e) {
    res.error = e.what();
    log_event("method_failed", {{"method_id", method_id}, {"error", e.what()}});
  }
  return res;
}

RunRecord Runner::run_matrix() {
  for (const auto& m : plan_.methods) validate_method_id(m);
  RunRecord rr = begin("matrix");
  cases();
  bool wants_rules = false, wants_doc = false;
  for (const auto& m : plan_.methods) {
    wants_rules = wants_rules || needs_rules(m);
    wants_doc = wants_doc || needs_doc(m);
  }
  if (wants_rules) verified_ruleset();
  if (wants_doc) document();

  // Methods in canonical order so output is independent of config ordering.
  std::vector<std::string> methods = plan_.methods;
  std::sort(methods.begin(), methods.end(),
            [](const auto& a, const auto& b) { return method_order_key(a) < method_order_key(b); });
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  for (const auto& m : methods) {
    std::function<Outcome()> produce;
    if (m == "M0") produce = [&] { return run_none(); };
    else if (m == "M1") produce = [&] { return run_all_rules(verified_ruleset().rules); };
    else if (m == "M3")
      produce = [&] { return run_applicability_rules(verified_ruleset().rules, MatchMode::applicability_rule); };
    else {
      const std::size_t k = std::stoul(m.substr(3));
      produce = [this, k] { return run_similarity_chunks(k); };
    }
    rr.methods.push_back(run_method(m, method_label(m), produce));
  }

  ordered_json summary;
  summary["domain"] = to_string(plan_.domain);
  ordered_json rows = ordered_json::array();
  ordered_json failed = ordered_json::array();
  for (const auto& mr : rr.methods) {
    if (!mr.row) {
      failed.push_back(mr.method_id);
      continue;
    }
    ordered_json row;
    row["label"] = mr.label;
    const auto fields = to_json(*mr.row, plan_.domain);
    for (const auto& [k, v] : fields.items()) row[k] = v;
    rows.push_back(std::move(row));
  }
  summary["rows"] = std::move(rows);
  summary["failed"] = std::move(failed);
  if (ruleset_) {
    summary["rules"] = ruleset_->rules.size();
    summary["rules_before_dedup"] = ruleset_->rules_before_dedup();
  }
  finish(rr, summary);
  return rr;
}

RunRecord Runner::run_phase_ablation() {
  RunRecord rr = begin("phase_ablation");
  cases();
  const Document& doc = document();
  struct Variant {
    std::string id;
    std::string label;
    int dropped;
  };
  const std::vector<Variant> variants = {{"full", "Full pipeline", 0},
                                         {"no-phase1", "- Phase 1 (span detection)", 1},
                                         {"no-phase2", "- Phase 2 (decomposition)", 2},
                                         {"no-phase3", "- Phase 3 (operationalization)", 3},
                                         {"no-phase4", "- Phase 4 (dedup)", 4},
                                         {"no-phase5", "- Phase 5 (verification)", 5}};
  ordered_json summary;
  summary["domain"] = to_string(plan_.domain);
  ordered_json rows = ordered_json::array();
  ordered_json failed = ordered_json::array();
  for (const auto& v : variants) {
    ExtractionConfig cfg = plan_.extraction;
    cfg.enabled_phases = {1, 2, 3, 4, 5};
    if (v.dropped) cfg.enabled_phases.erase(v.dropped);
    std::optional<std::size_t> rule_count;
    MethodResult mr = run_method(v.id, v.label, [&]() -> Outcome {
      ExtractionLog log;
      RuleSet rs = extract_and_verify(doc, cfg, gateway_, &log);
      write_file_atomic(plan_.run_dir / ("extraction-log-" + v.id + ".jsonl"), log.to_jsonl());
      save_ruleset(rs, plan_.run_dir / ("ruleset-" + v.id + ".json"));
      if (rs.rules.empty()) throw ValidationError("variant " + v.id + " produced no rules");
      rule_count = rs.rules.size();
      return run_applicability_rules(rs.rules, MatchMode::applicability_rule);
    });
    mr.rule_count = rule_count;
    if (mr.row) {
      ordered_json row;
      row["variant"] = v.id;
      row["label"] = v.label;
      row["rules"] = *rule_count;
      row["mean_picks"] = round_to(mr.mean_units, 2);
      const auto fields = to_json(*mr.row, plan_.domain);
      for (const auto& [k, val] : fields.items())
        if (k != "method_id") row[k] = val;
      rows.push_back(std::move(row));
    } else {
      failed.push_back(v.id);
    }
    rr.methods.push_back(std::move(mr));
  }
  summary["rows"] = std::move(rows);
  summary["failed"] = std::move(failed);
  finish(rr, summary);
  return rr;
}

RunRecord Runner::run_factorial() {
  RunRecord rr = begin("factorial");
  cases();
  const auto& rules = verified_ruleset().rules;
  document();

  auto row_of = [&](const MethodResult& mr, const char* units, const char* relation,
                    std::optional<std::size_t> k) -> std::optional<ordered_json> {
    if (!mr.row) return std::nullopt;
    ordered_json row;
    row["cell"] = mr.method_id;
    row["units"] = units;
    row["relation"] = relation;
    row["k"] = k ? ordered_json(*k) : ordered_json(nullptr);
    const auto fields = to_json(*mr.row, plan_.domain);
    for (const auto& [key, val] : fields.items())
      if (key != "method_id") row[key] = val;
    return row;
  };

  ordered_json summary;
  summary["domain"] = to_string(plan_.domain);
  ordered_json rows = ordered_json::array();
  ordered_json failed = ordered_json::array();
  auto record = [&](MethodResult mr, const char* units, const char* relation, std::optional<std::size_t> k) {
    if (auto row = row_of(mr, units, relation, k)) rows.push_back(std::move(*row));
    else failed.push_back(mr.method_id);
    rr.methods.push_back(std::move(mr));
  };

  const std::size_t chunk_k = plan_.factorial_similarity_k;
  record(run_method("chunks+similarity", "Chunks + Similarity", [&] { return run_similarity_chunks(chunk_k); }),
         "chunks", "similarity", chunk_k);
  record(run_method("chunks+applicability", "Chunks + Applicability", [&] { return run_applicability_chunks(); }),
         "chunks", "applicability", std::nullopt);

  MethodResult ra = run_method("rules+applicability", "Rules + Applicability",
                               [&] { return run_applicability_rules(rules, MatchMode::applicability_rule); });
  // Similarity over rules gets as many rules as the matcher picks on average.
  std::optional<std::size_t> rules_k;
  if (ra.row) rules_k = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(ra.mean_units)));
  MethodResult rs_cell;
  if (rules_k) {
    const std::size_t k = *rules_k;
    rs_cell = run_method("rules+similarity", "Rules + Similarity", [&] { return run_similarity_rules(rules, k); });
  } else {
    rs_cell.method_id = "rules+similarity";
    rs_cell.label = "Rules + Similarity";
    rs_cell.error = "k depends on the failed rules+applicability cell";
  }
  record(std::move(rs_cell), "rules", "similarity", rules_k);
  record(std::move(ra), "rules", "applicability", std::nullopt);

  if (plan_.relevance_control)
    record(run_method("rules+relevance", "Rules + Relevance",
                      [&] { return run_applicability_rules(rules, MatchMode::relevance_rule); }),
           "rules", "relevance", std::nullopt);

  summary["rows"] = std::move(rows);
  summary["failed"] = std::move(failed);
  summary["rules_similarity_k"] = rules_k ? ordered_json(*rules_k) : ordered_json(nullptr);
  finish(rr, summary);
  return rr;
}

}  // namespace tag
