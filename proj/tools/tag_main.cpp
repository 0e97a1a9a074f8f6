// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: extraction, verification, indexing, matching,
// execution, evaluation and the experiment runs.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <memory>

#include "tag/config.hpp"
#include "tag/corpus.hpp"
#include "tag/error.hpp"
#include "tag/evaluation.hpp"
#include "tag/executor.hpp"
#include "tag/extraction.hpp"
#include "tag/matcher.hpp"
#include "tag/retrieval.hpp"
#include "tag/rule_model.hpp"
#include "tag/runner.hpp"
#include "tag/verification.hpp"

namespace fs = std::filesystem;
using namespace tag;

namespace {

struct ProviderArgs {
  std::string config;
  std::string script;
  std::string cache_dir;
};

void add_provider_options(CLI::App* cmd, ProviderArgs& a) {
  cmd->add_option("--config", a.config, "Run config (TOML) whose [gateway] section selects the provider");
  cmd->add_option("--script", a.script, "Provider script (JSON) for offline runs");
  cmd->add_option("--cache-dir", a.cache_dir, "Response cache directory");
}

struct Session {
  std::unique_ptr<Gateway> gateway;
  std::optional<ExperimentPlan> plan;
};

Session open_session(const ProviderArgs& a) {
  Session s;
  GatewayConfig gc;
  if (!a.config.empty()) {
    s.plan = load_plan(a.config);
    gc = s.plan->gateway;
  } else if (!a.script.empty()) {
    gc.script = a.script;
  } else {
    throw ConfigError("either --config or --script is required");
  }
  if (!a.script.empty()) {
    gc.provider = ProviderKind::scripted;
    gc.script = a.script;
  }
  s.gateway = std::make_unique<Gateway>(make_provider(gc), gateway_options(gc, a.cache_dir));
  return s;
}

std::vector<std::string> read_lines_nonempty(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(line);
    start = end + 1;
  }
  return out;
}

const PromptLibrary& library_for(const Session& s, std::optional<PromptLibrary>& holder) {
  if (s.plan && !s.plan->templates_dir.empty()) {
    holder = PromptLibrary::with_overrides(s.plan->templates_dir);
    return *holder;
  }
  return PromptLibrary::defaults();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-aligned rule retrieval toolkit"};
  app.require_subcommand(1);

  // extract
  ProviderArgs ex_p;
  std::string ex_doc, ex_domain, ex_out, ex_log, ex_desc;
  std::vector<int> ex_disable;
  bool ex_no_verify = false;
  auto* ex = app.add_subcommand("extract", "Extract a rule set from a document");
  ex->add_option("--doc", ex_doc, "Document (UTF-8 text)")->required();
  ex->add_option("--domain", ex_domain, "Domain label")->required();
  ex->add_option("--domain-description", ex_desc, "Text for the {domain} slot (defaults to the label)");
  ex->add_option("--out", ex_out, "Output rule set JSON")->required();
  ex->add_option("--log", ex_log, "Extraction log (JSONL)");
  ex->add_option("--disable-phase", ex_disable, "Phase to bypass (1-5); repeatable");
  ex->add_flag("--no-verify", ex_no_verify, "Stop after phase 4");
  add_provider_options(ex, ex_p);

  // verify
  std::string vf_rules, vf_doc, vf_out, vf_report;
  auto* vf = app.add_subcommand("verify", "Programmatic verification of a rule set");
  vf->add_option("--ruleset", vf_rules)->required();
  vf->add_option("--doc", vf_doc)->required();
  vf->add_option("--out", vf_out)->required();
  vf->add_option("--report", vf_report);

  // index
  ProviderArgs ix_p;
  std::string ix_rules, ix_doc, ix_kind = "rule", ix_out;
  std::size_t ix_size = kDefaultChunkSize, ix_overlap = kDefaultChunkOverlap;
  auto* ix = app.add_subcommand("index", "Build a similarity index over rules or chunks");
  ix->add_option("--ruleset", ix_rules);
  ix->add_option("--doc", ix_doc);
  ix->add_option("--kind", ix_kind)->check(CLI::IsMember({"rule", "chunk"}));
  ix->add_option("--chunk-size", ix_size);
  ix->add_option("--chunk-overlap", ix_overlap);
  ix->add_option("--out", ix_out)->required();
  add_provider_options(ix, ix_p);

  // match
  ProviderArgs mt_p;
  std::string mt_cases, mt_rules, mt_doc, mt_mode = "applicability", mt_out, mt_template = "general";
  auto* mt = app.add_subcommand("match", "Pairwise applicability matching");
  mt->add_option("--cases", mt_cases)->required();
  mt->add_option("--ruleset", mt_rules);
  mt->add_option("--doc", mt_doc, "Document to chunk (chunk mode)");
  mt->add_option("--mode", mt_mode)->check(CLI::IsMember({"applicability", "relevance", "chunk"}));
  mt->add_option("--template", mt_template)->check(CLI::IsMember({"general", "nba"}));
  mt->add_option("--out", mt_out)->required();
  add_provider_options(mt, mt_p);

  // run (single method)
  ProviderArgs rn_p;
  std::string rn_cases, rn_rules, rn_doc, rn_method, rn_domain, rn_out, rn_matches;
  std::size_t rn_size = kDefaultChunkSize, rn_overlap = kDefaultChunkOverlap;
  auto* rn = app.add_subcommand("run", "Execute one method over a case set");
  rn->add_option("--cases", rn_cases)->required();
  rn->add_option("--method", rn_method)->required();
  rn->add_option("--domain", rn_domain)->required()->check(CLI::IsMember({"npov", "code", "nba"}));
  rn->add_option("--ruleset", rn_rules);
  rn->add_option("--doc", rn_doc);
  rn->add_option("--matches", rn_matches, "matches.jsonl from `match` (M3)");
  rn->add_option("--chunk-size", rn_size);
  rn->add_option("--chunk-overlap", rn_overlap);
  rn->add_option("--out", rn_out)->required();
  add_provider_options(rn, rn_p);

  // evaluate
  ProviderArgs ev_p;
  std::string ev_records, ev_cases, ev_domain, ev_out, ev_summary, ev_code_report;
  auto* ev = app.add_subcommand("evaluate", "Score execution records");
  ev->add_option("--records", ev_records)->required();
  ev->add_option("--cases", ev_cases)->required();
  ev->add_option("--domain", ev_domain)->required()->check(CLI::IsMember({"npov", "code", "nba"}));
  ev->add_option("--out", ev_out)->required();
  ev->add_option("--summary", ev_summary);
  ev->add_option("--code-report", ev_code_report, "External code scores (JSON map case_id -> {pass1, lint_score})");
  add_provider_options(ev, ev_p);

  // experiment runs
  std::string run_config;
  auto* rm = app.add_subcommand("run-matrix", "Run the M0-M3 method matrix");
  rm->add_option("--config", run_config)->required();
  auto* ab = app.add_subcommand("ablate-phases", "Leave-one-phase-out extraction ablation");
  ab->add_option("--config", run_config)->required();
  auto* fc = app.add_subcommand("factorial", "Unit x relation factorial");
  fc->add_option("--config", run_config)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ex->parsed()) {
      Session s = open_session(ex_p);
      std::optional<PromptLibrary> holder;
      ExtractionConfig cfg = s.plan ? s.plan->extraction : ExtractionConfig{};
      cfg.prompts = &library_for(s, holder);
      if (s.plan) cfg.model_id = s.plan->gateway.extractor_model;
      cfg.domain = ex_desc.empty() ? ex_domain : ex_desc;
      for (int p : ex_disable) cfg.enabled_phases.erase(p);
      if (ex_no_verify) cfg.enabled_phases.erase(5);
      const Document doc = load_document(ex_doc, fs::path(ex_doc).stem().string(), ex_domain);
      ExtractionLog log;
      RuleSet rs = extract_and_verify(doc, cfg, *s.gateway, &log);
      save_ruleset(rs, ex_out);
      if (!ex_log.empty()) write_file_atomic(ex_log, log.to_jsonl());
      std::cout << "rules: " << rs.rules.size() << " spans: " << rs.spans.size()
                << " atomics: " << rs.atomics.size() << "\n";
      if (rs.verification_report)
        std::cout << "faithfulness: " << rs.verification_report->faithfulness
                  << " coverage: " << rs.verification_report->coverage
                  << " independence: " << rs.verification_report->independence << "\n";
    } else if (vf->parsed()) {
      RuleSet rs = load_ruleset(vf_rules);
      const Document doc = load_document(vf_doc, rs.doc_id);
      RuleSet out = verify(rs, doc);
      save_ruleset(out, vf_out);
      if (!vf_report.empty()) write_file_atomic(vf_report, to_json(*out.verification_report).dump(2) + "\n");
      std::cout << to_json(*out.verification_report).dump(2) << "\n";
    } else if (ix->parsed()) {
      Session s = open_session(ix_p);
      SimilarityIndex index;
      if (ix_kind == "rule") {
        if (ix_rules.empty()) throw ConfigError("--ruleset is required for --kind rule");
        index = build_index(rule_units(load_ruleset(ix_rules).rules), UnitKind::rule, *s.gateway);
      } else {
        if (ix_doc.empty()) throw ConfigError("--doc is required for --kind chunk");
        const Document doc = load_document(ix_doc, fs::path(ix_doc).stem().string());
        index = build_index(chunk_units(chunk_document(doc, ix_size, ix_overlap)), UnitKind::chunk, *s.gateway);
      }
      save_index(index, ix_out);
      std::cout << "indexed " << index.entries.size() << " units\n";
    } else if (mt->parsed()) {
      Session s = open_session(mt_p);
      std::optional<PromptLibrary> holder;
      MatchOptions mo;
      mo.prompts = &library_for(s, holder);
      mo.family = mt_template == "nba" ? MatcherTemplate::nba : MatcherTemplate::general;
      if (s.plan) mo.model_id = s.plan->gateway.matcher_model;
      std::vector<MatchTarget> targets;
      MatchMode mode = *parse_match_mode(mt_mode);
      if (mode == MatchMode::applicability_chunk) {
        if (mt_doc.empty()) throw ConfigError("--doc is required for chunk mode");
        targets = targets_of(chunk_document(load_document(mt_doc, "doc"), kDefaultChunkSize, kDefaultChunkOverlap));
      } else {
        if (mt_rules.empty()) throw ConfigError("--ruleset is required");
        targets = targets_of(load_ruleset(mt_rules).rules);
      }
      std::string out;
      for (const auto& c : load_cases(mt_cases)) out += to_json(match_all(c, targets, mode, *s.gateway, mo)).dump() + "\n";
      write_file_atomic(mt_out, out);
    } else if (rn->parsed()) {
      Session s = open_session(rn_p);
      std::optional<PromptLibrary> holder;
      ExecutorOptions eo;
      eo.prompts = &library_for(s, holder);
      if (s.plan) eo.model_id = s.plan->gateway.executor_model;
      validate_method_id(rn_method);
      const TaskDomain domain = *parse_task_domain(rn_domain);
      const auto cases = load_cases(rn_cases);
      std::optional<RuleSet> rs;
      if (!rn_rules.empty()) rs = load_ruleset(rn_rules);
      std::map<std::string, MatchedSet> matches;
      if (!rn_matches.empty())
        for (const auto& line : read_lines_nonempty(read_file(rn_matches))) {
          MatchedSet m = matched_set_from_json(nlohmann::json::parse(line));
          matches[m.case_id] = std::move(m);
        }
      std::optional<std::vector<Chunk>> chunks;
      std::optional<SimilarityIndex> index;
      std::string out;
      for (const auto& c : cases) {
        ExecutionContext ctx;
        if (rn_method == "M1" || rn_method == "M3") {
          if (!rs) throw ConfigError("--ruleset is required for " + rn_method);
          if (rn_method == "M1") {
            ctx = ExecutionContext::of_rules(rs->rules);
          } else {
            auto it = matches.find(c.case_id);
            if (it == matches.end()) throw ConfigError("no matched set for case " + c.case_id + " (pass --matches)");
            std::vector<Rule> picked;
            for (const auto& r : rs->rules)
              if (std::binary_search(it->second.unit_ids.begin(), it->second.unit_ids.end(), r.rule_id))
                picked.push_back(r);
            ctx = ExecutionContext::of_rules(std::move(picked));
          }
        } else if (rn_method != "M0") {
          if (rn_doc.empty()) throw ConfigError("--doc is required for " + rn_method);
          if (!chunks) {
            chunks = chunk_document(load_document(rn_doc, "doc"), rn_size, rn_overlap);
            index = build_index(chunk_units(*chunks), UnitKind::chunk, *s.gateway);
          }
          const auto qv = s.gateway->embed({c.input_text});
          std::vector<Chunk> picked;
          for (const auto& hit : top_k(*index, qv.front(), std::stoul(rn_method.substr(3))))
            for (const auto& ch : *chunks)
              if (chunk_unit_id(ch.chunk_id) == hit.unit_id) picked.push_back(ch);
          ctx = ExecutionContext::of_chunks(std::move(picked));
        }
        out += to_json(execute(c, ctx, domain, rn_method, *s.gateway, eo)).dump() + "\n";
      }
      write_file_atomic(rn_out, out);
    } else if (ev->parsed()) {
      const TaskDomain domain = *parse_task_domain(ev_domain);
      std::vector<ExecutionRecord> records;
      for (const auto& line : read_lines_nonempty(read_file(ev_records)))
        records.push_back(execution_record_from_json(nlohmann::json::parse(line)));
      const auto cases = load_cases(ev_cases);
      std::optional<Session> s;
      std::optional<PromptLibrary> holder;
      JudgeOptions jo;
      if (domain == TaskDomain::npov) {
        s = open_session(ev_p);
        jo.prompts = &library_for(*s, holder);
        if (s->plan) jo.model_id = s->plan->gateway.judge_model;
      }
      std::optional<std::map<std::string, CodeScore>> report;
      if (domain == TaskDomain::code) {
        if (ev_code_report.empty()) throw ConfigError("--code-report is required for the code domain");
        report = load_code_report(ev_code_report);
      }
      auto scores = evaluate_records(records, cases, domain, s ? s->gateway.get() : nullptr, jo,
                                     report ? &*report : nullptr);
      std::string out;
      for (const auto& sc : scores) out += to_json(sc).dump() + "\n";
      write_file_atomic(ev_out, out);
      const auto summary = to_json(aggregate(scores)).dump(2);
      if (!ev_summary.empty()) write_file_atomic(ev_summary, summary + "\n");
      std::cout << summary << "\n";
    } else {
      ExperimentPlan plan = load_plan(run_config);
      Gateway gateway(make_provider(plan.gateway), gateway_options(plan.gateway, plan.run_dir / "cache"));
      Runner runner(plan, gateway);
      RunRecord rr = rm->parsed() ? runner.run_matrix() : ab->parsed() ? runner.run_phase_ablation() : runner.run_factorial();
      std::cout << rr.summary.dump(2) << "\n";
      for (const auto& m : rr.methods)
        if (m.error) std::cerr << "method " << m.method_id << " failed: " << *m.error << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
