// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "tag/extraction.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "tag/error.hpp"
#include "tag/json_output.hpp"
#include "tag/parallel.hpp"
#include "tag/utf8.hpp"

namespace tag {

using nlohmann::json;

void ExtractionConfig::validate() const {
  if (section_char_limit == 0 || atomic_batch_size == 0 || rule_batch_size == 0 || pair_batch_size == 0 ||
      max_parallel_requests == 0)
    throw InvalidParams("extraction limits must be positive");
  for (int p : enabled_phases)
    if (p < 1 || p > 5) throw InvalidParams("unknown phase " + std::to_string(p));
}

void ExtractionLog::add(ExtractionLogRecord rec) {
  std::lock_guard lock(mutex_);
  records_.push_back(std::move(rec));
}

std::vector<ExtractionLogRecord> ExtractionLog::records() const {
  std::lock_guard lock(mutex_);
  auto out = records_;
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.phase, a.batch) < std::tie(b.phase, b.batch);
  });
  return out;
}

std::size_t ExtractionLog::warning_count(Phase phase) const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& r : records_)
    if (r.phase == static_cast<int>(phase)) n += r.warnings.size();
  return n;
}

std::string ExtractionLog::to_jsonl() const {
  std::string out;
  for (const auto& r : records()) {
    nlohmann::ordered_json j;
    j["phase"] = r.phase;
    j["batch"] = r.batch;
    j["request_tag"] = r.request_tag;
    j["prompt_chars"] = r.prompt_chars;
    j["response_chars"] = r.response_chars;
    j["items_in"] = r.items_in;
    j["items_out"] = r.items_out;
    j["repaired"] = r.repaired;
    j["warnings"] = r.warnings;
    out += j.dump() + "\n";
  }
  return out;
}

namespace {

std::string domain_text(const ExtractionConfig& cfg, const std::string& label) {
  return cfg.domain.empty() ? label : cfg.domain;
}

// Validators only check shape; per-item semantic problems become warnings.
void require_array_of_objects(const json& v) {
  if (!v.is_array()) throw OutputInvalid("expected a JSON array");
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!v[i].is_object()) throw OutputInvalid("item " + std::to_string(i) + " is not an object");
}

void require_string(const json& item, std::size_t i, const char* key, bool optional = false) {
  auto it = item.find(key);
  if (it == item.end()) {
    if (optional) return;
    throw OutputInvalid("item " + std::to_string(i) + " lacks \"" + key + "\"");
  }
  if (!it->is_string() && !(optional && it->is_null()))
    throw OutputInvalid("item " + std::to_string(i) + " field \"" + key + "\" must be a string");
}

std::string str(const json& item, const char* key) {
  auto it = item.find(key);
  return it != item.end() && it->is_string() ? it->get<std::string>() : std::string();
}

std::string trimmed(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct CallResult {
  json value;
  ExtractionLogRecord rec;
};

CallResult call_phase(Gateway& gateway, const ExtractionConfig& cfg, Phase phase, std::size_t batch,
                      const std::string& system, const std::string& user,
                      const std::function<void(const json&)>& validate) {
  ChatRequest req;
  req.model_id = cfg.model_id;
  req.system_message = system;
  req.user_message = user;
  req.request_tag = cfg.request_tag_prefix + "phase" + std::to_string(static_cast<int>(phase)) + ":" + std::to_string(batch);
  StructuredOutput out = complete_json(gateway, req, validate, OutputErrorKind::schema, cfg.library());
  CallResult r;
  r.value = std::move(out.value);
  r.rec.phase = static_cast<int>(phase);
  r.rec.batch = batch;
  r.rec.request_tag = req.request_tag;
  r.rec.prompt_chars = utf8::length(system) + utf8::length(user);
  r.rec.response_chars = utf8::length(out.raw);
  r.rec.repaired = out.repaired;
  return r;
}

template <typename T>
std::vector<std::vector<T>> batches_of(const std::vector<T>& items, std::size_t size) {
  std::vector<std::vector<T>> out;
  for (std::size_t i = 0; i < items.size(); i += size)
    out.emplace_back(items.begin() + i, items.begin() + std::min(items.size(), i + size));
  return out;
}

void commit_log(ExtractionLog* log, std::vector<ExtractionLogRecord>& recs) {
  if (!log) return;
  for (auto& r : recs)
    if (!r.request_tag.empty()) log->add(std::move(r));
}

std::string first_words(const std::string& text, std::size_t n) {
  std::istringstream in(text);
  std::string word, out;
  for (std::size_t i = 0; i < n && in >> word; ++i) out += (out.empty() ? "" : " ") + word;
  return out;
}

nlohmann::ordered_json rule_view(const Rule& r) {
  nlohmann::ordered_json j;
  j["rule_id"] = r.rule_id;
  j["rule_name"] = r.rule_name;
  j["condition"] = r.condition;
  j["action"] = r.action;
  j["category_tags"] = r.category_tags;
  return j;
}

const char* const kExtensionKeys[] = {"constraint", "violation_check", "does_not_apply_to"};

std::string extension_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) out += (out.empty() ? "" : "\n") + (e.is_string() ? e.get<std::string>() : e.dump());
    return out;
  }
  return v.is_null() ? std::string() : v.dump();
}

}  // namespace

std::vector<Section> split_sections(const Document& doc, std::size_t limit) {
  if (limit == 0) throw InvalidParams("section_char_limit must be positive");
  const std::u32string text = utf8::decode(doc.text);
  std::vector<Section> out;
  std::size_t start = 0;
  const std::size_t n = text.size();
  while (start < n) {
    std::size_t end = n;
    if (n - start > limit) {
      end = start + limit;
      // Last paragraph break that keeps the section within the limit.
      std::size_t cut = std::u32string::npos;
      for (std::size_t i = end; i >= start + 2; --i)
        if (text[i - 1] == U'\n' && text[i - 2] == U'\n') {
          cut = i;
          break;
        }
      if (cut != std::u32string::npos && cut > start) end = cut;
    }
    out.push_back({start, end, utf8::encode(text.substr(start, end - start))});
    start = end;
  }
  return out;
}

std::vector<SourceSpan> phase1_detect_spans(const Document& doc, const ExtractionConfig& cfg, Gateway& gateway,
                                            ExtractionLog* log) {
  cfg.validate();
  const auto sections = split_sections(doc, cfg.section_char_limit);
  const PromptLibrary& lib = cfg.library();
  const std::string system = lib.render("phase1.system", {{"domain", domain_text(cfg, doc.domain_label)}});

  auto validate = [](const json& v) {
    require_array_of_objects(v);
    for (std::size_t i = 0; i < v.size(); ++i) {
      require_string(v[i], i, "text");
      require_string(v[i], i, "normative_type");
      require_string(v[i], i, "span_id", true);
      require_string(v[i], i, "context_summary", true);
    }
  };

  // Sections run concurrently, so the start_id shown to the model is a
  // per-section local number; ids are renumbered globally afterwards.
  std::vector<std::vector<SourceSpan>> found(sections.size());
  std::vector<ExtractionLogRecord> recs(sections.size());
  auto errors = parallel_for(sections.size(), cfg.max_parallel_requests, [&](std::size_t k) {
    const Section& sec = sections[k];
    const std::string user = lib.render("phase1.user", {{"doc", sec.text}, {"start_id", "1"}});
    CallResult res = call_phase(gateway, cfg, Phase::spans, k, system, user, validate);
    res.rec.items_in = 1;
    for (const auto& item : res.value) {
      const std::string text = str(item, "text");
      const auto type = parse_normative_type(trimmed(str(item, "normative_type")));
      if (text.empty()) {
        res.rec.warnings.push_back("empty span text dropped");
        continue;
      }
      if (sec.text.find(text) == std::string::npos) {
        res.rec.warnings.push_back("span is not a substring of its section: " + first_words(text, 8));
        continue;
      }
      if (!type) {
        res.rec.warnings.push_back("unknown normative_type '" + str(item, "normative_type") + "'");
        continue;
      }
      found[k].push_back({"", text, *type, str(item, "context_summary")});
    }
    res.rec.items_out = found[k].size();
    recs[k] = std::move(res.rec);
  });
  commit_log(log, recs);
  rethrow_first(errors);

  std::vector<SourceSpan> spans;
  for (auto& f : found)
    for (auto& s : f) {
      s.span_id = make_id('S', spans.size() + 1);
      spans.push_back(std::move(s));
    }
  return spans;
}

std::vector<AtomicUnit> phase2_decompose(const std::vector<SourceSpan>& spans, const ExtractionConfig& cfg,
                                         Gateway& gateway, ExtractionLog* log) {
  cfg.validate();
  if (spans.empty()) throw EmptyInputError("no spans to decompose");
  const PromptLibrary& lib = cfg.library();
  const std::string system = lib.render("phase2.system", {{"domain", cfg.domain}});
  const auto groups = batches_of(spans, cfg.atomic_batch_size);

  auto validate = [](const json& v) {
    require_array_of_objects(v);
    for (std::size_t i = 0; i < v.size(); ++i) {
      require_string(v[i], i, "source_span_id");
      require_string(v[i], i, "text");
      require_string(v[i], i, "atomic_id", true);
      require_string(v[i], i, "original_text", true);
      require_string(v[i], i, "split_rationale", true);
      auto ws = v[i].find("was_split");
      if (ws != v[i].end() && !ws->is_boolean())
        throw OutputInvalid("item " + std::to_string(i) + " field \"was_split\" must be a boolean");
    }
  };

  std::vector<std::vector<AtomicUnit>> found(groups.size());
  std::vector<ExtractionLogRecord> recs(groups.size());
  auto errors = parallel_for(groups.size(), cfg.max_parallel_requests, [&](std::size_t k) {
    const auto& group = groups[k];
    std::map<std::string, const SourceSpan*> by_id;
    nlohmann::ordered_json listing = nlohmann::ordered_json::array();
    for (const auto& s : group) {
      by_id[s.span_id] = &s;
      listing.push_back({{"span_id", s.span_id}, {"normative_type", to_string(s.normative_type)}, {"text", s.text}});
    }
    const std::string user = lib.render("phase2.user", {{"spans", listing.dump(2)}});
    CallResult res = call_phase(gateway, cfg, Phase::atomics, k, system, user, validate);
    res.rec.items_in = group.size();
    for (const auto& item : res.value) {
      const std::string sid = trimmed(str(item, "source_span_id"));
      auto it = by_id.find(sid);
      if (it == by_id.end()) {
        res.rec.warnings.push_back("unit cites unknown span '" + sid + "'");
        continue;
      }
      AtomicUnit a;
      a.source_span_id = sid;
      a.text = trimmed(str(item, "text"));
      if (a.text.empty()) {
        res.rec.warnings.push_back("empty atomic text dropped (span " + sid + ")");
        continue;
      }
      a.original_text = it->second->text;
      if (item.contains("original_text") && str(item, "original_text") != a.original_text)
        res.rec.warnings.push_back("original_text replaced by span text (span " + sid + ")");
      a.was_split = item.value("was_split", false);
      const std::string rationale = trimmed(str(item, "split_rationale"));
      if (a.was_split) {
        if (rationale.empty()) {
          res.rec.warnings.push_back("split unit without rationale (span " + sid + ")");
          a.split_rationale = "(not given)";
        } else {
          a.split_rationale = rationale;
        }
      }
      found[k].push_back(std::move(a));
    }
    res.rec.items_out = found[k].size();
    recs[k] = std::move(res.rec);
  });
  commit_log(log, recs);
  rethrow_first(errors);

  // Stable order: input span order, then model output order within a span.
  std::map<std::string, std::size_t> span_pos;
  for (std::size_t i = 0; i < spans.size(); ++i) span_pos[spans[i].span_id] = i;
  std::vector<AtomicUnit> atomics;
  for (auto& f : found)
    for (auto& a : f) atomics.push_back(std::move(a));
  std::stable_sort(atomics.begin(), atomics.end(), [&](const AtomicUnit& x, const AtomicUnit& y) {
    return span_pos[x.source_span_id] < span_pos[y.source_span_id];
  });
  for (std::size_t i = 0; i < atomics.size(); ++i) atomics[i].atomic_id = make_id('A', i + 1);
  return atomics;
}

std::vector<Rule> phase3_operationalize(const std::vector<AtomicUnit>& atomics, const ExtractionConfig& cfg,
                                        Gateway& gateway, ExtractionLog* log, std::size_t first_rule_number) {
  cfg.validate();
  if (atomics.empty()) throw EmptyInputError("no atomic units to operationalize");
  const PromptLibrary& lib = cfg.library();
  const std::string system = lib.render("phase3.system", {{"domain", cfg.domain}});
  const auto groups = batches_of(atomics, cfg.rule_batch_size);

  auto validate = [](const json& v) {
    require_array_of_objects(v);
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (const char* key : {"source_atomic_id", "rule_name", "condition", "action", "source_text"})
        require_string(v[i], i, key);
      require_string(v[i], i, "rule_id", true);
      auto tags = v[i].find("category_tags");
      if (tags == v[i].end() || !tags->is_array())
        throw OutputInvalid("item " + std::to_string(i) + " field \"category_tags\" must be an array");
      for (const auto& t : *tags)
        if (!t.is_string()) throw OutputInvalid("item " + std::to_string(i) + " has a non-string tag");
    }
  };

  std::vector<std::vector<Rule>> found(groups.size());
  std::vector<ExtractionLogRecord> recs(groups.size());
  auto errors = parallel_for(groups.size(), cfg.max_parallel_requests, [&](std::size_t k) {
    const auto& group = groups[k];
    std::map<std::string, const AtomicUnit*> by_id;
    nlohmann::ordered_json listing = nlohmann::ordered_json::array();
    for (const auto& a : group) {
      by_id[a.atomic_id] = &a;
      listing.push_back({{"atomic_id", a.atomic_id}, {"text", a.text}, {"original_text", a.original_text}});
    }
    const std::string user = lib.render("phase3.user", {{"atomics", listing.dump(2)}});
    CallResult res = call_phase(gateway, cfg, Phase::operationalize, k, system, user, validate);
    res.rec.items_in = group.size();
    for (const auto& item : res.value) {
      Rule r;
      r.source_atomic_id = trimmed(str(item, "source_atomic_id"));
      auto it = by_id.find(r.source_atomic_id);
      if (it == by_id.end()) {
        res.rec.warnings.push_back("rule cites unknown atomic '" + r.source_atomic_id + "'");
        continue;
      }
      r.rule_name = trimmed(str(item, "rule_name"));
      r.condition = trimmed(str(item, "condition"));
      r.action = trimmed(str(item, "action"));
      r.source_text = str(item, "source_text");
      if (r.rule_name.empty() || r.condition.empty() || r.action.empty() || trimmed(r.source_text).empty()) {
        res.rec.warnings.push_back("rule with an empty field dropped (atomic " + r.source_atomic_id + ")");
        continue;
      }
      for (const auto& t : item["category_tags"]) {
        std::string tag = trimmed(t.get<std::string>());
        if (tag.empty()) continue;
        const bool dup = std::any_of(r.category_tags.begin(), r.category_tags.end(),
                                     [&](const std::string& x) { return normalize_tag(x) == normalize_tag(tag); });
        if (!dup) r.category_tags.push_back(std::move(tag));
      }
      if (r.category_tags.empty()) {
        res.rec.warnings.push_back("rule without tags dropped (atomic " + r.source_atomic_id + ")");
        continue;
      }
      if (r.category_tags.size() > 3) {
        r.category_tags.resize(3);
        res.rec.warnings.push_back("tags truncated to 3 (atomic " + r.source_atomic_id + ")");
      }
      if (r.source_text != it->second->original_text)
        res.rec.warnings.push_back("source_text differs from the atomic's original text (atomic " +
                                   r.source_atomic_id + ")");
      for (const char* key : kExtensionKeys)
        if (auto e = item.find(key); e != item.end()) {
          std::string v = trimmed(extension_text(*e));
          if (!v.empty()) r.extensions[key] = std::move(v);
        }
      found[k].push_back(std::move(r));
    }
    res.rec.items_out = found[k].size();
    recs[k] = std::move(res.rec);
  });
  commit_log(log, recs);
  rethrow_first(errors);

  std::map<std::string, std::size_t> atomic_pos;
  for (std::size_t i = 0; i < atomics.size(); ++i) atomic_pos[atomics[i].atomic_id] = i;
  std::vector<Rule> rules;
  for (auto& f : found)
    for (auto& r : f) rules.push_back(std::move(r));
  std::stable_sort(rules.begin(), rules.end(), [&](const Rule& x, const Rule& y) {
    return atomic_pos[x.source_atomic_id] < atomic_pos[y.source_atomic_id];
  });
  for (std::size_t i = 0; i < rules.size(); ++i) rules[i].rule_id = make_id('R', first_rule_number + i);
  return rules;
}

std::vector<std::pair<std::size_t, std::size_t>> tag_sharing_pairs(const std::vector<Rule>& rules) {
  std::vector<std::size_t> order(rules.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rules[a].rule_id < rules[b].rule_id; });

  std::map<std::string, std::vector<std::size_t>> by_tag;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    std::set<std::string> seen;
    for (const auto& t : rules[order[pos]].category_tags) {
      const std::string n = normalize_tag(t);
      if (!n.empty() && seen.insert(n).second) by_tag[n].push_back(pos);
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> pos_pairs;
  for (const auto& [tag, members] : by_tag)
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b) pos_pairs.insert({members[a], members[b]});

  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(pos_pairs.size());
  for (const auto& [a, b] : pos_pairs) out.emplace_back(order[a], order[b]);
  return out;
}

DedupResult phase4_deduplicate(const std::vector<Rule>& rules, const ExtractionConfig& cfg, Gateway& gateway,
                               ExtractionLog* log) {
  cfg.validate();
  for (const auto& r : rules)
    if (r.category_tags.empty()) throw ValidationError("rule " + r.rule_id + " has no tags");
  const auto pairs = tag_sharing_pairs(rules);
  DedupResult result;
  result.candidate_pairs = pairs.size();
  const PromptLibrary& lib = cfg.library();
  const std::string system = lib.render("phase4.system", {{"domain", cfg.domain}});
  const auto groups = batches_of(pairs, cfg.pair_batch_size);
  result.calls = groups.size();

  auto validate = [](const json& v) {
    require_array_of_objects(v);
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (const char* key : {"rule_i", "rule_j", "relationship"}) require_string(v[i], i, key);
      require_string(v[i], i, "preferred_action", true);
      require_string(v[i], i, "explanation", true);
    }
  };

  std::vector<std::vector<RuleRelationship>> found(groups.size());
  std::vector<ExtractionLogRecord> recs(groups.size());
  auto errors = parallel_for(groups.size(), cfg.max_parallel_requests, [&](std::size_t k) {
    std::set<std::pair<std::string, std::string>> asked;
    nlohmann::ordered_json listing = nlohmann::ordered_json::array();
    for (const auto& [i, j] : groups[k]) {
      asked.insert({rules[i].rule_id, rules[j].rule_id});
      listing.push_back({{"rule_i", rule_view(rules[i])}, {"rule_j", rule_view(rules[j])}});
    }
    const std::string user = lib.render("phase4.user", {{"rules", listing.dump(2)}});
    CallResult res = call_phase(gateway, cfg, Phase::dedup, k, system, user, validate);
    res.rec.items_in = groups[k].size();
    std::set<std::pair<std::string, std::string>> answered;
    for (const auto& item : res.value) {
      std::string a = trimmed(str(item, "rule_i")), b = trimmed(str(item, "rule_j"));
      if (b < a) std::swap(a, b);
      const std::string label = trimmed(str(item, "relationship"));
      if (label == "independent") continue;
      if (!asked.count({a, b})) {
        res.rec.warnings.push_back("verdict for a pair not in the batch: " + a + "/" + b);
        continue;
      }
      if (!answered.insert({a, b}).second) {
        res.rec.warnings.push_back("repeated verdict for " + a + "/" + b);
        continue;
      }
      const auto kind = parse_relationship_kind(label);
      if (!kind) {
        res.rec.warnings.push_back("unknown relationship '" + label + "'");
        continue;
      }
      RuleRelationship rel;
      rel.rule_i = a;
      rel.rule_j = b;
      rel.relationship = *kind;
      const std::string pa = trimmed(str(item, "preferred_action"));
      if (auto p = parse_preferred_action(pa)) {
        rel.preferred_action = *p;
      } else {
        rel.preferred_action = *kind == RelationshipKind::duplicate ? PreferredAction::merge
                                                                     : PreferredAction::manual_review;
        if (!pa.empty()) res.rec.warnings.push_back("unknown preferred_action '" + pa + "'");
      }
      rel.explanation = trimmed(str(item, "explanation"));
      found[k].push_back(std::move(rel));
    }
    res.rec.items_out = found[k].size();
    recs[k] = std::move(res.rec);
  });
  commit_log(log, recs);
  rethrow_first(errors);

  RuleSet tmp;
  tmp.rules = rules;
  for (auto& f : found)
    for (auto& r : f) tmp.relationships.push_back(std::move(r));
  std::sort(tmp.relationships.begin(), tmp.relationships.end(),
            [](const RuleRelationship& x, const RuleRelationship& y) {
              return std::tie(x.rule_i, x.rule_j) < std::tie(y.rule_i, y.rule_j);
            });
  RuleSet merged = merge_duplicates(tmp);
  result.rules = std::move(merged.rules);
  result.relationships = std::move(merged.relationships);
  return result;
}

RuleSet run_extraction(const Document& doc, const ExtractionConfig& cfg_in, Gateway& gateway, ExtractionLog* log) {
  ExtractionConfig cfg = cfg_in;
  if (cfg.domain.empty()) cfg.domain = doc.domain_label;
  cfg.validate();

  RuleSet rs;
  rs.doc_id = doc.doc_id;

  if (cfg.enabled(Phase::spans)) {
    rs.spans = phase1_detect_spans(doc, cfg, gateway, log);
  } else {
    const auto sections = split_sections(doc, cfg.section_char_limit);
    for (std::size_t i = 0; i < sections.size(); ++i)
      rs.spans.push_back({make_id('S', i + 1), sections[i].text, NormativeType::requirement,
                          "whole section " + std::to_string(i + 1)});
  }
  validate_ruleset(rs, true);
  if (rs.spans.empty()) return rs;

  if (cfg.enabled(Phase::atomics)) {
    rs.atomics = phase2_decompose(rs.spans, cfg, gateway, log);
  } else {
    for (std::size_t i = 0; i < rs.spans.size(); ++i)
      rs.atomics.push_back({make_id('A', i + 1), rs.spans[i].span_id, rs.spans[i].text, rs.spans[i].text, false,
                            std::nullopt});
  }
  validate_ruleset(rs, true);
  if (rs.atomics.empty()) return rs;

  if (cfg.enabled(Phase::operationalize)) {
    rs.rules = phase3_operationalize(rs.atomics, cfg, gateway, log);
  } else {
    for (std::size_t i = 0; i < rs.atomics.size(); ++i) {
      const auto& a = rs.atomics[i];
      Rule r;
      r.rule_id = make_id('R', i + 1);
      r.source_atomic_id = a.atomic_id;
      r.rule_name = first_words(a.text, 8);
      r.condition = a.text;
      r.action = a.text;
      r.source_text = a.original_text;
      r.category_tags = {"untyped"};
      rs.rules.push_back(std::move(r));
    }
  }
  validate_ruleset(rs, true);

  if (cfg.enabled(Phase::dedup) && !rs.rules.empty()) {
    DedupResult d = phase4_deduplicate(rs.rules, cfg, gateway, log);
    rs.rules = std::move(d.rules);
    rs.relationships = std::move(d.relationships);
    validate_ruleset(rs, true);
  }
  return rs;
}

ReextractFn make_reextractor(const ExtractionConfig& cfg, Gateway& gateway, ExtractionLog* log) {
  return [cfg, &gateway, log](const std::vector<AtomicUnit>& atomics) -> std::vector<Rule> {
    if (atomics.empty()) return {};
    ExtractionConfig c = cfg;
    c.request_tag_prefix = "reextract:" + cfg.request_tag_prefix;
    return phase3_operationalize(atomics, c, gateway, log);
  };
}

RuleSet extract_and_verify(const Document& doc, const ExtractionConfig& cfg_in, Gateway& gateway, ExtractionLog* log) {
  ExtractionConfig cfg = cfg_in;
  if (cfg.domain.empty()) cfg.domain = doc.domain_label;
  RuleSet rs = run_extraction(doc, cfg, gateway, log);
  if (!cfg.enabled(Phase::verify) || rs.rules.empty()) return rs;
  ReextractFn re = cfg.enabled(Phase::operationalize) ? make_reextractor(cfg, gateway, log) : ReextractFn{};
  return verify(rs, doc, re);
}

}  // namespace tag
