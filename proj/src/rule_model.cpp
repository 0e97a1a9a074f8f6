// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "tag/rule_model.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>
#include <set>
#include <unordered_map>

#include "tag/corpus.hpp"
#include "tag/error.hpp"

namespace tag {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::string_view kNormativeNames[] = {"requirement", "prohibition", "recommendation",
                                                "permission",  "exception",   "conditional"};
constexpr std::string_view kRelationshipNames[] = {"duplicate", "subsumption", "overlap", "conflict"};
constexpr std::string_view kPreferredNames[] = {"merge", "keep_both", "manual_review"};

template <typename E, std::size_t N>
std::optional<E> lookup(std::string_view s, const std::string_view (&names)[N]) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<E>(i);
  return std::nullopt;
}

}  // namespace

std::string_view to_string(NormativeType t) { return kNormativeNames[static_cast<int>(t)]; }
std::string_view to_string(RelationshipKind k) { return kRelationshipNames[static_cast<int>(k)]; }
std::string_view to_string(PreferredAction a) { return kPreferredNames[static_cast<int>(a)]; }
std::optional<NormativeType> parse_normative_type(std::string_view s) {
  return lookup<NormativeType>(s, kNormativeNames);
}
std::optional<RelationshipKind> parse_relationship_kind(std::string_view s) {
  return lookup<RelationshipKind>(s, kRelationshipNames);
}
std::optional<PreferredAction> parse_preferred_action(std::string_view s) {
  return lookup<PreferredAction>(s, kPreferredNames);
}

std::string make_id(char prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c-%03zu", prefix, n);
  return buf;
}

bool is_valid_id(std::string_view id, char prefix) {
  if (id.size() < 5 || id[0] != prefix || id[1] != '-') return false;
  return std::all_of(id.begin() + 2, id.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::string normalize_tag(std::string_view tag) {
  const auto b = tag.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = tag.find_last_not_of(" \t\r\n");
  std::string out(tag.substr(b, e - b + 1));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::size_t RuleSet::rules_before_dedup() const {
  std::size_t n = rules.size();
  for (const auto& r : rules) n += r.merged_from.size();
  return n;
}

void validate_ruleset(const RuleSet& rs, bool allow_empty_rules) {
  if (rs.rules.empty() && !allow_empty_rules) throw ValidationError("rule set has no rules");

  std::set<std::string> span_ids;
  for (const auto& s : rs.spans) {
    if (!is_valid_id(s.span_id, 'S')) throw ValidationError("malformed span_id '" + s.span_id + "'");
    if (s.text.empty()) throw ValidationError("span " + s.span_id + " has empty text");
    if (!span_ids.insert(s.span_id).second) throw ValidationError("duplicate span_id " + s.span_id);
  }
  std::set<std::string> atomic_ids;
  for (const auto& a : rs.atomics) {
    if (!span_ids.count(a.source_span_id))
      throw ValidationError("atomic " + a.atomic_id + " references unknown span " + a.source_span_id);
    if (a.was_split != a.split_rationale.has_value())
      throw ValidationError("atomic " + a.atomic_id + ": split_rationale must be present iff was_split");
    if (!atomic_ids.insert(a.atomic_id).second) throw ValidationError("duplicate atomic_id " + a.atomic_id);
  }
  std::set<std::string> rule_ids;
  for (const auto& r : rs.rules) {
    if (r.rule_name.empty() || r.condition.empty() || r.action.empty() || r.source_text.empty())
      throw ValidationError("rule " + r.rule_id + " has an empty required field");
    // Merged survivors carry the union of their component's tags.
    if (r.category_tags.empty() || (r.merged_from.empty() && r.category_tags.size() > 3))
      throw ValidationError("rule " + r.rule_id + " must have 1-3 category tags");
    if (!rule_ids.insert(r.rule_id).second) throw ValidationError("duplicate rule_id " + r.rule_id);
    if (!atomic_ids.count(r.source_atomic_id))
      throw ValidationError("rule " + r.rule_id + " references unknown atomic " + r.source_atomic_id);
  }
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& rel : rs.relationships) {
    if (rel.rule_i == rel.rule_j) throw ValidationError("relationship pairs rule " + rel.rule_i + " with itself");
    auto key = std::minmax(rel.rule_i, rel.rule_j);
    if (!pairs.insert({key.first, key.second}).second)
      throw ValidationError("relationship " + rel.rule_i + "/" + rel.rule_j + " listed twice");
  }
}

// --- JSON ------------------------------------------------------------------

ordered_json to_json(const Rule& r) {
  ordered_json j;
  j["rule_id"] = r.rule_id;
  j["source_atomic_id"] = r.source_atomic_id;
  j["rule_name"] = r.rule_name;
  j["condition"] = r.condition;
  j["action"] = r.action;
  j["source_text"] = r.source_text;
  j["category_tags"] = r.category_tags;
  j["verified"] = r.verified;
  if (!r.merged_from.empty()) {
    ordered_json m = ordered_json::array();
    for (const auto& p : r.merged_from)
      m.push_back({{"rule_id", p.rule_id}, {"source_atomic_id", p.source_atomic_id}, {"rule_name", p.rule_name}});
    j["merged_from"] = std::move(m);
  }
  if (!r.extensions.empty()) j["extensions"] = r.extensions;
  return j;
}

ordered_json to_json(const VerificationReport& r) {
  ordered_json j;
  j["faithfulness"] = r.faithfulness;
  j["coverage"] = r.coverage;
  j["coverage_initial"] = r.coverage_initial;
  j["coverage_post_exclusion"] = r.coverage_post_exclusion;
  j["independence"] = r.independence;
  j["removed_rule_ids"] = r.removed_rule_ids;
  j["uncovered_span_ids"] = r.uncovered_span_ids;
  j["unlocated_span_ids"] = r.unlocated_span_ids;
  j["excluded_span_ids"] = r.excluded_span_ids;
  j["reextracted_rule_ids"] = r.reextracted_rule_ids;
  ordered_json pairs = ordered_json::array();
  for (const auto& [a, b] : r.flagged_name_collisions) pairs.push_back({a, b});
  j["flagged_name_collisions"] = std::move(pairs);
  j["conflict_count"] = r.conflict_count;
  j["rules_before"] = r.rules_before;
  j["rules_after"] = r.rules_after;
  return j;
}

ordered_json to_json(const RuleSet& rs) {
  ordered_json j;
  j["doc_id"] = rs.doc_id;
  ordered_json spans = ordered_json::array();
  for (const auto& s : rs.spans)
    spans.push_back({{"span_id", s.span_id},
                     {"text", s.text},
                     {"normative_type", to_string(s.normative_type)},
                     {"context_summary", s.context_summary}});
  j["spans"] = std::move(spans);
  ordered_json atomics = ordered_json::array();
  for (const auto& a : rs.atomics) {
    ordered_json o;
    o["atomic_id"] = a.atomic_id;
    o["source_span_id"] = a.source_span_id;
    o["text"] = a.text;
    o["original_text"] = a.original_text;
    o["was_split"] = a.was_split;
    o["split_rationale"] = a.split_rationale ? ordered_json(*a.split_rationale) : ordered_json(nullptr);
    atomics.push_back(std::move(o));
  }
  j["atomics"] = std::move(atomics);
  ordered_json rules = ordered_json::array();
  for (const auto& r : rs.rules) rules.push_back(to_json(r));
  j["rules"] = std::move(rules);
  ordered_json rels = ordered_json::array();
  for (const auto& r : rs.relationships)
    rels.push_back({{"rule_i", r.rule_i},
                    {"rule_j", r.rule_j},
                    {"relationship", to_string(r.relationship)},
                    {"preferred_action", to_string(r.preferred_action)},
                    {"explanation", r.explanation}});
  j["relationships"] = std::move(rels);
  j["verification_report"] = rs.verification_report ? to_json(*rs.verification_report) : ordered_json(nullptr);
  return j;
}

namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  return j.at(key);
}

std::string str(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) throw ParseError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

template <typename T>
std::vector<T> list(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_array()) throw ParseError(std::string("field '") + key + "' must be an array");
  try {
    return v.get<std::vector<T>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

Rule rule_from_json(const json& j) {
  Rule r;
  r.rule_id = str(j, "rule_id");
  r.source_atomic_id = str(j, "source_atomic_id");
  r.rule_name = str(j, "rule_name");
  r.condition = str(j, "condition");
  r.action = str(j, "action");
  r.source_text = str(j, "source_text");
  r.category_tags = list<std::string>(j, "category_tags");
  r.verified = j.value("verified", false);
  if (j.contains("merged_from"))
    for (const auto& m : j["merged_from"])
      r.merged_from.push_back({str(m, "rule_id"), str(m, "source_atomic_id"), str(m, "rule_name")});
  if (j.contains("extensions")) {
    if (!j["extensions"].is_object()) throw ParseError("field 'extensions' must be an object");
    for (const auto& [k, v] : j["extensions"].items()) r.extensions[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return r;
}

VerificationReport report_from_json(const json& j) {
  VerificationReport r;
  try {
    r.faithfulness = field(j, "faithfulness").get<double>();
    r.coverage = field(j, "coverage").get<double>();
    r.coverage_initial = j.value("coverage_initial", r.coverage);
    r.coverage_post_exclusion = j.value("coverage_post_exclusion", r.coverage);
    r.independence = field(j, "independence").get<double>();
    r.removed_rule_ids = list<std::string>(j, "removed_rule_ids");
    r.uncovered_span_ids = list<std::string>(j, "uncovered_span_ids");
    r.unlocated_span_ids = j.value("unlocated_span_ids", std::vector<std::string>{});
    r.excluded_span_ids = j.value("excluded_span_ids", std::vector<std::string>{});
    r.reextracted_rule_ids = j.value("reextracted_rule_ids", std::vector<std::string>{});
    for (const auto& p : field(j, "flagged_name_collisions"))
      r.flagged_name_collisions.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    r.conflict_count = j.value("conflict_count", std::size_t{0});
    r.rules_before = j.value("rules_before", std::size_t{0});
    r.rules_after = j.value("rules_after", std::size_t{0});
  } catch (const json::exception& e) {
    throw ParseError(std::string("verification_report: ") + e.what());
  }
  return r;
}

RuleSet ruleset_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("rule set must be a JSON object");
  RuleSet rs;
  rs.doc_id = str(j, "doc_id");
  for (const auto& s : field(j, "spans")) {
    auto type = parse_normative_type(str(s, "normative_type"));
    if (!type) throw ParseError("unknown normative_type '" + str(s, "normative_type") + "'");
    rs.spans.push_back({str(s, "span_id"), str(s, "text"), *type, s.value("context_summary", std::string{})});
  }
  for (const auto& a : field(j, "atomics")) {
    AtomicUnit u;
    u.atomic_id = str(a, "atomic_id");
    u.source_span_id = str(a, "source_span_id");
    u.text = str(a, "text");
    u.original_text = str(a, "original_text");
    u.was_split = a.value("was_split", false);
    if (a.contains("split_rationale") && a["split_rationale"].is_string())
      u.split_rationale = a["split_rationale"].get<std::string>();
    rs.atomics.push_back(std::move(u));
  }
  for (const auto& r : field(j, "rules")) rs.rules.push_back(rule_from_json(r));
  for (const auto& r : field(j, "relationships")) {
    auto kind = parse_relationship_kind(str(r, "relationship"));
    auto pref = parse_preferred_action(str(r, "preferred_action"));
    if (!kind || !pref) throw ParseError("unknown relationship label for " + str(r, "rule_i") + "/" + str(r, "rule_j"));
    rs.relationships.push_back({str(r, "rule_i"), str(r, "rule_j"), *kind, *pref, r.value("explanation", std::string{})});
  }
  if (j.contains("verification_report") && !j["verification_report"].is_null())
    rs.verification_report = report_from_json(j["verification_report"]);
  return rs;
}

void save_ruleset(const RuleSet& rs, const std::filesystem::path& path) {
  validate_ruleset(rs);
  write_file_atomic(path, to_json(rs).dump(2) + "\n");
}

RuleSet load_ruleset(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
  return ruleset_from_json(j);
}

// --- Duplicate merging -------------------------------------------------------

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  // Keeps the smaller index as root, which is the smaller rule_id because
  // callers index rules in sorted order.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::size_t count_conflicts(const RuleSet& rs) {
  std::set<std::string> present;
  for (const auto& r : rs.rules) present.insert(r.rule_id);
  return static_cast<std::size_t>(std::count_if(rs.relationships.begin(), rs.relationships.end(), [&](const auto& rel) {
    return rel.relationship == RelationshipKind::conflict && present.count(rel.rule_i) && present.count(rel.rule_j);
  }));
}

RuleSet merge_duplicates(const RuleSet& rs) {
  RuleSet out = rs;
  std::vector<std::size_t> order(rs.rules.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return rs.rules[a].rule_id < rs.rules[b].rule_id; });
  std::unordered_map<std::string, std::size_t> rank;  // rule_id -> position in sorted order
  for (std::size_t k = 0; k < order.size(); ++k) rank[rs.rules[order[k]].rule_id] = k;

  DisjointSets sets(order.size());
  bool any = false;
  for (const auto& rel : rs.relationships) {
    if (rel.relationship != RelationshipKind::duplicate) continue;
    auto a = rank.find(rel.rule_i);
    auto b = rank.find(rel.rule_j);
    if (a == rank.end() || b == rank.end()) continue;  // already merged away
    sets.unite(a->second, b->second);
    any = true;
  }

  if (any) {
    std::vector<Rule> sorted;
    sorted.reserve(order.size());
    for (auto idx : order) sorted.push_back(rs.rules[idx]);

    std::set<std::string> removed;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      const std::size_t root = sets.find(k);
      if (root == k) continue;
      Rule& survivor = sorted[root];
      const Rule& gone = sorted[k];
      for (const auto& t : gone.category_tags) {
        const auto nt = normalize_tag(t);
        bool have = std::any_of(survivor.category_tags.begin(), survivor.category_tags.end(),
                                [&](const std::string& s) { return normalize_tag(s) == nt; });
        if (!have) survivor.category_tags.push_back(t);
      }
      survivor.merged_from.push_back({gone.rule_id, gone.source_atomic_id, gone.rule_name});
      for (const auto& p : gone.merged_from) survivor.merged_from.push_back(p);
      removed.insert(gone.rule_id);
    }
    out.rules.clear();
    for (const auto& r : rs.rules) {
      if (removed.count(r.rule_id)) continue;
      out.rules.push_back(sorted[rank[r.rule_id]]);
    }
  }
  if (out.verification_report) out.verification_report->conflict_count = count_conflicts(out);
  return out;
}

}  // namespace tag
