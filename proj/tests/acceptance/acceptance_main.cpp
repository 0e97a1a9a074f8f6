// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails. Criterion 11 needs TAG_LIVE_ENDPOINT and is
// reported as SKIP otherwise.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tag/config.hpp"
#include "tag/corpus.hpp"
#include "tag/evaluation.hpp"
#include "tag/extraction.hpp"
#include "tag/gestalt.hpp"
#include "tag/retrieval.hpp"
#include "tag/runner.hpp"
#include "tag/utf8.hpp"
#include "tag/verification.hpp"

namespace tag::acceptance {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Tolerances and limits.
constexpr double kGestaltLimitS = 60.0;
constexpr double kFaithLimitS = 60.0;
constexpr double kTopKLimitS = 30.0;
constexpr double kChunkLimitS = 10.0;
constexpr double kPipelineLimitS = 120.0;
constexpr double kScoreTolerance = 1e-12;  // cosine scores, library vs oracle
constexpr std::size_t kMinConditionLength = 15;

struct Outcome {
  enum class Status { pass, fail, skip } status = Status::pass;
  std::string detail;
};

/// Collects failure messages; the first few are reported.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (messages_.size() < 3) messages_.push_back(what);
  }
  bool ok() const { return failures_ == 0; }
  Outcome outcome(const std::string& summary) const {
    if (ok()) return {Outcome::Status::pass, summary};
    std::string d = std::to_string(failures_) + " failure(s): ";
    for (std::size_t i = 0; i < messages_.size(); ++i) d += (i ? "; " : "") + messages_[i];
    return {Outcome::Status::fail, d};
  }

 private:
  std::size_t failures_ = 0;
  std::vector<std::string> messages_;
};

const char* const kWords[] = {"policy", "editor", "source", "article",  "claim",   "report", "review",
                              "river",  "market", "season", "council",  "museum",  "harbor", "station",
                              "bridge", "valley", "record", "festival", "library", "athlete"};

std::string random_words(std::mt19937& rng, std::size_t chars) {
  std::string out;
  while (out.size() < chars) {
    if (!out.empty()) out += ' ';
    out += kWords[rng() % std::size(kWords)];
  }
  out.resize(chars);
  return out;
}

// Criterion 1 -------------------------------------------------------------

std::vector<std::u32string> all_strings(std::size_t len) {
  std::vector<std::u32string> out{std::u32string(len, U'a')};
  std::size_t total = 1;
  for (std::size_t i = 0; i < len; ++i) total *= 3;
  out.reserve(total);
  for (std::size_t n = 1; n < total; ++n) {
    std::u32string s(len, U'a');
    std::size_t x = n;
    for (std::size_t i = 0; i < len; ++i, x /= 3) s[i] = static_cast<char32_t>(U'a' + x % 3);
    out.push_back(std::move(s));
  }
  return out;
}

Outcome gestalt_oracle_equivalence() {
  Check check;
  // Exhaustive over every pair whose combined length is at most 12.
  std::vector<std::vector<std::u32string>> by_len;
  for (std::size_t l = 0; l <= 12; ++l) by_len.push_back(all_strings(l));
  std::size_t exhaustive = 0;
  for (std::size_t la = 0; la <= 12; ++la)
    for (std::size_t lb = 0; la + lb <= 12; ++lb)
      for (const auto& a : by_len[la])
        for (const auto& b : by_len[lb]) {
          ++exhaustive;
          const std::size_t got = gestalt_matches(a, b), want = oracle::gestalt_matches(a, b);
          check.expect(got == want && gestalt_ratio(a, b) == oracle::gestalt_ratio(a, b),
                       "exhaustive pair " + utf8::encode(a) + "/" + utf8::encode(b));
        }

  std::mt19937 rng(1001);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t alphabet = std::vector<std::size_t>{2, 3, 5, 26}[t % 4];
    auto gen = [&] {
      std::u32string s(rng() % 201, U'a');
      for (auto& c : s) c = static_cast<char32_t>(U'a' + rng() % alphabet);
      return s;
    };
    const auto a = gen(), b = gen();
    check.expect(gestalt_matches(a, b) == oracle::gestalt_matches(a, b) &&
                     gestalt_ratio(a, b) == oracle::gestalt_ratio(a, b),
                 "random pair " + std::to_string(t));
  }
  return check.outcome(std::to_string(exhaustive) + " exhaustive pairs and 1000 random pairs agree exactly");
}

// Criterion 2 -------------------------------------------------------------

/// Character-multiset bound: no alignment can match more characters.
double multiset_bound(const std::u32string& a, const std::u32string& b) {
  std::map<char32_t, std::size_t> ca, cb;
  for (char32_t c : a) ++ca[c];
  for (char32_t c : b) ++cb[c];
  std::size_t common = 0;
  for (const auto& [c, n] : ca)
    if (auto it = cb.find(c); it != cb.end()) common += std::min(n, it->second);
  return a.empty() && b.empty() ? 1.0 : 2.0 * static_cast<double>(common) / static_cast<double>(a.size() + b.size());
}

RuleSet single_span_ruleset(const std::vector<std::string>& sources) {
  RuleSet rs;
  rs.doc_id = "d";
  for (std::size_t i = 0; i < sources.size(); ++i) {
    rs.spans.push_back({make_id('S', i + 1), sources[i], NormativeType::requirement, ""});
    rs.atomics.push_back({make_id('A', i + 1), make_id('S', i + 1), sources[i], sources[i], false, std::nullopt});
    Rule r;
    r.rule_id = make_id('R', i + 1);
    r.source_atomic_id = make_id('A', i + 1);
    r.rule_name = "rule " + std::to_string(i + 1);
    r.condition = "condition " + std::to_string(i + 1);
    r.action = "action " + std::to_string(i + 1);
    r.source_text = sources[i];
    r.category_tags = {"t"};
    rs.rules.push_back(std::move(r));
  }
  return rs;
}

Outcome faithfulness_window_search() {
  Check check;
  const FaithfulnessParams params;  // tau 0.85, stride 50, window |src|+50
  check.expect(params.tau == 0.85 && params.stride == 50 && params.window_extra == 50, "default parameters");
  const std::string foreign = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  std::mt19937 rng(2002);
  std::size_t found = 0, removed = 0;
  double min_planted_ratio = 1.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t len = 800 + rng() % 201;
    const std::string src = random_words(rng, len);
    // Near-duplicate: substitute characters the document never contains.
    std::string near = src;
    double ratio = 0.0;
    do {
      near = src;
      const std::size_t subs = 1 + rng() % (len / 10);
      for (std::size_t s = 0; s < subs; ++s) near[rng() % len] = foreign[10 + rng() % 26];
      ratio = oracle::gestalt_ratio(utf8::decode(src), utf8::decode(near));
    } while (ratio < 0.9);
    min_planted_ratio = std::min(min_planted_ratio, ratio);

    std::string text = random_words(rng, 10240 - len);
    const std::size_t offset = rng() % (text.size() + 1);
    text.insert(offset, near);
    const Document doc = make_document("d", text);

    std::vector<std::string> sources{src};
    if (i < 50) {
      // Negative: mostly characters absent from the document.
      std::string neg(800 + rng() % 201, ' ');
      for (auto& c : neg) c = rng() % 10 < 6 ? foreign[rng() % foreign.size()] : static_cast<char>('a' + rng() % 26);
      const auto doc32 = utf8::decode(text), neg32 = utf8::decode(neg);
      double bound = 0.0;
      for (std::size_t start = 0; start < doc32.size(); start += params.stride)
        bound = std::max(bound, multiset_bound(neg32, doc32.substr(start, neg32.size() + params.window_extra)));
      check.expect(bound < 0.5, "negative " + std::to_string(i) + " bound " + std::to_string(bound));
      sources.push_back(neg);
    }
    const auto res = check_faithfulness(single_span_ruleset(sources), doc, params);
    const bool kept = std::any_of(res.ruleset.rules.begin(), res.ruleset.rules.end(),
                                  [](const Rule& r) { return r.rule_id == "R-001"; });
    check.expect(kept, "planting " + std::to_string(i) + " missed");
    if (kept) {
      const auto& loc = res.locations.at("R-001");
      // The located window must hold at least 90% of the planted text.
      const std::size_t shared = overlap_length(loc.start, loc.end, offset, offset + near.size());
      const bool near_offset = 10 * shared >= 9 * near.size();
      check.expect(near_offset, "planting " + std::to_string(i) + " at " + std::to_string(offset) +
                                    " located at [" + std::to_string(loc.start) + ", " + std::to_string(loc.end) + ")");
      found += near_offset;
    }
    if (i < 50) {
      const bool gone = res.removed_rule_ids == std::vector<std::string>{"R-002"};
      check.expect(gone, "negative " + std::to_string(i) + " kept");
      removed += gone;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu/200 plantings found (min planted ratio %.3f), %zu/50 negatives removed", found,
                min_planted_ratio, removed);
  return check.outcome(buf);
}

// Criterion 3 -------------------------------------------------------------

Outcome coverage_boundary() {
  Check check;
  check.expect(covers({0, 1000, 1, true}, {500, 1500, 1, true}, 0.5), "500/1000 overlap");
  check.expect(!covers({0, 1000, 1, true}, {501, 1500, 1, true}, 0.5), "499/1000 overlap");

  std::mt19937 rng(3003);
  const std::string a = random_words(rng, 500), b = random_words(rng, 500), c = random_words(rng, 500);
  const Document doc = make_document("d", a + b + c);
  auto coverage_with_rule_source = [&](const std::string& rule_source) {
    RuleSet rs = single_span_ruleset({a + b});
    rs.rules[0].source_text = rule_source;
    return check_coverage(rs, doc);
  };
  const auto half = coverage_with_rule_source(b + c);
  check.expect(half.coverage == 1.0 && half.covered_span_ids == std::vector<std::string>{"S-001"},
               "exactly 50% counts as covered");
  const auto under = coverage_with_rule_source(b.substr(1) + c);
  check.expect(under.coverage == 0.0 && under.uncovered_span_ids == std::vector<std::string>{"S-001"},
               "49.9% is not covered");
  return check.outcome("50.0% overlap covered, 49.9% uncovered");
}

// Criterion 4 -------------------------------------------------------------

Outcome top_k_oracle_equivalence() {
  Check check;
  std::mt19937 rng(4004);
  std::size_t ranked = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t dim = 2 + rng() % 6, n = 1 + rng() % 120;
    const bool coarse = t % 2 == 0;  // small integer entries make exact ties common
    std::normal_distribution<double> g;
    auto draw = [&] {
      std::vector<double> v(dim);
      do {
        for (auto& x : v) x = coarse ? static_cast<double>(rng() % 3) : g(rng);
      } while (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }));
      return v;
    };
    std::vector<std::pair<std::string, std::vector<double>>> units;
    SimilarityIndex idx;
    idx.model_id = "m";
    for (std::size_t i = 0; i < n; ++i) {
      units.push_back({chunk_unit_id(rng() % 100000 * 1000 + i), draw()});
      idx.entries.push_back({units.back().first, units.back().first, {units.back().second, "m"}});
    }
    const auto q = draw();
    const std::size_t k = 1 + rng() % (n + 5);
    const auto want = oracle::top_k(units, q, k);
    const auto got = top_k(idx, {q, "m"}, k);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i)
      same = got[i].unit_id == want[i].first && std::abs(got[i].score - want[i].second) <= kScoreTolerance;
    check.expect(same, "index " + std::to_string(t));
    ranked += got.size();
  }
  return check.outcome("500 indices, " + std::to_string(ranked) + " ranked units identical to the full sort");
}

// Criterion 5 -------------------------------------------------------------

Outcome chunker_invariants() {
  Check check;
  std::mt19937 rng(5005);
  for (int t = 0; t < 1000; ++t) {
    std::size_t size, overlap, len;
    if (t % 10 == 0) {
      size = kDefaultChunkSize;
      overlap = kDefaultChunkOverlap;
      len = 1 + rng() % 12000;
    } else {
      size = 1 + rng() % 700;
      overlap = rng() % size;
      len = 1 + rng() % 6000;
    }
    std::string raw(len, ' ');
    for (auto& ch : raw) ch = static_cast<char>('a' + rng() % 26);
    const auto cs = chunk_document(make_document("d", raw), size, overlap);
    const std::string where = "(" + std::to_string(len) + "," + std::to_string(size) + "," + std::to_string(overlap) + ")";
    check.expect(cs.size() == oracle::chunk_count(len, size, overlap), "count " + where);
    if (cs.empty()) continue;
    std::string rebuilt = cs[0].text;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const std::size_t start = i * (size - overlap);
      check.expect(cs[i].start_offset == start && cs[i].end_offset == std::min(start + size, len) &&
                       cs[i].text == raw.substr(start, size),
                   "chunk " + std::to_string(i) + " " + where);
      if (i > 0 && cs[i].text.size() > overlap) rebuilt += cs[i].text.substr(overlap);
    }
    check.expect(rebuilt == raw, "reconstruction " + where);
  }
  check.expect(kDefaultChunkSize == 500 && kDefaultChunkOverlap == 100, "default chunking 500/100");
  return check.outcome("1000 triples (100 at 500/100): counts, offsets and reconstruction exact");
}

// Criteria 6 and 7 ----------------------------------------------------------

struct ScriptedRun {
  std::string summary;
  std::vector<ChatRequest> requests;
  fs::path run_dir;
};

ScriptedRun run_matrix_in(const fixture::NpovWorld& w, const fs::path& dir) {
  const ExperimentPlan plan = fixture::write_npov_plan(w, dir);
  auto provider = std::make_shared<fixture::RecordingProvider>(fixture::npov_chat(w), fixture::fixture_embedding);
  Gateway gateway(provider, gateway_options(plan.gateway, plan.run_dir / "cache"));
  Runner(plan, gateway).run_matrix();
  return {read_file(plan.run_dir / "summary.json"), provider->requests(), plan.run_dir};
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> out;
  std::istringstream in(read_file(p));
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

Outcome action_only_separation() {
  Check check;
  const auto w = fixture::make_npov_world(10, 12);
  const ScriptedRun matrix = run_matrix_in(w, fixture::temp_dir("acc-separation-matrix"));

  ExperimentPlan fplan = fixture::write_npov_plan(w, fixture::temp_dir("acc-separation-factorial"));
  auto fprov = std::make_shared<fixture::RecordingProvider>(fixture::npov_chat(w), fixture::fixture_embedding);
  Gateway fgw(fprov, gateway_options(fplan.gateway, fplan.run_dir / "cache"));
  Runner(fplan, fgw).run_factorial();

  std::vector<ChatRequest> requests = matrix.requests;
  for (auto& r : fprov->requests()) requests.push_back(r);

  std::map<std::string, std::string> action_of;
  for (const auto& r : w.ruleset.rules) action_of[r.rule_id] = r.action;
  std::map<std::string, std::vector<std::string>> matched;  // case -> rule ids
  for (const auto& m : read_jsonl(matrix.run_dir / "matches.jsonl"))
    if (m["method_id"] == "M3") matched[m["case_id"]] = m["unit_ids"].get<std::vector<std::string>>();
  check.expect(matched.size() == 10, "matched sets for all cases");

  std::size_t executor = 0, m3 = 0, applicability = 0, relevance = 0;
  std::map<std::string, std::set<std::string>> relevance_actions;  // case -> actions seen
  for (const auto& req : requests) {
    const std::string prompt = req.system_message + "\n" + req.user_message;
    const std::string& tag = req.request_tag;
    if (starts_with(tag, "execute:")) {
      ++executor;
      for (const auto& cond : w.conditions)
        if (cond.size() >= kMinConditionLength)
          check.expect(prompt.find(cond) == std::string::npos, tag + " shows a condition");
      const auto first = tag.find(':'), second = tag.find(':', first + 1);
      const std::string case_id = tag.substr(first + 1, second - first - 1), method = tag.substr(second + 1);
      if (method == "M3") {
        ++m3;
        for (const auto& id : matched[case_id])
          check.expect(prompt.find(action_of.at(id)) != std::string::npos, tag + " lacks the action of " + id);
      }
    } else if (starts_with(tag, "match:")) {
      ++applicability;
      for (const auto& [id, action] : action_of)
        check.expect(prompt.find(action) == std::string::npos, tag + " shows the action of " + id);
    } else if (starts_with(tag, "relevance:")) {
      ++relevance;
      const auto first = tag.find(':'), second = tag.find(':', first + 1);
      const std::string case_id = tag.substr(first + 1, second - first - 1), unit = tag.substr(second + 1);
      check.expect(prompt.find(action_of.at(unit)) != std::string::npos, tag + " lacks its candidate action");
      for (const auto& [id, action] : action_of)
        if (prompt.find(action) != std::string::npos) relevance_actions[case_id].insert(action);
    }
  }
  check.expect(m3 == 10 && executor >= 40, "executor prompts issued");
  check.expect(applicability >= 120 && relevance == 120, "matcher prompts issued");
  for (const auto& [c, seen] : relevance_actions) check.expect(seen.size() == 12, c + " relevance action set");
  check.expect(relevance_actions.size() == 10, "relevance prompts for every case");
  return check.outcome(std::to_string(executor) + " executor, " + std::to_string(applicability) + " applicability, " +
                       std::to_string(relevance) + " relevance prompts checked");
}

/// Chat cache entries persisted under `cache_dir`, by key.
std::set<std::string> cached_chat_keys(const fs::path& cache_dir) {
  std::set<std::string> keys;
  if (!fs::exists(cache_dir)) return keys;
  for (const auto& e : fs::directory_iterator(cache_dir)) {
    const std::string name = e.path().filename().string();
    if (e.path().extension() == ".json" && !starts_with(name, "emb-")) keys.insert(e.path().stem().string());
  }
  return keys;
}

Outcome determinism_and_resume() {
  Check check;
  const auto w = fixture::make_npov_world(10, 12);
  const ScriptedRun a = run_matrix_in(w, fixture::temp_dir("acc-determinism-a"));
  const ScriptedRun b = run_matrix_in(w, fixture::temp_dir("acc-determinism-b"));
  check.expect(a.summary == b.summary, "summary.json differs between executions");
  check.expect(json::parse(a.summary)["rows"].size() == 4, "four method rows");
  std::set<std::string> all_keys;
  for (const auto& r : a.requests) all_keys.insert(r.cache_key());
  check.expect(all_keys.size() == a.requests.size(), "a clean run repeats an upstream call");

  // Killed run: the child process dies halfway through its upstream calls.
  const fs::path dir = fixture::temp_dir("acc-resume");
  const ExperimentPlan plan = fixture::write_npov_plan(w, dir);
  const std::size_t kill_at = a.requests.size() / 2;
  std::cout.flush();
  const pid_t pid = fork();
  if (pid == 0) {
    auto calls = std::make_shared<std::atomic<std::size_t>>(0);
    auto chat = fixture::npov_chat(w);
    auto provider = std::make_shared<FunctionProvider>(
        [calls, chat, kill_at](const ChatRequest& req) {
          if (++*calls == kill_at) raise(SIGKILL);
          return chat(req);
        },
        fixture::fixture_embedding);
    Gateway gateway(provider, gateway_options(plan.gateway, plan.run_dir / "cache"));
    try {
      Runner(plan, gateway).run_matrix();
    } catch (...) {
    }
    _exit(3);
  }
  int status = 0;
  waitpid(pid, &status, 0);
  check.expect(WIFSIGNALED(status) && WTERMSIG(status) == SIGKILL, "child was not killed mid-run");

  const auto persisted = cached_chat_keys(plan.run_dir / "cache");
  auto provider = std::make_shared<fixture::RecordingProvider>(fixture::npov_chat(w), fixture::fixture_embedding);
  Gateway gateway(provider, gateway_options(plan.gateway, plan.run_dir / "cache"));
  Runner(plan, gateway).run_matrix();
  std::size_t duplicates = 0;
  std::set<std::string> resumed;
  for (const auto& r : provider->requests()) {
    duplicates += persisted.count(r.cache_key());
    resumed.insert(r.cache_key());
  }
  check.expect(duplicates == 0, std::to_string(duplicates) + " duplicate upstream calls after resume");
  check.expect(resumed.size() == provider->requests().size(), "resume repeats a call");
  std::set<std::string> union_keys = persisted;
  union_keys.insert(resumed.begin(), resumed.end());
  check.expect(union_keys == all_keys, "killed plus resumed calls differ from a clean run");
  check.expect(read_file(plan.run_dir / "summary.json") == a.summary, "resumed summary differs");
  return check.outcome("identical summaries; killed after " + std::to_string(persisted.size()) + " cached of " +
                       std::to_string(all_keys.size()) + " calls, resume issued " +
                       std::to_string(provider->requests().size()) + " new and 0 duplicate calls");
}

// Criterion 8 -------------------------------------------------------------

ExecutionRecord nba_record(const std::string& id, bool answer, std::optional<std::string> op,
                           std::optional<std::string> team) {
  ExecutionRecord r;
  r.case_id = id;
  r.method_id = "M3";
  r.domain = TaskDomain::nba;
  r.parse_ok = true;
  r.parsed = NbaOutput{answer, std::move(op), std::move(team), "r"};
  return r;
}

Outcome metric_reproduction() {
  Check check;
  std::vector<EvalScore> npov;
  for (int i = 0; i < 107; ++i) {
    EvalScore s;
    s.case_id = "c" + std::to_string(i);
    s.method_id = "M3";
    s.domain = TaskDomain::npov;
    s.vfr = i < 73;
    s.rem = s.pres = s.tone = s.flu = 4;
    npov.push_back(s);
  }
  const auto vfr = to_json(aggregate(npov))["rows"][0]["vfr_pct"].get<double>();
  check.expect(vfr == 68.2, "VFR " + std::to_string(vfr));

  const json illegal{{"answer", true}, {"illegal_operation", "op-2"}, {"problematic_team", "Team A"}};
  const json legal{{"answer", false}, {"illegal_operation", nullptr}, {"problematic_team", nullptr}};
  struct NbaCase {
    json gold;
    std::string level;
    ExecutionRecord rec;
    bool expected;
  };
  const std::vector<NbaCase> fixtures{
      {illegal, "L0", nba_record("n1", true, "op-2", "Team A"), true},                // all three correct
      {illegal, "L0", nba_record("n2", true, "op-2", "Team B"), false},               // wrong team
      {illegal, "L1", nba_record("n3", true, "op-1", "Team A"), false},               // wrong operation
      {illegal, "L1", nba_record("n4", false, std::nullopt, std::nullopt), false},    // missed violation
      {legal, "L2", nba_record("n5", false, std::nullopt, std::nullopt), true},       // legal, judged legal
      {legal, "L2", nba_record("n6", true, "op-1", "Team A"), false},                 // legal, judged illegal
  };
  std::vector<EvalScore> nba;
  for (const auto& f : fixtures) {
    TaskCase c{f.rec.case_id, "scenario", {}, f.gold};
    c.metadata["level"] = f.level;
    nba.push_back(score_nba_strict(c, f.rec));
    check.expect(nba.back().strict_correct == f.expected, f.rec.case_id + " strict verdict");
  }
  const auto row = aggregate(nba).rows.at(0);
  check.expect(std::abs(*row.strict_pct - 100.0 * 2 / 6) < 1e-9, "strict accuracy 2/6");
  check.expect(row.level_pct.at("L0") == 50.0 && row.level_pct.at("L1") == 0.0 && row.level_pct.at("L2") == 50.0,
               "per-level strict accuracy");
  return check.outcome("VFR 73/107 = 68.2%; NBA strict 2/6 with levels L0 50, L1 0, L2 50");
}

// Criterion 9 -------------------------------------------------------------

Outcome trivial_rewrite_filter_check() {
  Check check;
  std::string original =
      "The stadium, which critics across the region have long described as one of the most remarkable venues "
      "ever built, opened to the public in spring after four years of construction work by the city council";
  original.resize(200);
  std::string rewrite = original;
  rewrite.replace(194, 6, "999999");
  const double r = oracle::gestalt_ratio(utf8::decode(original), utf8::decode(rewrite));
  check.expect(std::abs(r - 0.97) < 1e-12, "constructed ratio " + std::to_string(r));

  auto run_judge = [&](const std::string& text, std::size_t& calls) {
    auto p = std::make_shared<fixture::RecordingProvider>(
        [](const ChatRequest&) { return std::string(R"({"VFR": true, "Rem":5, "Pres":5, "Tone":5, "Flu":5})"); },
        fixture::fixture_embedding);
    Gateway gw(p);
    TaskCase c{"c1", original, {}, std::nullopt};
    c.metadata["violation"] = "puffery";
    ExecutionRecord rec;
    rec.case_id = "c1";
    rec.method_id = "M3";
    rec.domain = TaskDomain::npov;
    rec.parse_ok = true;
    rec.parsed = NpovOutput{false, {"R-001"}, "r", text};
    const auto s = judge_npov(c, rec, gw);
    calls = p->chat_calls();
    return s;
  };
  std::size_t calls = 0;
  const auto same = run_judge(original, calls);
  check.expect(same.filtered_trivial && same.vfr == false && calls == 0, "identical rewrite");
  const auto close = run_judge(rewrite, calls);
  check.expect(!close.filtered_trivial && calls == 1 && close.vfr == true, "0.97 rewrite reaches the judge");
  check.expect(!trivial_rewrite_filter(original, rewrite) && trivial_rewrite_filter(original, original),
               "filter predicate");
  return check.outcome("identical rewrite filtered with 0 judge calls; ratio 0.970 rewrite judged");
}

// Criterion 10 ------------------------------------------------------------

Outcome dedup_call_budget() {
  Check check;
  std::vector<Rule> rules;
  for (std::size_t i = 1; i <= 20; ++i) {
    Rule r;
    r.rule_id = make_id('R', i);
    r.source_atomic_id = make_id('A', i);
    r.rule_name = "rule " + std::to_string(i);
    r.condition = "c" + std::to_string(i);
    r.action = "a" + std::to_string(i);
    r.source_text = "s" + std::to_string(i);
    r.category_tags = {"group-" + std::to_string((i - 1) / 5)};
    rules.push_back(std::move(r));
  }
  std::mutex mutex;
  std::vector<std::pair<std::string, std::string>> judged;
  auto p = std::make_shared<fixture::RecordingProvider>(
      [&](const ChatRequest& req) {
        std::lock_guard lock(mutex);
        for (const auto& pr : fixture::json_array_with(req.user_message, "rule_i"))
          judged.emplace_back(pr["rule_i"]["rule_id"], pr["rule_j"]["rule_id"]);
        return std::string("[]");
      },
      fixture::fixture_embedding);
  Gateway gw(p);
  ExtractionConfig cfg;
  const auto d = phase4_deduplicate(rules, cfg, gw);
  const std::set<std::pair<std::string, std::string>> distinct(judged.begin(), judged.end());
  check.expect(judged.size() == 40 && distinct.size() == 40, "judged " + std::to_string(judged.size()) + " pairs");
  check.expect(d.candidate_pairs == 40, "candidate pairs");
  auto group = [](const std::string& id) { return (std::stoi(id.substr(2)) - 1) / 5; };
  for (const auto& [a, b] : judged) check.expect(group(a) == group(b), "cross-group pair " + a + "/" + b);
  check.expect(d.rules.size() == 20, "no merges");
  return check.outcome("40 pairs judged in " + std::to_string(p->chat_calls()) + " calls (all-pairs would be 190)");
}

// Criterion 11 ------------------------------------------------------------

Outcome live_smoke() {
  const char* endpoint = std::getenv("TAG_LIVE_ENDPOINT");
  if (!endpoint || !*endpoint) return {Outcome::Status::skip, "TAG_LIVE_ENDPOINT not set"};
  Check check;
  ExperimentPlan plan = load_plan(fs::path(TAG_SOURCE_DIR) / "data" / "mini" / "run.toml");
  plan.gateway.provider = ProviderKind::http;
  plan.gateway.endpoint = endpoint;
  if (const char* e = std::getenv("TAG_LIVE_EMBEDDING_ENDPOINT")) plan.gateway.embedding_endpoint = e;
  if (const char* m = std::getenv("TAG_LIVE_MODEL"))
    plan.gateway.extractor_model = plan.gateway.matcher_model = plan.gateway.executor_model =
        plan.gateway.judge_model = m;
  if (const char* m = std::getenv("TAG_LIVE_EMBEDDING_MODEL")) plan.gateway.embedding_model = m;
  plan.ruleset_path.clear();
  plan.extract_if_missing = true;
  plan.run_dir = fixture::temp_dir("acc-live") / "run";
  Gateway gateway(make_provider(plan.gateway), gateway_options(plan.gateway, plan.run_dir / "cache"));
  const RunRecord rr = Runner(plan, gateway).run_matrix();
  for (const auto& m : rr.methods) check.expect(!m.error, m.method_id + ": " + m.error.value_or(""));

  const RuleSet rs = load_ruleset(plan.run_dir / "ruleset.json");
  const Document doc = load_document(plan.doc_path, "mini");
  RuleSet verbatim = rs;
  std::erase_if(verbatim.rules, [&](const Rule& r) { return doc.text.find(r.source_text) == std::string::npos; });
  if (!verbatim.rules.empty())
    check.expect(check_faithfulness(verbatim, doc).faithfulness == 1.0, "verbatim-copy rules not all faithful");
  const json record = json::parse(read_file(plan.run_dir / "run_record.json"));
  check.expect(record.contains("config_hash") && record["methods"].size() == plan.methods.size(),
               "run record incomplete");
  return check.outcome(std::to_string(rs.rules.size()) + " rules, " + std::to_string(verbatim.rules.size()) +
                       " verbatim; all methods completed");
}

struct Criterion {
  int number;
  std::string name;
  double limit_s;  // 0 means no runtime bound
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace tag::acceptance

int main() {
  using namespace tag::acceptance;
  const std::vector<Criterion> criteria{
      {1, "gestalt ratio equals the brute-force oracle", kGestaltLimitS, gestalt_oracle_equivalence},
      {2, "faithfulness window search finds plantings and removes negatives", kFaithLimitS, faithfulness_window_search},
      {3, "coverage boundary at 50% overlap", 0, coverage_boundary},
      {4, "top-k equals the full-sort oracle", kTopKLimitS, top_k_oracle_equivalence},
      {5, "chunker invariants", kChunkLimitS, chunker_invariants},
      {6, "executor sees actions only; matcher prompts separated", 0, action_only_separation},
      {7, "deterministic summaries and duplicate-free resume", kPipelineLimitS, determinism_and_resume},
      {8, "metric reproduction at fixture scale", 0, metric_reproduction},
      {9, "trivial-rewrite filter", 0, trivial_rewrite_filter_check},
      {10, "dedup judges only tag-sharing pairs", 0, dedup_call_budget},
      {11, "live smoke test on the mini corpus", 0, live_smoke},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Outcome::Status::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.status == Outcome::Status::pass && c.limit_s > 0 && secs >= c.limit_s) {
      o.status = Outcome::Status::fail;
      o.detail += "; runtime over " + std::to_string(static_cast<int>(c.limit_s)) + " s";
    }
    const char* label = o.status == Outcome::Status::pass ? "PASS" : o.status == Outcome::Status::skip ? "SKIP" : "FAIL";
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.2f s", secs);
    std::cout << label << " [" << c.number << "] " << c.name << ": " << o.detail << " (" << timing << ")"
              << std::endl;
    failed += o.status == Outcome::Status::fail;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << failed << " failing criteria" << std::endl;
  return failed ? 1 : 0;
}
