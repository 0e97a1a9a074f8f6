// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"

#include <chrono>
#include <random>
#include <stdexcept>

#include "tag/error.hpp"
#include "tag/verification.hpp"

namespace tag::fixture {

using nlohmann::json;

namespace {

const char* const kWords[] = {"legendary", "notorious",   "brilliant", "disgraceful", "heroic",  "infamous",
                              "visionary", "shameful",    "iconic",    "pathetic",    "glorious", "tragic",
                              "masterful", "despicable",  "fabulous",  "atrocious"};
const char* const kSubjects[] = {"bridge", "mayor",   "album",  "stadium", "novel",
                                 "league", "program", "museum", "senator", "company"};

std::string marker(const std::string& word) { return "a subject as " + word; }
std::string action_marker(const std::string& word) { return "Replace the word '" + word + "'"; }

std::string after(const std::string& text, const std::string& header) {
  const auto p = text.find(header);
  return p == std::string::npos ? std::string() : text.substr(p + header.size());
}

}  // namespace

bool NpovWorld::applies(std::size_t c, std::size_t k) const {
  return cases.at(c).input_text.find(" " + words.at(k) + " ") != std::string::npos;
}

std::string NpovWorld::fixed_sentence(std::size_t c) const {
  std::string s = cases.at(c).input_text;
  for (const auto& w : words) {
    const auto p = s.find(" " + w + " ");
    if (p != std::string::npos) s.replace(p + 1, w.size(), "well-known");
  }
  return s;
}

NpovWorld make_npov_world(std::size_t n_cases, std::size_t n_rules, bool with_restatement) {
  if (n_rules > std::size(kWords)) throw std::invalid_argument("too many rules for the word list");
  NpovWorld w;
  std::string text = "Neutral wording guide\n\nThis guide covers evaluative words in article prose.";
  for (std::size_t k = 0; k < n_rules; ++k) {
    const std::string word = kWords[k];
    w.words.push_back(word);
    w.paragraphs.push_back("Section " + std::to_string(k + 1) + ". Describing " + marker(word) +
                           " expresses an opinion rather than a fact. Unless a reliable source is quoted and "
                           "attributed, editors must not use that word in the article voice; they should state "
                           "what the subject did instead.");
    w.conditions.push_back("The sentence describes " + marker(word) + " without attribution");
    w.actions.push_back(action_marker(word) + " with a neutral factual description");
    w.names.push_back("Avoid calling subjects " + word);
    w.tags.push_back("group-" + std::to_string(k % 4));
    text += "\n\n" + w.paragraphs.back();
  }
  if (with_restatement) {
    w.restatement = "Restatement. Describing " + marker(w.words[0]) +
                    " is an opinion, so editors must not use that word without a quoted source.";
    text += "\n\n" + w.restatement;
  }
  text += "\n";
  w.doc = make_document("wording-guide", text, "Wikipedia neutral point of view");

  for (std::size_t c = 0; c < n_cases; ++c) {
    TaskCase tc;
    tc.case_id = "c" + std::string(c < 9 ? "0" : "") + std::to_string(c + 1);
    const std::string first = w.words[c % n_rules];
    std::string sentence = "The " + first + " " + kSubjects[c % std::size(kSubjects)] + " opened in " +
                           std::to_string(1950 + 3 * c);
    std::string violation = "Calls the subject '" + first + "' in the article voice";
    if (c % 2 == 0 && n_rules > 1) {
      const std::string second = w.words[(c + 5) % n_rules];
      if (second != first) {
        sentence += " and drew a " + second + " crowd";
        violation += " and describes the crowd as '" + second + "'";
      }
    }
    tc.input_text = sentence + " .";
    tc.metadata["violation"] = violation;
    w.cases.push_back(std::move(tc));
  }

  RuleSet rs;
  rs.doc_id = w.doc.doc_id;
  for (std::size_t k = 0; k < n_rules; ++k) {
    rs.spans.push_back({make_id('S', k + 1), w.paragraphs[k], NormativeType::prohibition, "loaded words"});
    rs.atomics.push_back({make_id('A', k + 1), make_id('S', k + 1), w.paragraphs[k], w.paragraphs[k], false, {}});
    Rule r;
    r.rule_id = make_id('R', k + 1);
    r.source_atomic_id = make_id('A', k + 1);
    r.rule_name = w.names[k];
    r.condition = w.conditions[k];
    r.action = w.actions[k];
    r.source_text = w.paragraphs[k];
    r.category_tags = {w.tags[k]};
    rs.rules.push_back(std::move(r));
  }
  w.ruleset = verify(rs, w.doc);
  return w;
}

std::string quoted_block(const std::string& text, const std::string& header) {
  const std::string open = header + "\n\"\"\"\n";
  const auto p = text.find(open);
  if (p == std::string::npos) return {};
  const auto start = p + open.size();
  const auto end = text.find("\n\"\"\"", start);
  return text.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

json json_array_with(const std::string& text, const std::string& key) {
  for (std::size_t open = text.find('['); open != std::string::npos; open = text.find('[', open + 1)) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = open; i < text.size(); ++i) {
      const char ch = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (ch == '\\') escaped = true;
        else if (ch == '"') in_string = false;
        continue;
      }
      if (ch == '"') in_string = true;
      else if (ch == '[' || ch == '{') ++depth;
      else if (ch == ']' || ch == '}') {
        if (--depth == 0) {
          json v = json::parse(text.substr(open, i - open + 1), nullptr, false);
          if (v.is_array() && !v.empty() && v[0].is_object() && v[0].contains(key)) return v;
          break;
        }
      }
    }
  }
  return json::array();
}

std::vector<double> fixture_embedding(const std::string& text) { return hash_embedding(text, 64); }

FunctionProvider::ChatFn npov_chat(const NpovWorld& world) {
  return [w = world](const ChatRequest& req) -> std::string {
    const std::string& tag = req.request_tag;
    const std::string& user = req.user_message;
    auto word_index = [&](const std::string& hay) -> std::vector<std::size_t> {
      std::vector<std::size_t> ks;
      for (std::size_t k = 0; k < w.words.size(); ++k)
        if (hay.find(marker(w.words[k])) != std::string::npos) ks.push_back(k);
      return ks;
    };
    auto case_index = [&](const std::string& input) -> std::size_t {
      for (std::size_t c = 0; c < w.cases.size(); ++c)
        if (w.cases[c].input_text == input) return c;
      throw ScriptError("fixture: unknown case input '" + input + "'");
    };

    if (tag.find("phase1:") != std::string::npos) {
      json out = json::array();
      const std::string section = quoted_block(user, "Document section:");
      std::vector<std::string> paras = w.paragraphs;
      if (!w.restatement.empty()) paras.push_back(w.restatement);
      for (const auto& p : paras)
        if (section.find(p) != std::string::npos)
          out.push_back({{"span_id", "S-001"}, {"text", p}, {"normative_type", "prohibition"},
                         {"context_summary", "evaluative wording"}});
      return out.dump();
    }
    if (tag.find("phase2:") != std::string::npos) {
      json out = json::array();
      for (const auto& s : json_array_with(user, "span_id"))
        out.push_back({{"atomic_id", "A-001"}, {"source_span_id", s["span_id"]}, {"text", s["text"]},
                       {"original_text", s["text"]}, {"was_split", false}, {"split_rationale", nullptr}});
      return out.dump();
    }
    if (tag.find("phase3:") != std::string::npos) {
      json out = json::array();
      for (const auto& a : json_array_with(user, "atomic_id")) {
        const std::string original = a["original_text"].get<std::string>();
        const bool restated = !w.restatement.empty() && original == w.restatement;
        for (std::size_t k : word_index(original)) {
          if (restated && k != 0) continue;
          out.push_back({{"rule_id", "R-001"},
                         {"source_atomic_id", a["atomic_id"]},
                         {"rule_name", w.names[k] + (restated ? " (restated)" : "")},
                         {"condition", w.conditions[k]},
                         {"action", w.actions[k]},
                         {"source_text", original},
                         {"category_tags", {w.tags[k]}}});
        }
      }
      return out.dump();
    }
    if (tag.find("phase4:") != std::string::npos) {
      json out = json::array();
      for (const auto& p : json_array_with(user, "rule_i")) {
        const std::string a = p["rule_i"]["rule_name"], b = p["rule_j"]["rule_name"];
        if (a + " (restated)" == b || b + " (restated)" == a)
          out.push_back({{"rule_i", p["rule_i"]["rule_id"]},
                         {"rule_j", p["rule_j"]["rule_id"]},
                         {"relationship", "duplicate"},
                         {"preferred_action", "merge"},
                         {"explanation", "same word"}});
      }
      return out.dump();
    }
    if (tag.rfind("match:", 0) == 0 || tag.rfind("relevance:", 0) == 0) {
      const std::size_t c = case_index(quoted_block(user, "Task input:"));
      const auto ks = word_index(after(user, "Candidate rule:"));
      bool yes = false;
      for (std::size_t k : ks) {
        if (w.applies(c, k)) yes = true;
        if (tag.rfind("relevance:", 0) == 0)
          for (std::size_t j = 0; j < w.words.size(); ++j)
            if (w.applies(c, j) && w.tags[j] == w.tags[k]) yes = true;
      }
      return std::string("{\"verdict\": \"") + (yes ? "YES" : "NO") + "\"}";
    }
    if (tag.rfind("execute:", 0) == 0) {
      const std::size_t c = case_index(quoted_block(user, "Input sentence:"));
      std::string rewrite = w.cases[c].input_text;
      std::string applied;
      for (std::size_t k = 0; k < w.words.size(); ++k) {
        if (!w.applies(c, k)) continue;
        const bool shown = user.find(action_marker(w.words[k])) != std::string::npos ||
                           user.find(marker(w.words[k])) != std::string::npos;
        if (!shown) continue;
        const auto p = rewrite.find(" " + w.words[k] + " ");
        rewrite.replace(p + 1, w.words[k].size(), "well-known");
        applied += (applied.empty() ? "" : ", ") + make_id('R', k + 1);
      }
      return "Applied rules: " + (applied.empty() ? std::string("NONE") : applied) +
             "\nReasoning: replaced evaluative wording\nRewrite: " + rewrite;
    }
    if (tag.rfind("judge:", 0) == 0) {
      const std::string rewrite = quoted_block(user, "Rewrite to evaluate:");
      bool clean = true;
      for (const auto& word : w.words)
        if (rewrite.find(" " + word + " ") != std::string::npos) clean = false;
      json j{{"VFR", clean}, {"Rem", clean ? 5 : 2}, {"Pres", 5}, {"Tone", clean ? 5 : 3}, {"Flu", 4},
             {"reason", clean ? "loaded wording removed" : "loaded wording remains"}};
      return j.dump();
    }
    throw ScriptError("fixture: unexpected request '" + tag + "'");
  };
}

RecordingProvider::RecordingProvider(FunctionProvider::ChatFn chat, FunctionProvider::EmbedFn embed)
    : inner_(std::move(chat), std::move(embed)) {}

std::string RecordingProvider::complete(const ChatRequest& req) {
  {
    std::lock_guard lock(mutex_);
    requests_.push_back(req);
  }
  return inner_.complete(req);
}

std::vector<std::vector<double>> RecordingProvider::embed(const std::vector<std::string>& texts,
                                                          const std::string& model_id) {
  {
    std::lock_guard lock(mutex_);
    embed_texts_ += texts.size();
  }
  return inner_.embed(texts, model_id);
}

std::vector<ChatRequest> RecordingProvider::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::size_t RecordingProvider::chat_calls() const {
  std::lock_guard lock(mutex_);
  return requests_.size();
}

std::size_t RecordingProvider::embed_texts() const {
  std::lock_guard lock(mutex_);
  return embed_texts_;
}

ExperimentPlan write_npov_plan(const NpovWorld& w, const std::filesystem::path& dir, std::vector<std::string> methods) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "doc.txt", w.doc.text);
  std::string cases;
  for (const auto& c : w.cases) cases += to_json(c).dump() + "\n";
  write_file_atomic(dir / "cases.jsonl", cases);
  save_ruleset(w.ruleset, dir / "ruleset.json");

  ExperimentPlan plan;
  plan.domain = TaskDomain::npov;
  plan.domain_description = w.doc.domain_label;
  plan.doc_path = dir / "doc.txt";
  plan.cases_path = dir / "cases.jsonl";
  plan.ruleset_path = dir / "ruleset.json";
  plan.run_dir = dir / "run";
  plan.methods = std::move(methods);
  plan.parallelism = 4;
  plan.gateway.max_parallel_requests = 4;
  return plan;
}

std::filesystem::path temp_dir(const std::string& name) {
  static std::atomic<unsigned> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  auto p = std::filesystem::temp_directory_path() /
           ("tag-test-" + name + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace tag::fixture
