// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "tag/config.hpp"
#include "tag/corpus.hpp"
#include "tag/llm_gateway.hpp"
#include "tag/rule_model.hpp"

namespace tag::fixture {

/// A small neutral-wording policy and a case set built around loaded words.
/// Rule k forbids calling a subject `words[k]`; a rule applies to a case when
/// the case sentence contains that word. Every pipeline stage can be answered
/// from prompt content alone, see npov_chat().
struct NpovWorld {
  std::vector<std::string> words;
  std::vector<std::string> paragraphs;  // one per rule, verbatim in doc
  std::vector<std::string> conditions;
  std::vector<std::string> actions;
  std::vector<std::string> names;
  std::vector<std::string> tags;
  /// Extra paragraph restating rule 0, present when built with_restatement.
  std::string restatement;
  Document doc;
  std::vector<TaskCase> cases;
  RuleSet ruleset;  // verified, one rule per paragraph

  bool applies(std::size_t case_index, std::size_t rule_index) const;
  std::string fixed_sentence(std::size_t case_index) const;
};

NpovWorld make_npov_world(std::size_t n_cases = 10, std::size_t n_rules = 12, bool with_restatement = false);

/// Answers extraction, matcher, relevance, executor and judge prompts for `w`.
FunctionProvider::ChatFn npov_chat(const NpovWorld& w);
std::vector<double> fixture_embedding(const std::string& text);

/// Records every request that reaches upstream. Thread-safe.
class RecordingProvider final : public Provider {
 public:
  RecordingProvider(FunctionProvider::ChatFn chat, FunctionProvider::EmbedFn embed);
  std::string complete(const ChatRequest& req) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts, const std::string& model_id) override;
  std::vector<ChatRequest> requests() const;
  std::size_t chat_calls() const;
  std::size_t embed_texts() const;

 private:
  FunctionProvider inner_;
  mutable std::mutex mutex_;
  std::vector<ChatRequest> requests_;
  std::size_t embed_texts_ = 0;
};

/// Writes doc.txt, cases.jsonl and ruleset.json under `dir` and returns a
/// scripted plan over them with run_dir `dir`/run.
ExperimentPlan write_npov_plan(const NpovWorld& w, const std::filesystem::path& dir,
                               std::vector<std::string> methods = {"M0", "M1", "M2:5", "M3"});

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

/// Text between `header` and the next line consisting of three quotes.
std::string quoted_block(const std::string& text, const std::string& header);

/// First JSON array in `text` whose objects carry `key`.
nlohmann::json json_array_with(const std::string& text, const std::string& key);

}  // namespace tag::fixture
