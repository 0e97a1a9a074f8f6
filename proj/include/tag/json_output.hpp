// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tag/llm_gateway.hpp"
#include "tag/prompts.hpp"

namespace tag {

/// Removes one surrounding markdown code fence (with optional language tag)
/// and outer whitespace. Text without a fence is only trimmed.
std::string strip_code_fences(std::string_view raw);

/// Raised by output validators; turned into SchemaError or ParseError by
/// complete_json once the repair attempt is spent.
class OutputInvalid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OutputErrorKind { schema, parse };

struct StructuredOutput {
  nlohmann::json value;
  std::string raw;
  bool repaired = false;
};

/// Issues `req`, strips fences, parses JSON and runs `validate` (which throws
/// OutputInvalid). On failure re-prompts once with the error appended
/// (request tag "<tag>:repair"); a second failure throws SchemaError or
/// ParseError according to `kind`.
StructuredOutput complete_json(Gateway& gateway, const ChatRequest& req,
                               const std::function<void(const nlohmann::json&)>& validate, OutputErrorKind kind,
                               const PromptLibrary& prompts = PromptLibrary::defaults());

/// Parses fenced-or-bare JSON. Throws OutputInvalid.
nlohmann::json parse_json_text(std::string_view raw);

}  // namespace tag
