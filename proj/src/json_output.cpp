// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "tag/json_output.hpp"

#include "tag/error.hpp"

namespace tag {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string strip_code_fences(std::string_view raw) {
  std::string_view s = trim(raw);
  if (s.size() >= 3 && s.substr(0, 3) == "```") {
    const auto first_nl = s.find('\n');
    if (first_nl == std::string_view::npos) return std::string(s);
    std::string_view body = s.substr(first_nl + 1);
    body = trim(body);
    if (body.size() >= 3 && body.substr(body.size() - 3) == "```") body = body.substr(0, body.size() - 3);
    return std::string(trim(body));
  }
  return std::string(s);
}

json parse_json_text(std::string_view raw) {
  const std::string text = strip_code_fences(raw);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw OutputInvalid(std::string("output is not valid JSON (") + e.what() + ")");
  }
}

StructuredOutput complete_json(Gateway& gateway, const ChatRequest& req,
                               const std::function<void(const json&)>& validate, OutputErrorKind kind,
                               const PromptLibrary& prompts) {
  auto attempt = [&](const std::string& raw) {
    json value = parse_json_text(raw);
    validate(value);
    return value;
  };

  const std::string raw = gateway.complete(req);
  try {
    return {attempt(raw), raw, false};
  } catch (const OutputInvalid& first) {
    ChatRequest repair = req;
    repair.request_tag = req.request_tag + ":repair";
    repair.user_message = prompts.render(prompt_names::kRepair, {{"original_user", req.user_message},
                                                                  {"error", first.what()},
                                                                  {"previous", raw}});
    const std::string raw2 = gateway.complete(repair);
    try {
      return {attempt(raw2), raw2, true};
    } catch (const OutputInvalid& second) {
      const std::string msg = "[" + req.request_tag + "] model output invalid after repair: " + second.what();
      if (kind == OutputErrorKind::schema) throw SchemaError(msg);
      throw ParseError(msg);
    }
  }
}

}  // namespace tag
