// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tag {

/// Slot values for template rendering; keys are slot names without braces.
using SlotMap = std::map<std::string, std::string>;

/// Replaces `{name}` and `{name:0Nd}` markers. Braces not forming a slot
/// (JSON examples in the templates) are left alone. Throws TemplateError
/// when a referenced slot has no value or an integer slot is not numeric.
std::string render_template(std::string_view tmpl, const SlotMap& slots);

/// Slot names referenced by a template, in first-use order.
std::vector<std::string> template_slots(std::string_view tmpl);

/// Named prompt templates. The defaults are the stock prompts of every
/// pipeline stage; a directory of `<name>.txt` files can replace any of them.
class PromptLibrary {
 public:
  static const PromptLibrary& defaults();

  /// Copies the defaults and overrides each template that has a file in `dir`.
  static PromptLibrary with_overrides(const std::filesystem::path& dir);

  const std::string& get(const std::string& name) const;
  std::string render(const std::string& name, const SlotMap& slots) const;

  /// name -> SHA-256 of template text.
  std::map<std::string, std::string> hashes() const;
  const std::map<std::string, std::string>& all() const noexcept { return templates_; }

  /// Writes every template as `<name>.txt` into `dir`.
  void dump(const std::filesystem::path& dir) const;

 private:
  std::map<std::string, std::string> templates_;
};

namespace prompt_names {
inline constexpr const char* kRepair = "repair.user";
}

}  // namespace tag
