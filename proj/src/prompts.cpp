// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "tag/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>

#include "tag/corpus.hpp"
#include "tag/error.hpp"
#include "tag/hashing.hpp"

namespace tag {

namespace fs = std::filesystem;

namespace {

struct SlotRef {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past '}'
  std::string name;
  std::string format;  // text after ':' if any
};

bool is_slot_start(char c) { return std::islower(static_cast<unsigned char>(c)) || c == '_'; }
bool is_slot_char(char c) {
  return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_';
}

std::vector<SlotRef> scan(std::string_view t) {
  std::vector<SlotRef> refs;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] != '{' || i + 1 >= t.size() || !is_slot_start(t[i + 1])) continue;
    std::size_t j = i + 1;
    while (j < t.size() && is_slot_char(t[j])) ++j;
    SlotRef r;
    r.begin = i;
    r.name = std::string(t.substr(i + 1, j - i - 1));
    if (j < t.size() && t[j] == ':') {
      const std::size_t close = t.find('}', j);
      if (close == std::string_view::npos || t.substr(j, close - j).find_first_of("{\n") != std::string_view::npos)
        continue;
      r.format = std::string(t.substr(j + 1, close - j - 1));
      j = close;
    }
    if (j >= t.size() || t[j] != '}') continue;
    r.end = j + 1;
    refs.push_back(std::move(r));
    i = j;
  }
  return refs;
}

std::string apply_format(const SlotRef& ref, const std::string& value) {
  if (ref.format.empty()) return value;
  // Only zero-padded integer formats ("03d") appear in the templates.
  if (ref.format.size() < 2 || ref.format.back() != 'd')
    throw TemplateError("unsupported format '" + ref.format + "' for slot " + ref.name);
  long long n = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
  if (ec != std::errc() || p != value.data() + value.size())
    throw TemplateError("slot " + ref.name + " expects an integer, got '" + value + "'");
  const std::string width = ref.format.substr(0, ref.format.size() - 1);
  const std::string format = "%" + width + "lld";
  char buf[64];
  std::snprintf(buf, sizeof buf, format.c_str(), n);
  return buf;
}

const std::map<std::string, std::string>& builtin() {
  static const std::map<std::string, std::string> texts = [] {
    std::map<std::string, std::string> m = {
#include "prompt_texts.inc"
    };
    m[prompt_names::kRepair] = R"TPL({original_user}

Your previous response could not be used:
{error}

Previous response:
"""
{previous}
"""

Respond again with output that follows the required format exactly.)TPL";
    return m;
  }();
  return texts;
}

}  // namespace

std::string render_template(std::string_view tmpl, const SlotMap& slots) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t pos = 0;
  for (const auto& ref : scan(tmpl)) {
    auto it = slots.find(ref.name);
    if (it == slots.end()) throw TemplateError("no value for template slot '{" + ref.name + "}'");
    out.append(tmpl.substr(pos, ref.begin - pos));
    out += apply_format(ref, it->second);
    pos = ref.end;
  }
  out.append(tmpl.substr(pos));
  return out;
}

std::vector<std::string> template_slots(std::string_view tmpl) {
  std::vector<std::string> names;
  for (const auto& ref : scan(tmpl))
    if (std::find(names.begin(), names.end(), ref.name) == names.end()) names.push_back(ref.name);
  return names;
}

const PromptLibrary& PromptLibrary::defaults() {
  static const PromptLibrary lib = [] {
    PromptLibrary l;
    l.templates_ = builtin();
    return l;
  }();
  return lib;
}

PromptLibrary PromptLibrary::with_overrides(const fs::path& dir) {
  PromptLibrary lib = defaults();
  if (!fs::is_directory(dir)) throw ConfigError("template directory '" + dir.string() + "' does not exist");
  for (auto& [name, text] : lib.templates_) {
    const fs::path p = dir / (name + ".txt");
    if (fs::exists(p)) text = read_file(p);
  }
  return lib;
}

const std::string& PromptLibrary::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw TemplateError("unknown template '" + name + "'");
  return it->second;
}

std::string PromptLibrary::render(const std::string& name, const SlotMap& slots) const {
  return render_template(get(name), slots);
}

std::map<std::string, std::string> PromptLibrary::hashes() const {
  std::map<std::string, std::string> out;
  for (const auto& [name, text] : templates_) out[name] = sha256_hex(text);
  return out;
}

void PromptLibrary::dump(const fs::path& dir) const {
  for (const auto& [name, text] : templates_) write_file_atomic(dir / (name + ".txt"), text);
}

}  // namespace tag
