// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "tag/corpus.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "tag/error.hpp"
#include "tag/utf8.hpp"

namespace tag {

namespace fs = std::filesystem;
using nlohmann::json;

std::string normalize_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
    } else {
      out.push_back(raw[i]);
    }
  }
  return out;
}

Document make_document(std::string doc_id, std::string_view raw, std::string domain_label) {
  if (!utf8::is_valid(raw)) throw EncodingError("document '" + doc_id + "' is not valid UTF-8");
  Document doc;
  doc.doc_id = std::move(doc_id);
  doc.text = normalize_text(raw);
  if (doc.text.empty()) throw ValidationError("empty document");
  doc.domain_label = std::move(domain_label);
  doc.char_count = utf8::length(doc.text);
  return doc;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("error writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

Document load_document(const fs::path& path, std::string doc_id, std::string domain_label) {
  return make_document(std::move(doc_id), read_file(path), std::move(domain_label));
}

std::vector<Chunk> chunk_document(const Document& doc, std::size_t chunk_size, std::size_t overlap) {
  if (chunk_size == 0) throw InvalidParams("chunk_size must be positive");
  if (overlap >= chunk_size) throw InvalidParams("overlap must be smaller than chunk_size");
  const std::u32string text = utf8::decode(doc.text);
  if (text.empty()) throw ValidationError("empty document");

  const std::size_t stride = chunk_size - overlap;
  std::vector<Chunk> chunks;
  for (std::size_t start = 0;; start += stride) {
    const std::size_t end = std::min(start + chunk_size, text.size());
    chunks.push_back({chunks.size(), start, end, utf8::encode(std::u32string_view(text).substr(start, end - start))});
    if (end == text.size()) break;
  }
  return chunks;
}

std::string chunk_unit_id(std::size_t chunk_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "C-%04zu", chunk_id);
  return buf;
}

namespace {

std::string as_metadata_value(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

std::vector<TaskCase> parse_cases(std::string_view jsonl) {
  std::vector<TaskCase> cases;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= jsonl.size()) {
    std::size_t nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    std::string line = normalize_text(jsonl.substr(pos, nl - pos));
    if (!line.empty() && line.back() == '\n') line.pop_back();
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) {
      if (nl == jsonl.size()) break;
      continue;
    }

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!obj.is_object()) throw ParseError("case record must be a JSON object", line_no);
    if (!obj.contains("case_id") || !obj["case_id"].is_string() || obj["case_id"].get<std::string>().empty())
      throw ParseError("missing or non-string case_id", line_no);
    if (!obj.contains("input_text") || !obj["input_text"].is_string())
      throw ParseError("missing or non-string input_text", line_no);

    TaskCase c;
    c.case_id = obj["case_id"].get<std::string>();
    c.input_text = obj["input_text"].get<std::string>();
    if (!utf8::is_valid(c.input_text)) throw ParseError("input_text is not valid UTF-8", line_no);
    if (obj.contains("metadata")) {
      const auto& md = obj["metadata"];
      if (!md.is_object()) throw ParseError("metadata must be an object", line_no);
      for (const auto& [k, v] : md.items()) c.metadata[k] = as_metadata_value(v);
    }
    if (obj.contains("gold") && !obj["gold"].is_null()) c.gold = obj["gold"];
    for (const auto& [k, v] : obj.items()) {
      if (k == "case_id" || k == "input_text" || k == "metadata" || k == "gold") continue;
      c.metadata.emplace(k, as_metadata_value(v));
    }
    if (!seen.insert(c.case_id).second) throw DuplicateIdError(c.case_id, line_no);
    cases.push_back(std::move(c));
    if (nl == jsonl.size()) break;
  }
  return cases;
}

std::vector<TaskCase> load_cases(const fs::path& path) { return parse_cases(read_file(path)); }

nlohmann::ordered_json to_json(const TaskCase& c) {
  nlohmann::ordered_json j;
  j["case_id"] = c.case_id;
  j["input_text"] = c.input_text;
  j["metadata"] = c.metadata;
  if (c.gold) j["gold"] = *c.gold;
  return j;
}

}  // namespace tag
