// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tag {

/// A source document. `text` is UTF-8 with LF line endings; `char_count`
/// counts scalar values, not bytes.
struct Document {
  std::string doc_id;
  std::string text;
  std::string domain_label;
  std::size_t char_count = 0;
};

/// A fixed-size window over Document::text. Offsets are in characters,
/// `end_offset` exclusive.
struct Chunk {
  std::size_t chunk_id = 0;
  std::size_t start_offset = 0;
  std::size_t end_offset = 0;
  std::string text;

  bool operator==(const Chunk&) const = default;
};

/// One benchmark input. Unknown top-level keys of a case record are kept in
/// `metadata`; `gold` is carried as raw JSON and interpreted by the scorer.
struct TaskCase {
  std::string case_id;
  std::string input_text;
  std::map<std::string, std::string> metadata;
  std::optional<nlohmann::json> gold;
};

/// Unifies CRLF and lone CR to LF. Idempotent.
std::string normalize_text(std::string_view raw);

/// Builds a validated Document from raw text (normalizes line endings).
Document make_document(std::string doc_id, std::string_view raw, std::string domain_label = {});

Document load_document(const std::filesystem::path& path, std::string doc_id,
                       std::string domain_label = {});

/// Splits into windows of `chunk_size` characters advancing by
/// `chunk_size - overlap`. The last window ends at char_count and may be
/// shorter than `overlap`; it is never merged into its predecessor.
std::vector<Chunk> chunk_document(const Document& doc, std::size_t chunk_size, std::size_t overlap);

inline constexpr std::size_t kDefaultChunkSize = 500;
inline constexpr std::size_t kDefaultChunkOverlap = 100;

/// Stable string id for a chunk, e.g. "C-0004".
std::string chunk_unit_id(std::size_t chunk_id);

std::vector<TaskCase> parse_cases(std::string_view jsonl);
std::vector<TaskCase> load_cases(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const TaskCase& c);

/// Reads a whole file as bytes; throws IoError.
std::string read_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename, so readers never observe a
/// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace tag
