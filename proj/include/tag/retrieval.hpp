// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tag/corpus.hpp"
#include "tag/llm_gateway.hpp"
#include "tag/rule_model.hpp"

namespace tag {

enum class UnitKind { chunk, rule };

struct IndexEntry {
  std::string unit_id;
  std::string text;
  EmbeddingVector vector;
};

/// Exhaustive cosine index over chunks or rules. Vectors are kept as given
/// (unnormalized) in double precision.
struct SimilarityIndex {
  UnitKind unit_kind = UnitKind::chunk;
  std::vector<IndexEntry> entries;
  std::string model_id;
};

struct Scored {
  std::string unit_id;
  double score = 0.0;
  bool operator==(const Scored&) const = default;
};

/// Text embedded for a rule unit: name, condition and action on three lines.
std::string rule_embedding_text(const Rule& r);

/// (unit_id, text) pairs ready for indexing.
std::vector<std::pair<std::string, std::string>> chunk_units(const std::vector<Chunk>& chunks);
std::vector<std::pair<std::string, std::string>> rule_units(const std::vector<Rule>& rules);

/// Embeds `units` in order. Throws ValidationError on empty input or a
/// repeated unit_id.
SimilarityIndex build_index(const std::vector<std::pair<std::string, std::string>>& units, UnitKind kind,
                            Gateway& gateway);

/// dot(u,v) / (|u|·|v|). Throws DimensionMismatchError or ZeroVectorError.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

/// Highest-scoring min(k, size) entries, descending; equal scores ordered by
/// ascending unit_id. Throws EmptyIndexError / InvalidParams (k == 0).
std::vector<Scored> top_k(const SimilarityIndex& index, const EmbeddingVector& query, std::size_t k);

nlohmann::ordered_json to_json(const SimilarityIndex& index);
SimilarityIndex index_from_json(const nlohmann::json& j);
void save_index(const SimilarityIndex& index, const std::filesystem::path& path);
SimilarityIndex load_index(const std::filesystem::path& path);

}  // namespace tag
