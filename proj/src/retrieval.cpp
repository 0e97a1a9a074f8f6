// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "tag/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tag/error.hpp"

namespace tag {

using nlohmann::json;
using nlohmann::ordered_json;

std::string rule_embedding_text(const Rule& r) { return r.rule_name + "\n" + r.condition + "\n" + r.action; }

std::vector<std::pair<std::string, std::string>> chunk_units(const std::vector<Chunk>& chunks) {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(chunks.size());
  for (const auto& c : chunks) out.emplace_back(chunk_unit_id(c.chunk_id), c.text);
  return out;
}

std::vector<std::pair<std::string, std::string>> rule_units(const std::vector<Rule>& rules) {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(rules.size());
  for (const auto& r : rules) out.emplace_back(r.rule_id, rule_embedding_text(r));
  return out;
}

SimilarityIndex build_index(const std::vector<std::pair<std::string, std::string>>& units, UnitKind kind,
                            Gateway& gateway) {
  if (units.empty()) throw ValidationError("cannot build an index over zero units");
  std::set<std::string> ids;
  std::vector<std::string> texts;
  texts.reserve(units.size());
  for (const auto& [id, text] : units) {
    if (!ids.insert(id).second) throw ValidationError("duplicate unit_id '" + id + "' in index");
    texts.push_back(text);
  }
  auto vecs = gateway.embed(texts);
  SimilarityIndex index;
  index.unit_kind = kind;
  index.model_id = gateway.options().embedding_model_id;
  const std::size_t dim = vecs.front().dim();
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (vecs[i].dim() != dim) throw DimensionMismatchError("index vectors differ in dimension");
    index.entries.push_back({units[i].first, units[i].second, std::move(vecs[i])});
  }
  return index;
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim())
    throw DimensionMismatchError("cosine of vectors with dimensions " + std::to_string(u.dim()) + " and " +
                                 std::to_string(v.dim()));
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) {
    dot += u.values[i] * v.values[i];
    uu += u.values[i] * u.values[i];
    vv += v.values[i] * v.values[i];
  }
  if (uu == 0.0 || vv == 0.0) throw ZeroVectorError("cosine of an all-zero vector");
  const double c = dot / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(c, -1.0, 1.0);
}

std::vector<Scored> top_k(const SimilarityIndex& index, const EmbeddingVector& query, std::size_t k) {
  if (k == 0) throw InvalidParams("k must be at least 1");
  if (index.entries.empty()) throw EmptyIndexError("top_k over an empty index");
  std::vector<Scored> scored;
  scored.reserve(index.entries.size());
  for (const auto& e : index.entries) scored.push_back({e.unit_id, cosine(query, e.vector)});
  auto better = [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.unit_id < b.unit_id;
  };
  const std::size_t n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), better);
  scored.resize(n);
  return scored;
}

ordered_json to_json(const SimilarityIndex& index) {
  ordered_json j;
  j["unit_kind"] = index.unit_kind == UnitKind::rule ? "rule" : "chunk";
  j["model_id"] = index.model_id;
  ordered_json entries = ordered_json::array();
  for (const auto& e : index.entries)
    entries.push_back({{"unit_id", e.unit_id}, {"text", e.text}, {"vector", e.vector.values}});
  j["entries"] = std::move(entries);
  return j;
}

SimilarityIndex index_from_json(const json& j) {
  SimilarityIndex index;
  try {
    const auto kind = j.at("unit_kind").get<std::string>();
    if (kind != "rule" && kind != "chunk") throw ParseError("unknown unit_kind '" + kind + "'");
    index.unit_kind = kind == "rule" ? UnitKind::rule : UnitKind::chunk;
    index.model_id = j.at("model_id").get<std::string>();
    for (const auto& e : j.at("entries"))
      index.entries.push_back({e.at("unit_id").get<std::string>(), e.at("text").get<std::string>(),
                               {e.at("vector").get<std::vector<double>>(), index.model_id}});
  } catch (const json::exception& e) {
    throw ParseError(std::string("index: ") + e.what());
  }
  std::set<std::string> ids;
  for (const auto& e : index.entries) {
    if (!ids.insert(e.unit_id).second) throw ValidationError("duplicate unit_id '" + e.unit_id + "' in index");
    if (e.vector.dim() != index.entries.front().vector.dim())
      throw DimensionMismatchError("index vectors differ in dimension");
  }
  return index;
}

void save_index(const SimilarityIndex& index, const std::filesystem::path& path) {
  write_file_atomic(path, to_json(index).dump() + "\n");
}

SimilarityIndex load_index(const std::filesystem::path& path) {
  try {
    return index_from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace tag
