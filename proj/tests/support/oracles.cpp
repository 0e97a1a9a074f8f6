// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace tag::oracle {
namespace {

std::size_t matches_in(const std::u32string& a, std::size_t alo, std::size_t ahi, const std::u32string& b,
                       std::size_t blo, std::size_t bhi) {
  if (alo >= ahi || blo >= bhi) return 0;
  const std::size_t n = ahi - alo, m = bhi - blo;
  // suffix[i][j]: length of the common suffix of a[alo, alo+i) and b[blo, blo+j).
  std::vector<std::vector<std::size_t>> suffix(n + 1, std::vector<std::size_t>(m + 1, 0));
  std::size_t best = 0, best_i = 0, best_j = 0;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      if (a[alo + i - 1] == b[blo + j - 1]) suffix[i][j] = suffix[i - 1][j - 1] + 1;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t k = suffix[i][j];
      if (k == 0) continue;
      const std::size_t si = alo + i - k, sj = blo + j - k;
      if (k > best || (k == best && (si < best_i || (si == best_i && sj < best_j)))) {
        best = k;
        best_i = si;
        best_j = sj;
      }
    }
  if (best == 0) return 0;
  return best + matches_in(a, alo, best_i, b, blo, best_j) + matches_in(a, best_i + best, ahi, b, best_j + best, bhi);
}

}  // namespace

std::size_t gestalt_matches(const std::u32string& a, const std::u32string& b) {
  return matches_in(a, 0, a.size(), b, 0, b.size());
}

double gestalt_ratio(const std::u32string& a, const std::u32string& b) {
  if (a.empty() && b.empty()) return 1.0;
  return 2.0 * static_cast<double>(gestalt_matches(a, b)) / static_cast<double>(a.size() + b.size());
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

std::vector<std::pair<std::string, double>> top_k(const std::vector<std::pair<std::string, std::vector<double>>>& units,
                                                  const std::vector<double>& query, std::size_t k) {
  std::vector<std::pair<std::string, double>> all;
  for (const auto& [id, vec] : units) all.emplace_back(id, cosine(query, vec));
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

std::size_t chunk_count(std::size_t length, std::size_t size, std::size_t overlap) {
  if (length <= size) return 1;
  const std::size_t stride = size - overlap;
  return (length - overlap + stride - 1) / stride;
}

}  // namespace tag::oracle
