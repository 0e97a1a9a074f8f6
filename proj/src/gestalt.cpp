// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "tag/gestalt.hpp"

#include <algorithm>
#include <unordered_map>
#include <vector>

#include "tag/utf8.hpp"

namespace tag {
namespace {

struct Match {
  std::size_t a = 0, b = 0, size = 0;
};

// Longest-match search in the style of difflib.SequenceMatcher: row-by-row
// over `a`, tracking the length of the common suffix ending at each b
// position. Stamps make row resets O(1).
class LongestMatchFinder {
 public:
  LongestMatchFinder(std::u32string_view a, std::u32string_view b)
      : a_(a), prev_len_(b.size()), prev_stamp_(b.size(), 0), cur_len_(b.size()), cur_stamp_(b.size(), 0) {
    for (std::size_t j = 0; j < b.size(); ++j) positions_[b[j]].push_back(j);
  }

  Match find(std::size_t alo, std::size_t ahi, std::size_t blo, std::size_t bhi) {
    Match best{alo, blo, 0};
    for (std::size_t i = alo; i < ahi; ++i) {
      const std::uint64_t row = ++stamp_;
      auto it = positions_.find(a_[i]);
      if (it != positions_.end()) {
        const auto& js = it->second;
        for (auto p = std::lower_bound(js.begin(), js.end(), blo); p != js.end() && *p < bhi; ++p) {
          const std::size_t j = *p;
          std::size_t k = 1;
          if (j > blo && prev_stamp_[j - 1] == row - 1) k = prev_len_[j - 1] + 1;
          cur_len_[j] = k;
          cur_stamp_[j] = row;
          if (k > best.size) best = {i + 1 - k, j + 1 - k, k};
        }
      }
      std::swap(prev_len_, cur_len_);
      std::swap(prev_stamp_, cur_stamp_);
    }
    ++stamp_;  // invalidate the last row for the next search
    return best;
  }

 private:
  std::u32string_view a_;
  std::unordered_map<char32_t, std::vector<std::size_t>> positions_;
  std::vector<std::size_t> prev_len_;
  std::vector<std::uint64_t> prev_stamp_;
  std::vector<std::size_t> cur_len_;
  std::vector<std::uint64_t> cur_stamp_;
  std::uint64_t stamp_ = 1;
};

}  // namespace

std::size_t gestalt_matches(std::u32string_view a, std::u32string_view b) {
  if (a.empty() || b.empty()) return 0;
  LongestMatchFinder finder(a, b);
  struct Range {
    std::size_t alo, ahi, blo, bhi;
  };
  std::vector<Range> todo{{0, a.size(), 0, b.size()}};
  std::size_t total = 0;
  while (!todo.empty()) {
    const Range r = todo.back();
    todo.pop_back();
    const Match m = finder.find(r.alo, r.ahi, r.blo, r.bhi);
    if (m.size == 0) continue;
    total += m.size;
    if (r.alo < m.a && r.blo < m.b) todo.push_back({r.alo, m.a, r.blo, m.b});
    if (m.a + m.size < r.ahi && m.b + m.size < r.bhi) todo.push_back({m.a + m.size, r.ahi, m.b + m.size, r.bhi});
  }
  return total;
}

double gestalt_ratio(std::u32string_view a, std::u32string_view b) {
  const std::size_t len = a.size() + b.size();
  if (len == 0) return 1.0;
  return 2.0 * static_cast<double>(gestalt_matches(a, b)) / static_cast<double>(len);
}

double gestalt_ratio(std::string_view a, std::string_view b) {
  return gestalt_ratio(utf8::decode(a), utf8::decode(b));
}

double gestalt_upper_bound(std::u32string_view a, std::u32string_view b) {
  const std::size_t len = a.size() + b.size();
  if (len == 0) return 1.0;
  std::unordered_map<char32_t, long> counts;
  for (char32_t c : b) ++counts[c];
  std::size_t inter = 0;
  for (char32_t c : a) {
    auto it = counts.find(c);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++inter;
    }
  }
  return 2.0 * static_cast<double>(inter) / static_cast<double>(len);
}

}  // namespace tag
