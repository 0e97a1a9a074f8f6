// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace tag {

/// Total size of the Ratcliff/Obershelp matching blocks of `a` and `b`: take
/// the longest common substring (earliest in `a`, then earliest in `b`),
/// then recurse on the unmatched left and right remainders. No junk
/// heuristics are applied.
std::size_t gestalt_matches(std::u32string_view a, std::u32string_view b);

/// 2·M / (|a|+|b|); 1.0 when both are empty.
double gestalt_ratio(std::u32string_view a, std::u32string_view b);

/// UTF-8 convenience overload; lengths count scalar values.
double gestalt_ratio(std::string_view a, std::string_view b);

/// Upper bound on gestalt_ratio from character multiset intersection.
double gestalt_upper_bound(std::u32string_view a, std::u32string_view b);

}  // namespace tag
