// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// Character offsets across the library count Unicode scalar values. Text is
// stored as UTF-8 and decoded to UTF-32 wherever offsets are needed.
namespace tag::utf8 {

bool is_valid(std::string_view s);

/// Throws EncodingError on malformed input.
std::u32string decode(std::string_view s);

std::string encode(std::u32string_view s);

/// Number of scalar values; throws EncodingError on malformed input.
std::size_t length(std::string_view s);

}  // namespace tag::utf8
