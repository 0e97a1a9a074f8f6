// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tag/corpus.hpp"
#include "tag/error.hpp"
#include "tag/utf8.hpp"

namespace tag {
namespace {

TEST(Utf8, DecodesMultiByteText) {
  const std::string s = "a\xC3\xA9\xE2\x82\xAC\xF0\x9F\x98\x80";  // a é € 😀
  EXPECT_TRUE(utf8::is_valid(s));
  EXPECT_EQ(utf8::length(s), 4u);
  EXPECT_EQ(utf8::decode(s), std::u32string(U"aé€\U0001F600"));
  EXPECT_EQ(utf8::encode(utf8::decode(s)), s);
}

TEST(Utf8, RejectsMalformedSequences) {
  for (const std::string bad : {"\xC3", "\x80", "\xED\xA0\x80", "\xC0\xAF", "\xF4\x90\x80\x80"}) {
    EXPECT_FALSE(utf8::is_valid(bad));
    EXPECT_THROW(utf8::decode(bad), EncodingError);
  }
}

TEST(Corpus, NormalizesLineEndings) {
  EXPECT_EQ(normalize_text("A\r\nB"), "A\nB");
  EXPECT_EQ(normalize_text("A\rB\r\n\rC"), "A\nB\n\nC");
  const std::string once = normalize_text("x\r\r\ny\r");
  EXPECT_EQ(normalize_text(once), once);
}

TEST(Corpus, LoadDocumentNormalizesAndCounts) {
  const auto dir = fixture::temp_dir("corpus");
  write_file_atomic(dir / "d.txt", "A\r\nB");
  const Document d = load_document(dir / "d.txt", "d");
  EXPECT_EQ(d.text, "A\nB");
  EXPECT_EQ(d.char_count, 3u);
}

TEST(Corpus, EmptyDocumentIsAValidationError) {
  const auto dir = fixture::temp_dir("corpus");
  write_file_atomic(dir / "e.txt", "");
  EXPECT_THROW(load_document(dir / "e.txt", "e"), ValidationError);
}

TEST(Corpus, DocumentErrors) {
  EXPECT_THROW(load_document("/nonexistent/doc.txt", "x"), IoError);
  EXPECT_THROW(make_document("x", "ab\xFF"), EncodingError);
}

TEST(Corpus, CharCountMatchesScalarCountOnLargeText) {
  std::string raw;
  std::size_t expected = 0;
  for (int i = 0; i < 60000; ++i) {
    raw += (i % 7 == 0) ? "\xC3\xA9 " : "word ";
    expected += (i % 7 == 0) ? 2 : 5;
    if (i % 100 == 99) {
      raw += "\r\n";
      expected += 1;
    }
  }
  EXPECT_EQ(make_document("big", raw).char_count, expected);
}

Document doc_of_length(std::size_t n) { return make_document("d", std::string(n, 'x')); }

TEST(Chunking, StrideArithmetic) {
  const auto cs = chunk_document(doc_of_length(1200), 500, 100);
  ASSERT_EQ(cs.size(), 3u);
  EXPECT_EQ(cs[0].start_offset, 0u);
  EXPECT_EQ(cs[1].start_offset, 400u);
  EXPECT_EQ(cs[2].start_offset, 800u);
  EXPECT_EQ(cs[0].end_offset, 500u);
  EXPECT_EQ(cs[1].end_offset, 900u);
  EXPECT_EQ(cs[2].end_offset, 1200u);
}

TEST(Chunking, BoundaryCases) {
  auto one = chunk_document(doc_of_length(500), 500, 100);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].end_offset, 500u);
  auto two = chunk_document(doc_of_length(501), 500, 100);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[1].start_offset, 400u);
  EXPECT_EQ(two[1].end_offset, 501u);
}

TEST(Chunking, InvalidParams) {
  EXPECT_THROW(chunk_document(doc_of_length(10), 0, 0), InvalidParams);
  EXPECT_THROW(chunk_document(doc_of_length(10), 5, 5), InvalidParams);
}

TEST(Chunking, OffsetsCountCharactersNotBytes) {
  std::string raw;
  for (int i = 0; i < 30; ++i) raw += "\xE2\x82\xAC";  // 30 euro signs, 90 bytes
  const auto cs = chunk_document(make_document("eu", raw), 10, 2);
  ASSERT_EQ(cs.size(), oracle::chunk_count(30, 10, 2));
  for (const auto& c : cs) EXPECT_EQ(utf8::length(c.text), c.end_offset - c.start_offset);
  EXPECT_EQ(cs.back().end_offset, 30u);
}

TEST(Chunking, ReconstructionOnRandomTriples) {
  std::mt19937 rng(7);
  for (int t = 0; t < 200; ++t) {
    const std::size_t size = 1 + rng() % 60;
    const std::size_t overlap = rng() % size;
    const std::size_t len = 1 + rng() % 400;
    std::string raw;
    for (std::size_t i = 0; i < len; ++i) raw += static_cast<char>('a' + rng() % 26);
    const Document d = make_document("r", raw);
    const auto cs = chunk_document(d, size, overlap);
    ASSERT_EQ(cs.size(), oracle::chunk_count(len, size, overlap));
    std::string rebuilt = cs[0].text;
    for (std::size_t i = 1; i < cs.size(); ++i) {
      EXPECT_EQ(cs[i].start_offset, i * (size - overlap));
      rebuilt += cs[i].text.substr(overlap);
    }
    EXPECT_EQ(rebuilt, raw);
  }
}

TEST(Chunking, UnitIds) {
  EXPECT_EQ(chunk_unit_id(4), "C-0004");
  EXPECT_EQ(chunk_unit_id(12345), "C-12345");
}

TEST(Cases, ParsesAndPreservesOrderAndExtras) {
  const auto cs = parse_cases(
      "{\"case_id\":\"b\",\"input_text\":\"x\",\"level\":\"L1\",\"metadata\":{\"violation\":\"v\"}}\n"
      "\n"
      "{\"case_id\":\"a\",\"input_text\":\"y\",\"gold\":{\"answer\":false}}\n");
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(cs[0].case_id, "b");
  EXPECT_EQ(cs[0].metadata.at("level"), "L1");
  EXPECT_EQ(cs[0].metadata.at("violation"), "v");
  EXPECT_FALSE(cs[0].gold.has_value());
  ASSERT_TRUE(cs[1].gold.has_value());
  EXPECT_EQ((*cs[1].gold)["answer"], false);
}

TEST(Cases, DuplicateIdReportsLine) {
  std::string text;
  for (int i = 1; i <= 4; ++i) text += "{\"case_id\":\"c" + std::to_string(i) + "\",\"input_text\":\"t\"}\n";
  text += "{\"case_id\":\"c2\",\"input_text\":\"t\"}\n";
  try {
    parse_cases(text);
    FAIL() << "expected DuplicateIdError";
  } catch (const DuplicateIdError& e) {
    EXPECT_EQ(e.line(), 5u);
    EXPECT_EQ(e.id(), "c2");
  }
}

TEST(Cases, MissingInputTextReportsLine) {
  try {
    parse_cases("{\"case_id\":\"a\",\"input_text\":\"t\"}\n{\"case_id\":\"b\"}\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_cases("not json\n"), ParseError);
}

TEST(Cases, JsonRoundTrip) {
  const auto cs = parse_cases("{\"case_id\":\"a\",\"input_text\":\"t\",\"metadata\":{\"k\":\"v\"},\"gold\":\"g\"}\n");
  const auto again = parse_cases(to_json(cs[0]).dump() + "\n");
  EXPECT_EQ(again[0].case_id, "a");
  EXPECT_EQ(again[0].metadata, cs[0].metadata);
  EXPECT_EQ(again[0].gold, cs[0].gold);
}

TEST(Cases, LoadsOneHundredSevenCases) {
  const auto dir = fixture::temp_dir("cases");
  std::string text;
  for (int i = 0; i < 107; ++i) text += "{\"case_id\":\"n" + std::to_string(i) + "\",\"input_text\":\"s\"}\n";
  write_file_atomic(dir / "c.jsonl", text);
  EXPECT_EQ(load_cases(dir / "c.jsonl").size(), 107u);
}

}  // namespace
}  // namespace tag
