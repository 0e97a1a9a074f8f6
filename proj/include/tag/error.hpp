// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tag {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

/// Malformed input or model output. `line` is 1-based when the source is a
/// line-oriented file, 0 otherwise.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateIdError : public Error {
 public:
  DuplicateIdError(const std::string& id, std::size_t line)
      : Error("line " + std::to_string(line) + ": duplicate id '" + id + "'"), id_(id), line_(line) {}
  const std::string& id() const noexcept { return id_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string id_;
  std::size_t line_;
};

/// Model output that does not satisfy a phase's JSON schema, after repair.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, std::string request_tag, bool retryable = true)
      : Error(request_tag.empty() ? what : "[" + request_tag + "] " + what),
        request_tag_(std::move(request_tag)),
        retryable_(retryable) {}
  const std::string& request_tag() const noexcept { return request_tag_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  std::string request_tag_;
  bool retryable_;
};

/// A scripted provider received a request it has no (unique) answer for.
class ScriptError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class ZeroVectorError : public Error {
 public:
  using Error::Error;
};

class EmptyIndexError : public Error {
 public:
  using Error::Error;
};

class MissingGoldError : public Error {
 public:
  using Error::Error;
};

class MissingScoreError : public Error {
 public:
  explicit MissingScoreError(std::vector<std::string> case_ids)
      : Error(describe(case_ids)), case_ids_(std::move(case_ids)) {}
  const std::vector<std::string>& case_ids() const noexcept { return case_ids_; }

 private:
  static std::string describe(const std::vector<std::string>& ids) {
    std::string s = "no external score for case(s):";
    for (const auto& id : ids) s += " " + id;
    return s;
  }
  std::vector<std::string> case_ids_;
};

class MixedDomainError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace tag
