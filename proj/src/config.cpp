// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#include "tag/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

#include "tag/error.hpp"
#include "tag/http_provider.hpp"

namespace tag {

using nlohmann::json;

namespace {

class TomlParser {
 public:
  explicit TomlParser(std::string_view text) : s_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (pos_ < s_.size()) {
      skip_ws();
      if (at_end()) break;
      const char c = s_[pos_];
      if (c == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      if (c == '#') {
        skip_comment();
        continue;
      }
      if (c == '[') {
        ++pos_;
        if (peek() == '[') fail("arrays of tables are not supported");
        table = &root;
        for (;;) {
          skip_ws();
          const std::string key = parse_key();
          json& next = (*table)[key];
          if (next.is_null()) next = json::object();
          if (!next.is_object()) fail("'" + key + "' is not a table");
          table = &next;
          skip_ws();
          if (peek() == '.') {
            ++pos_;
            continue;
          }
          break;
        }
        expect(']');
        end_of_line();
        continue;
      }
      std::vector<std::string> path{parse_key()};
      skip_ws();
      while (peek() == '.') {
        ++pos_;
        skip_ws();
        path.push_back(parse_key());
        skip_ws();
      }
      expect('=');
      skip_ws();
      json value = parse_value();
      json* target = table;
      for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        json& next = (*target)[path[i]];
        if (next.is_null()) next = json::object();
        if (!next.is_object()) fail("'" + path[i] + "' is not a table");
        target = &next;
      }
      if (target->contains(path.back())) fail("duplicate key '" + path.back() + "'");
      (*target)[path.back()] = std::move(value);
      end_of_line();
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
  }
  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return at_end() ? '\0' : s_[pos_]; }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  void skip_ws() {
    while (!at_end() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }
  void skip_comment() {
    while (!at_end() && s_[pos_] != '\n') ++pos_;
  }
  // Whitespace, comments and newlines inside arrays.
  void skip_blank() {
    for (;;) {
      skip_ws();
      if (peek() == '#') skip_comment();
      if (peek() == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      return;
    }
  }
  void end_of_line() {
    skip_ws();
    if (peek() == '#') skip_comment();
    if (at_end()) return;
    if (peek() != '\n') fail("unexpected trailing content");
    ++pos_;
    ++line_;
  }

  std::string parse_key() {
    const char c = peek();
    if (c == '"') return parse_basic_string();
    if (c == '\'') return parse_literal_string();
    std::string key;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-'))
      key += s_[pos_++];
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::string parse_basic_string() {
    expect('"');
    std::string out;
    for (;;) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      char c = s_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (at_end()) fail("unterminated escape");
      c = s_[pos_++];
      switch (c) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'u':
        case 'U': {
          const std::size_t n = c == 'u' ? 4 : 8;
          if (pos_ + n > s_.size()) fail("short unicode escape");
          unsigned long cp = 0;
          const auto hex = s_.substr(pos_, n);
          auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + n, cp, 16);
          if (ec != std::errc() || ptr != hex.data() + n) fail("bad unicode escape");
          pos_ += n;
          append_utf8(out, static_cast<char32_t>(cp));
          break;
        }
        default: fail(std::string("unknown escape '\\") + c + "'");
      }
    }
  }

  static void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  std::string parse_literal_string() {
    expect('\'');
    std::string out;
    while (peek() != '\'') {
      if (at_end() || peek() == '\n') fail("unterminated string");
      out += s_[pos_++];
    }
    ++pos_;
    return out;
  }

  json parse_value() {
    const char c = peek();
    if (c == '"') return parse_basic_string();
    if (c == '\'') return parse_literal_string();
    if (c == '[') {
      ++pos_;
      json arr = json::array();
      for (;;) {
        skip_blank();
        if (peek() == ']') {
          ++pos_;
          return arr;
        }
        arr.push_back(parse_value());
        skip_blank();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        skip_blank();
        expect(']');
        return arr;
      }
    }
    std::string tok;
    while (!at_end() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != ',' && peek() != ']' &&
           peek() != '#')
      tok += s_[pos_++];
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string digits;
    for (char ch : tok)
      if (ch != '_') digits += ch;
    if (digits.empty()) fail("expected a value");
    const bool is_float = digits.find_first_of(".eE") != std::string::npos;
    const char* b = digits.data();
    const char* e = b + digits.size();
    if (*b == '+') ++b;
    if (is_float) {
      char* end = nullptr;
      const double d = std::strtod(b, &end);
      if (end != e) fail("bad number '" + tok + "'");
      return d;
    }
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e) fail("bad value '" + tok + "'");
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

const json& section(const json& root, const char* name) {
  static const json empty = json::object();
  auto it = root.find(name);
  if (it == root.end()) return empty;
  if (!it->is_object()) throw ConfigError(std::string("[") + name + "] must be a table");
  return *it;
}

template <typename T>
T get_or(const json& sec, const char* sec_name, const char* key, T fallback) {
  auto it = sec.find(key);
  if (it == sec.end()) return fallback;
  try {
    if constexpr (std::is_same_v<T, std::size_t>) {
      if (!it->is_number_integer() || it->get<std::int64_t>() < 0) throw ConfigError("");
      return static_cast<std::size_t>(it->get<std::int64_t>());
    } else if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw ConfigError("");
      return it->get<double>();
    } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::int64_t>) {
      if (!it->is_number_integer()) throw ConfigError("");
      return static_cast<T>(it->get<std::int64_t>());
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError("");
      return it->get<bool>();
    } else {
      if (!it->is_string()) throw ConfigError("");
      return it->get<std::string>();
    }
  } catch (const ConfigError&) {
    throw ConfigError(std::string("[") + sec_name + "] " + key + " has the wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

void reject_unknown(const json& sec, const char* name, std::initializer_list<const char*> known) {
  for (const auto& [key, _] : sec.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(std::string("[") + name + "] unknown key '" + key + "'");
  }
}

}  // namespace

json parse_toml(std::string_view text) { return TomlParser(text).parse(); }

void validate_method_id(const std::string& m) {
  if (m == "M0" || m == "M1" || m == "M3") return;
  if (m.rfind("M2:", 0) == 0 && m.size() > 3) {
    const std::string k = m.substr(3);
    if (std::all_of(k.begin(), k.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) &&
        std::stoul(k) > 0)
      return;
  }
  throw ConfigError("unknown method '" + m + "' (expected M0, M1, M2:<k> or M3)");
}

ExperimentPlan plan_from_toml(const json& root, const std::filesystem::path& base) {
  for (const auto& [key, _] : root.items())
    if (key != "gateway" && key != "corpus" && key != "methods" && key != "evaluation" && key != "extraction" &&
        key != "templates" && key != "run")
      throw ConfigError("unknown config section [" + key + "]");

  ExperimentPlan p;
  const json& gw = section(root, "gateway");
  reject_unknown(gw, "gateway",
                 {"provider", "script", "endpoint", "embedding_endpoint", "api_key_env", "timeout_seconds",
                  "max_attempts", "backoff_ms", "max_parallel_requests", "embed_batch_size", "embedding_model",
                  "extractor_model", "matcher_model", "executor_model", "judge_model"});
  const std::string provider = get_or<std::string>(gw, "gateway", "provider", "scripted");
  if (provider == "scripted") p.gateway.provider = ProviderKind::scripted;
  else if (provider == "http") p.gateway.provider = ProviderKind::http;
  else throw ConfigError("[gateway] provider must be \"scripted\" or \"http\"");
  p.gateway.script = resolve(base, get_or<std::string>(gw, "gateway", "script", ""));
  p.gateway.endpoint = get_or<std::string>(gw, "gateway", "endpoint", "");
  p.gateway.embedding_endpoint = get_or<std::string>(gw, "gateway", "embedding_endpoint", "");
  p.gateway.api_key_env = get_or<std::string>(gw, "gateway", "api_key_env", p.gateway.api_key_env);
  p.gateway.timeout_seconds = get_or<int>(gw, "gateway", "timeout_seconds", p.gateway.timeout_seconds);
  p.gateway.max_attempts = get_or<int>(gw, "gateway", "max_attempts", p.gateway.max_attempts);
  p.gateway.backoff_ms = get_or<int>(gw, "gateway", "backoff_ms", p.gateway.backoff_ms);
  p.gateway.max_parallel_requests =
      get_or<std::size_t>(gw, "gateway", "max_parallel_requests", p.gateway.max_parallel_requests);
  p.gateway.embed_batch_size = get_or<std::size_t>(gw, "gateway", "embed_batch_size", p.gateway.embed_batch_size);
  p.gateway.embedding_model = get_or<std::string>(gw, "gateway", "embedding_model", p.gateway.embedding_model);
  p.gateway.extractor_model = get_or<std::string>(gw, "gateway", "extractor_model", p.gateway.extractor_model);
  p.gateway.matcher_model = get_or<std::string>(gw, "gateway", "matcher_model", p.gateway.matcher_model);
  p.gateway.executor_model = get_or<std::string>(gw, "gateway", "executor_model", p.gateway.executor_model);
  p.gateway.judge_model = get_or<std::string>(gw, "gateway", "judge_model", p.gateway.judge_model);
  if (p.gateway.provider == ProviderKind::scripted && p.gateway.script.empty())
    throw ConfigError("[gateway] script is required for the scripted provider");
  if (p.gateway.provider == ProviderKind::http && p.gateway.endpoint.empty())
    throw ConfigError("[gateway] endpoint is required for the http provider");
  if (p.gateway.max_attempts < 1 || p.gateway.max_parallel_requests == 0 || p.gateway.embed_batch_size == 0)
    throw ConfigError("[gateway] limits must be positive");

  const json& corpus = section(root, "corpus");
  reject_unknown(corpus, "corpus",
                 {"domain", "domain_description", "doc", "cases", "ruleset", "extract_if_missing", "chunk_size",
                  "chunk_overlap"});
  const std::string domain = get_or<std::string>(corpus, "corpus", "domain", "");
  const auto d = parse_task_domain(domain);
  if (!d) throw ConfigError("[corpus] domain must be npov, code or nba");
  p.domain = *d;
  p.domain_description = get_or<std::string>(corpus, "corpus", "domain_description", domain);
  p.doc_path = resolve(base, get_or<std::string>(corpus, "corpus", "doc", ""));
  p.cases_path = resolve(base, get_or<std::string>(corpus, "corpus", "cases", ""));
  p.ruleset_path = resolve(base, get_or<std::string>(corpus, "corpus", "ruleset", ""));
  p.extract_if_missing = get_or<bool>(corpus, "corpus", "extract_if_missing", false);
  p.chunk_size = get_or<std::size_t>(corpus, "corpus", "chunk_size", p.chunk_size);
  p.chunk_overlap = get_or<std::size_t>(corpus, "corpus", "chunk_overlap", p.chunk_overlap);
  if (p.cases_path.empty()) throw ConfigError("[corpus] cases is required");
  if (p.chunk_size == 0 || p.chunk_overlap >= p.chunk_size)
    throw ConfigError("[corpus] chunk_size must be positive and exceed chunk_overlap");

  const json& methods = section(root, "methods");
  reject_unknown(methods, "methods",
                 {"list", "matcher_template", "factorial_similarity_k", "relevance_control", "parallelism"});
  if (auto it = methods.find("list"); it != methods.end()) {
    if (!it->is_array() || it->empty()) throw ConfigError("[methods] list must be a non-empty array");
    p.methods.clear();
    for (const auto& m : *it) {
      if (!m.is_string()) throw ConfigError("[methods] list entries must be strings");
      validate_method_id(m.get<std::string>());
      p.methods.push_back(m.get<std::string>());
    }
  }
  const std::string tmpl = get_or<std::string>(methods, "methods", "matcher_template",
                                               p.domain == TaskDomain::nba ? "nba" : "general");
  if (tmpl == "general") p.matcher_template = MatcherTemplate::general;
  else if (tmpl == "nba") p.matcher_template = MatcherTemplate::nba;
  else throw ConfigError("[methods] matcher_template must be general or nba");
  p.factorial_similarity_k = get_or<std::size_t>(methods, "methods", "factorial_similarity_k", p.factorial_similarity_k);
  p.relevance_control = get_or<bool>(methods, "methods", "relevance_control", p.relevance_control);
  p.parallelism = get_or<std::size_t>(methods, "methods", "parallelism", p.parallelism);
  if (p.factorial_similarity_k == 0 || p.parallelism == 0) throw ConfigError("[methods] limits must be positive");

  const json& ev = section(root, "evaluation");
  reject_unknown(ev, "evaluation", {"code_report", "trivial_threshold"});
  p.code_report_path = resolve(base, get_or<std::string>(ev, "evaluation", "code_report", ""));
  p.trivial_threshold = get_or<double>(ev, "evaluation", "trivial_threshold", p.trivial_threshold);

  const json& ex = section(root, "extraction");
  reject_unknown(ex, "extraction",
                 {"section_char_limit", "atomic_batch_size", "rule_batch_size", "pair_batch_size", "enabled_phases"});
  p.extraction.section_char_limit = get_or<std::size_t>(ex, "extraction", "section_char_limit", 8000);
  p.extraction.atomic_batch_size = get_or<std::size_t>(ex, "extraction", "atomic_batch_size", 20);
  p.extraction.rule_batch_size = get_or<std::size_t>(ex, "extraction", "rule_batch_size", 20);
  p.extraction.pair_batch_size = get_or<std::size_t>(ex, "extraction", "pair_batch_size", 10);
  if (auto it = ex.find("enabled_phases"); it != ex.end()) {
    if (!it->is_array()) throw ConfigError("[extraction] enabled_phases must be an array");
    p.extraction.enabled_phases.clear();
    for (const auto& v : *it) {
      if (!v.is_number_integer()) throw ConfigError("[extraction] enabled_phases entries must be integers");
      p.extraction.enabled_phases.insert(v.get<int>());
    }
  }
  try {
    p.extraction.validate();
  } catch (const InvalidParams& e) {
    throw ConfigError(std::string("[extraction] ") + e.what());
  }

  const json& tp = section(root, "templates");
  reject_unknown(tp, "templates", {"dir"});
  p.templates_dir = resolve(base, get_or<std::string>(tp, "templates", "dir", ""));

  const json& run = section(root, "run");
  reject_unknown(run, "run", {"run_dir", "seed"});
  p.run_dir = resolve(base, get_or<std::string>(run, "run", "run_dir", "run"));
  p.seed = get_or<std::int64_t>(run, "run", "seed", 0);

  return p;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  const std::filesystem::path abs = std::filesystem::absolute(path);
  return plan_from_toml(parse_toml(read_file(abs)), abs.parent_path());
}

nlohmann::ordered_json ExperimentPlan::to_json() const {
  nlohmann::ordered_json j;
  j["domain"] = to_string(domain);
  j["domain_description"] = domain_description;
  j["doc_path"] = doc_path.string();
  j["cases_path"] = cases_path.string();
  j["ruleset_path"] = ruleset_path.string();
  j["extract_if_missing"] = extract_if_missing;
  j["templates_dir"] = templates_dir.string();
  j["code_report_path"] = code_report_path.string();
  j["seed"] = seed;
  j["methods"] = methods;
  j["matcher_template"] = matcher_template == MatcherTemplate::nba ? "nba" : "general";
  j["chunk_size"] = chunk_size;
  j["chunk_overlap"] = chunk_overlap;
  j["factorial_similarity_k"] = factorial_similarity_k;
  j["relevance_control"] = relevance_control;
  j["trivial_threshold"] = trivial_threshold;
  auto& ex = j["extraction"];
  ex["section_char_limit"] = extraction.section_char_limit;
  ex["atomic_batch_size"] = extraction.atomic_batch_size;
  ex["rule_batch_size"] = extraction.rule_batch_size;
  ex["pair_batch_size"] = extraction.pair_batch_size;
  ex["enabled_phases"] = std::vector<int>(extraction.enabled_phases.begin(), extraction.enabled_phases.end());
  auto& gw = j["gateway"];
  gw["provider"] = gateway.provider == ProviderKind::http ? "http" : "scripted";
  gw["script"] = gateway.script.string();
  gw["endpoint"] = gateway.endpoint;
  gw["embedding_endpoint"] = gateway.embedding_endpoint;
  gw["embedding_model"] = gateway.embedding_model;
  gw["extractor_model"] = gateway.extractor_model;
  gw["matcher_model"] = gateway.matcher_model;
  gw["executor_model"] = gateway.executor_model;
  gw["judge_model"] = gateway.judge_model;
  return j;
}

std::shared_ptr<Provider> make_provider(const GatewayConfig& cfg) {
  if (cfg.provider == ProviderKind::scripted) return std::make_shared<ScriptedProvider>(ProviderScript::load(cfg.script));
  HttpProviderConfig h;
  h.endpoint_url = cfg.endpoint;
  h.embedding_endpoint_url = cfg.embedding_endpoint;
  if (const char* key = std::getenv(cfg.api_key_env.c_str())) h.api_key = key;
  h.timeout_seconds = cfg.timeout_seconds;
  return std::make_shared<HttpProvider>(h);
}

GatewayOptions gateway_options(const GatewayConfig& cfg, const std::filesystem::path& cache_dir) {
  GatewayOptions o;
  o.max_attempts = cfg.max_attempts;
  o.backoff_base = std::chrono::milliseconds(cfg.backoff_ms);
  o.cache_dir = cache_dir;
  o.embedding_model_id = cfg.embedding_model;
  o.embed_batch_size = cfg.embed_batch_size;
  o.max_parallel_requests = cfg.max_parallel_requests;
  return o;
}

}  // namespace tag
