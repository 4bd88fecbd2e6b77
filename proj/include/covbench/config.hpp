// Copyright 2026 The covbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Pipeline configuration: a flat `key = value` file (TOML subset) whose
// values can be overridden from the command line.

#ifndef COVBENCH_CONFIG_HPP
#define COVBENCH_CONFIG_HPP

#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "covbench/error.hpp"
#include "covbench/text_io.hpp"

namespace covbench {

/// Parses `key = value` lines. Values are quoted strings, integers, floats or
/// booleans; `#` starts a comment outside quotes. Returned values are the
/// unquoted text.
inline std::map<std::string, std::string> parse_flat_toml(std::string_view text,
                                                          const std::string& source) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorKind::kConfig, source + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t i = 0;
    auto skip_ws = [&] {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    };
    skip_ws();
    if (i == line.size() || line[i] == '#') continue;
    if (line[i] == '[') fail("tables are not supported; use flat keys");
    std::size_t key_start = i;
    while (i < line.size() && (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_' ||
                               line[i] == '-')) {
      ++i;
    }
    std::string key(line.substr(key_start, i - key_start));
    if (key.empty()) fail("expected a key");
    skip_ws();
    if (i == line.size() || line[i] != '=') fail("expected '=' after '" + key + "'");
    ++i;
    skip_ws();
    std::string value;
    if (i < line.size() && line[i] == '"') {
      ++i;
      bool closed = false;
      while (i < line.size()) {
        char c = line[i++];
        if (c == '"') {
          closed = true;
          break;
        }
        if (c == '\\') {
          if (i == line.size()) break;
          char e = line[i++];
          switch (e) {
            case 'n': value += '\n'; break;
            case 't': value += '\t'; break;
            case '"': value += '"'; break;
            case '\\': value += '\\'; break;
            default: fail(std::string("unsupported escape \\") + e);
          }
        } else {
          value += c;
        }
      }
      if (!closed) fail("unterminated string for '" + key + "'");
      skip_ws();
      if (i < line.size() && line[i] != '#') fail("trailing characters after value of '" + key + "'");
    } else {
      std::size_t v_end = line.find('#', i);
      std::string_view raw = line.substr(i, v_end == std::string_view::npos ? line.size() - i : v_end - i);
      while (!raw.empty() && (raw.back() == ' ' || raw.back() == '\t')) raw.remove_suffix(1);
      if (raw.empty()) fail("missing value for '" + key + "'");
      value = std::string(raw);
    }
    if (!out.emplace(key, value).second) fail("duplicate key '" + key + "'");
  }
  return out;
}

struct PipelineConfig {
  fs::path work_dir = "out";
  fs::path seed;         // seed versions.tsv
  fs::path crawl;        // crawl.jsonl
  fs::path embeddings;   // embeddings.f32 (index: same stem, .idx)
  fs::path assignments;  // assignments.csv
  fs::path expert;       // expert.tsv
  fs::path vocab;        // optional vocab.json
  fs::path sims;         // optional sims.f32 (ids: same stem, .ids)
  fs::path exclusions;   // optional, one video id per line
  std::string matcher = "fuzzy";  // "fuzzy" or a shell command
  std::string music_aggregation = "mean";
  std::string variant = "yt2q";
  std::string alpha_level = "ordinal";
  std::string model = "embeddings";
  std::int64_t k = 3;
  std::int64_t duration_cap_s = 600;
  std::int64_t vote_threshold = 3;
  std::int64_t min_assignment_s = 10;
  double significance = 0.01;
  std::uint64_t rng_seed = 42;
  std::int64_t port = 8080;

  fs::path embeddings_index() const { return fs::path(embeddings).replace_extension(".idx"); }
  fs::path sims_ids() const { return fs::path(sims).replace_extension(".ids"); }
  fs::path out(const std::string& name) const { return work_dir / name; }

  void validate() const {
    auto positive = [](std::int64_t v, const char* name) {
      if (v <= 0) throw Error(ErrorKind::kConfig, std::string(name) + " must be positive");
    };
    positive(k, "k");
    positive(duration_cap_s, "duration_cap_s");
    positive(vote_threshold, "vote_threshold");
    positive(min_assignment_s, "min_assignment_s");
    positive(port, "port");
    if (port > 65535) throw Error(ErrorKind::kConfig, "port must be at most 65535");
    if (!(significance > 0 && significance < 1)) {
      throw Error(ErrorKind::kConfig, "significance must lie in (0, 1)");
    }
    if (music_aggregation != "mean" && music_aggregation != "max") {
      throw Error(ErrorKind::kConfig, "music_aggregation must be 'mean' or 'max'");
    }
    if (alpha_level != "nominal" && alpha_level != "ordinal" && alpha_level != "ordinal_cumulative") {
      throw Error(ErrorKind::kConfig, "alpha_level must be nominal, ordinal or ordinal_cumulative");
    }
    if (matcher.empty()) throw Error(ErrorKind::kConfig, "matcher must not be empty");
  }

  /// Applies one key; relative paths resolve against `base`.
  void set(const std::string& key, const std::string& value, const fs::path& base = {}) {
    auto path = [&](fs::path& p) {
      fs::path v(value);
      p = (v.is_relative() && !base.empty()) ? base / v : v;
    };
    auto integer = [&](std::int64_t& dst) {
      auto v = try_parse_int(value);
      if (!v) throw Error(ErrorKind::kConfig, key + ": expected an integer, got '" + value + "'");
      dst = *v;
    };
    if (key == "work_dir") path(work_dir);
    else if (key == "seed") path(seed);
    else if (key == "crawl") path(crawl);
    else if (key == "embeddings") path(embeddings);
    else if (key == "assignments") path(assignments);
    else if (key == "expert") path(expert);
    else if (key == "vocab") path(vocab);
    else if (key == "sims") path(sims);
    else if (key == "exclusions") path(exclusions);
    else if (key == "matcher") matcher = value;
    else if (key == "music_aggregation") music_aggregation = value;
    else if (key == "variant") variant = value;
    else if (key == "alpha_level") alpha_level = value;
    else if (key == "model") model = value;
    else if (key == "k") integer(k);
    else if (key == "duration_cap_s") integer(duration_cap_s);
    else if (key == "vote_threshold") integer(vote_threshold);
    else if (key == "min_assignment_s") integer(min_assignment_s);
    else if (key == "port") integer(port);
    else if (key == "significance") {
      auto v = try_parse_double(value);
      if (!v) throw Error(ErrorKind::kConfig, "significance: expected a number, got '" + value + "'");
      significance = *v;
    } else if (key == "rng_seed") {
      auto v = try_parse_int(value);
      if (!v || *v < 0) throw Error(ErrorKind::kConfig, "rng_seed: expected a non-negative integer");
      rng_seed = static_cast<std::uint64_t>(*v);
    } else {
      throw Error(ErrorKind::kConfig, "unknown config key '" + key + "'");
    }
  }

  static PipelineConfig load(const fs::path& path) {
    PipelineConfig cfg;
    auto kv = parse_flat_toml(read_file(path), path.string());
    fs::path base = path.parent_path();
    for (const auto& [k, v] : kv) cfg.set(k, v, base);
    return cfg;
  }
};

/// Errors with kIo unless `p` names an existing regular file.
inline void require_file(const fs::path& p, std::string_view what) {
  if (p.empty()) throw Error(ErrorKind::kConfig, std::string(what) + " path is not configured");
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) {
    throw Error(ErrorKind::kIo, std::string(what) + " not found: " + p.string());
  }
}

}  // namespace covbench

#endif  // COVBENCH_CONFIG_HPP
