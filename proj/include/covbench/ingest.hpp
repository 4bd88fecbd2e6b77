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

// Crawl ingestion, query formulation, the binary embedding store and the
// tabular dataset files (versions.tsv, labels.tsv, queries.tsv).

#ifndef COVBENCH_INGEST_HPP
#define COVBENCH_INGEST_HPP

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "covbench/core.hpp"
#include "covbench/error.hpp"
#include "covbench/text_io.hpp"
#include "json.hpp"

namespace covbench {

inline constexpr std::int64_t kDefaultDurationCapS = 600;

// ---------------------------------------------------------------------------
// Crawl metadata

struct CrawlRecord {
  std::string video_id;
  std::string title;
  std::string channel;
  std::int64_t duration_s = 0;
  std::optional<std::string> upload_date;
  std::string originating_query;
  std::optional<std::string> work_id;

  bool operator==(const CrawlRecord& other) const = default;
};

struct CrawlIssue {
  std::size_t line = 0;
  std::string message;
};

struct CrawlParseResult {
  std::vector<CrawlRecord> records;
  std::vector<CrawlIssue> malformed;  // lines that are not JSON objects; skipped
  std::size_t dropped_duration = 0;
  std::size_t dropped_duplicate = 0;
};

/// Parses crawl.jsonl. Lines that are not JSON objects are skipped and
/// reported; an object missing a required field is a schema error. Keeps
/// records strictly shorter than the cap and the first occurrence per video.
inline CrawlParseResult parse_crawl(std::string_view text,
                                    std::int64_t duration_cap_s = kDefaultDurationCapS,
                                    const std::string& source = "crawl.jsonl") {
  CrawlParseResult result;
  std::unordered_set<std::string> seen;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      result.malformed.push_back({line_no, "not a JSON object"});
      continue;
    }
    auto where = [&](const char* field) {
      return source + ":" + std::to_string(line_no) + ": field '" + field + "'";
    };
    auto need_string = [&](const char* field) -> std::string {
      auto it = obj.find(field);
      if (it == obj.end()) throw Error(ErrorKind::kSchema, where(field) + " is missing");
      if (!it->is_string()) throw Error(ErrorKind::kSchema, where(field) + " must be a string");
      return it->get<std::string>();
    };
    CrawlRecord rec;
    rec.video_id = need_string("video_id");
    if (rec.video_id.empty()) throw Error(ErrorKind::kSchema, where("video_id") + " is empty");
    rec.title = need_string("title");
    rec.channel = need_string("channel");
    rec.originating_query = need_string("query");
    auto dur = obj.find("duration_s");
    if (dur == obj.end()) throw Error(ErrorKind::kSchema, where("duration_s") + " is missing");
    if (!dur->is_number_integer() || dur->get<std::int64_t>() < 0) {
      throw Error(ErrorKind::kSchema, where("duration_s") + " must be a non-negative integer");
    }
    rec.duration_s = dur->get<std::int64_t>();
    if (auto it = obj.find("upload_date"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw Error(ErrorKind::kSchema, where("upload_date") + " must be a string");
      rec.upload_date = it->get<std::string>();
    }
    if (auto it = obj.find("work_id"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw Error(ErrorKind::kSchema, where("work_id") + " must be a string");
      rec.work_id = it->get<std::string>();
    }

    if (rec.duration_s >= duration_cap_s) {
      ++result.dropped_duration;
      continue;
    }
    if (!seen.insert(rec.video_id).second) {
      ++result.dropped_duplicate;
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

inline std::string serialize_crawl(std::span<const CrawlRecord> records) {
  std::string out;
  for (const auto& rec : records) {
    nlohmann::ordered_json obj;
    obj["video_id"] = rec.video_id;
    obj["title"] = rec.title;
    obj["channel"] = rec.channel;
    obj["duration_s"] = rec.duration_s;
    if (rec.upload_date) obj["upload_date"] = *rec.upload_date;
    obj["query"] = rec.originating_query;
    if (rec.work_id) obj["work_id"] = *rec.work_id;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Query formulation

/// Ordered query templates; `{performer}` and `{title}` are substituted.
struct QueryTemplateSet {
  std::vector<std::string> templates = {"{performer} {title}", "{title} {performer}",
                                        "{performer} {title} cover"};
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string collapse_spaces(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t') {
      space = !out.empty();
    } else {
      if (space) out += ' ';
      space = false;
      out += c;
    }
  }
  return out;
}

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

}  // namespace detail

/// Expands the templates, then appends suggestions verbatim. Duplicates are
/// dropped keeping the first occurrence; "<performer> <title>" is first.
inline std::vector<std::string> formulate_queries(std::string_view performer, std::string_view title,
                                                  std::span<const std::string> suggestions,
                                                  const QueryTemplateSet& templates = {}) {
  std::string p = detail::trim(performer);
  std::string t = detail::trim(title);
  if (p.empty() || t.empty()) {
    throw Error(ErrorKind::kData, "formulate_queries: performer and title must be non-empty");
  }
  std::vector<std::string> queries;
  std::unordered_set<std::string> seen;
  auto push = [&](std::string q) {
    if (q.empty()) return;
    if (seen.insert(q).second) queries.push_back(std::move(q));
  };
  push(p + " " + t);
  for (const auto& tpl : templates.templates) {
    std::string q = detail::replace_all(tpl, "{performer}", p);
    q = detail::replace_all(std::move(q), "{title}", t);
    push(detail::collapse_spaces(q));
  }
  for (const auto& s : suggestions) push(s);
  return queries;
}

struct QueryRow {
  std::string work_id;
  std::string query;
  bool operator==(const QueryRow& other) const = default;
};

inline const std::vector<std::string>& query_columns() {
  static const std::vector<std::string> cols = {"work_id", "query"};
  return cols;
}

inline std::string write_queries_tsv(std::span<const QueryRow> rows) {
  TsvWriter w(query_columns());
  for (const auto& r : rows) w.row({r.work_id, r.query});
  return w.str();
}

inline std::vector<QueryRow> read_queries_tsv(const fs::path& path) {
  auto table = TsvTable::read(path, query_columns());
  std::vector<QueryRow> rows;
  for (const auto& row : table.rows()) {
    rows.push_back({table.get(row, "work_id"), table.get(row, "query")});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Embedding store

/// Dense row-major float32 matrix with a video_id index.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;

  EmbeddingStore(std::size_t dim, std::vector<float> values, std::vector<std::string> ids)
      : dim_(dim), values_(std::move(values)) {
    if (dim_ == 0) throw Error(ErrorKind::kSchema, "embedding dimension must be positive");
    if (values_.size() != dim_ * ids.size()) {
      throw Error(ErrorKind::kSchema, "embedding matrix size does not match index");
    }
    for (std::size_t r = 0; r < ids.size(); ++r) insert_index(ids[r], r);
    check_finite();
  }

  /// Builds a store whose rows are addressed through an explicit index.
  EmbeddingStore(std::size_t dim, std::vector<float> values,
                 std::vector<std::pair<std::string, std::size_t>> index)
      : dim_(dim), values_(std::move(values)) {
    if (dim_ == 0) throw Error(ErrorKind::kSchema, "embedding dimension must be positive");
    if (values_.size() % dim_ != 0) {
      throw Error(ErrorKind::kSchema, "embedding matrix length is not a multiple of dim");
    }
    std::size_t rows = values_.size() / dim_;
    std::vector<bool> used(rows, false);
    for (auto& [id, row] : index) {
      if (row >= rows) {
        throw Error(ErrorKind::kSchema, "embedding index: '" + id + "' references row " +
                                            std::to_string(row) + " of a " +
                                            std::to_string(rows) + "-row matrix");
      }
      if (used[row]) {
        throw Error(ErrorKind::kSchema,
                    "embedding index: row " + std::to_string(row) + " referenced twice");
      }
      used[row] = true;
      insert_index(id, row);
    }
    check_finite();
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool contains(std::string_view id) const { return index_.count(std::string(id)) != 0; }

  std::span<const float> at(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) {
      throw Error(ErrorKind::kData, "missing embedding for video '" + std::string(id) + "'");
    }
    return row(it->second);
  }

  std::span<const float> row(std::size_t r) const {
    return std::span<const float>(values_).subspan(r * dim_, dim_);
  }

  /// (video_id, row) pairs in index order.
  const std::vector<std::pair<std::string, std::size_t>>& entries() const { return ids_; }

  bool operator==(const EmbeddingStore& other) const {
    if (dim_ != other.dim_ || ids_.size() != other.ids_.size()) return false;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (ids_[i].first != other.ids_[i].first) return false;
      auto a = row(ids_[i].second);
      auto b = other.row(other.ids_[i].second);
      if (std::memcmp(a.data(), b.data(), dim_ * sizeof(float)) != 0) return false;
    }
    return true;
  }

 private:
  void insert_index(const std::string& id, std::size_t r) {
    if (!index_.emplace(id, r).second) {
      throw Error(ErrorKind::kSchema, "embedding index: duplicate id '" + id + "'");
    }
    ids_.emplace_back(id, r);
  }

  void check_finite() const {
    for (const auto& [id, r] : ids_) {
      for (float v : row(r)) {
        if (!std::isfinite(v)) {
          throw Error(ErrorKind::kData, "non-finite embedding value for '" + id + "'");
        }
      }
    }
  }

  std::size_t dim_ = 0;
  std::vector<float> values_;
  std::vector<std::pair<std::string, std::size_t>> ids_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline std::vector<float> decode_f32le(std::string_view bytes) {
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 3; b >= 0; --b) {
      bits = (bits << 8) | static_cast<unsigned char>(bytes[i * 4 + static_cast<std::size_t>(b)]);
    }
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

inline std::string encode_f32le(std::span<const float> values) {
  std::string out(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) {
      out[i * 4 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xffu);
    }
  }
  return out;
}

}  // namespace detail

/// Parses a sidecar index: each line is `video_id` (row = line number) or
/// `video_id<TAB>row`.
inline std::vector<std::pair<std::string, std::size_t>> parse_index(std::string_view text,
                                                                    const std::string& source) {
  std::vector<std::pair<std::string, std::size_t>> index;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      throw Error(ErrorKind::kSchema, source + ":" + std::to_string(line_no + 1) + ": empty id");
    }
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      index.emplace_back(std::string(line), line_no);
    } else {
      auto row = try_parse_int(line.substr(tab + 1));
      if (!row || *row < 0) {
        throw Error(ErrorKind::kSchema,
                    source + ":" + std::to_string(line_no + 1) + ": bad row number");
      }
      index.emplace_back(std::string(line.substr(0, tab)), static_cast<std::size_t>(*row));
    }
    ++line_no;
  }
  return index;
}

/// Loads `embeddings.f32` + `embeddings.idx`. With dim == 0 the dimension is
/// inferred from the byte length and the number of index lines.
inline EmbeddingStore load_embeddings(const fs::path& matrix_path, const fs::path& index_path,
                                      std::size_t dim = 0) {
  std::string bytes = read_file(matrix_path);
  auto index = parse_index(read_file(index_path), index_path.string());
  if (bytes.size() % 4 != 0) {
    throw Error(ErrorKind::kSchema, matrix_path.string() + ": length is not a multiple of 4");
  }
  std::size_t count = bytes.size() / 4;
  if (dim == 0) {
    if (index.empty() || count % index.size() != 0) {
      throw Error(ErrorKind::kSchema, matrix_path.string() + ": " + std::to_string(count) +
                                          " values do not divide into " +
                                          std::to_string(index.size()) + " rows");
    }
    dim = count / index.size();
  }
  if (count % dim != 0) {
    throw Error(ErrorKind::kSchema,
                matrix_path.string() + ": length is not a multiple of dim x 4");
  }
  if (count / dim != index.size()) {
    throw Error(ErrorKind::kSchema, matrix_path.string() + ": " + std::to_string(count / dim) +
                                        " rows but " + std::to_string(index.size()) +
                                        " index entries");
  }
  return EmbeddingStore(dim, detail::decode_f32le(bytes), std::move(index));
}

/// Writes the store in row-index order with an implicit (line = row) index.
inline void save_embeddings(const EmbeddingStore& store, const fs::path& matrix_path,
                            const fs::path& index_path) {
  std::vector<float> values;
  values.reserve(store.size() * store.dim());
  std::string idx;
  for (const auto& [id, r] : store.entries()) {
    auto row = store.row(r);
    values.insert(values.end(), row.begin(), row.end());
    idx += id;
    idx += '\n';
  }
  write_file_atomic(matrix_path, detail::encode_f32le(values));
  write_file_atomic(index_path, idx);
}

// ---------------------------------------------------------------------------
// Tabular dataset: versions.tsv + labels.tsv

enum class LabelOrigin : std::uint8_t { kVote, kExpert, kExpertOverride, kUndecided };

inline std::string_view to_string(LabelOrigin origin) {
  switch (origin) {
    case LabelOrigin::kVote: return "vote";
    case LabelOrigin::kExpert: return "expert";
    case LabelOrigin::kExpertOverride: return "expert_override";
    case LabelOrigin::kUndecided: return "undecided";
  }
  return "";
}

inline LabelOrigin parse_label_origin(std::string_view s) {
  for (auto o : {LabelOrigin::kVote, LabelOrigin::kExpert, LabelOrigin::kExpertOverride,
                 LabelOrigin::kUndecided}) {
    if (to_string(o) == s) return o;
  }
  throw Error(ErrorKind::kSchema, "unknown label origin '" + std::string(s) + "'");
}

/// Final annotation state of one candidate.
struct LabelRecord {
  std::string work_id;
  std::string video_id;
  std::optional<SamplingGroup> group;
  std::optional<RelevanceLabel> label;  // absent while undecided
  std::string uncertainty_class;        // empty when not curated
  LabelOrigin origin = LabelOrigin::kVote;

  bool operator==(const LabelRecord& other) const = default;
};

struct Dataset {
  std::vector<VersionRecord> versions;
  std::vector<LabelRecord> labels;
};

inline const std::vector<std::string>& version_columns() {
  static const std::vector<std::string> cols = {"work_id",  "version_id",  "video_id",
                                                "title",    "performer",   "channel",
                                                "duration_s", "upload_date", "source"};
  return cols;
}

inline const std::vector<std::string>& label_columns() {
  static const std::vector<std::string> cols = {"work_id", "video_id", "group",
                                                "label",   "uncertainty_class", "origin"};
  return cols;
}

inline std::string write_versions_tsv(std::span<const VersionRecord> versions) {
  TsvWriter w(version_columns());
  for (const auto& v : versions) {
    w.row({v.work_id, v.version_id, v.video_id, v.title, v.performer, v.channel,
           std::to_string(v.duration_s), v.upload_date.value_or(""), std::string(to_string(v.source))});
  }
  return w.str();
}

inline std::vector<VersionRecord> parse_versions_tsv(std::string_view text, const std::string& source) {
  auto table = TsvTable::parse(text, version_columns(), source);
  std::vector<VersionRecord> out;
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& row : table.rows()) {
    VersionRecord v;
    v.work_id = table.get(row, "work_id");
    v.version_id = table.get(row, "version_id");
    v.video_id = table.get(row, "video_id");
    v.title = table.get(row, "title");
    v.performer = table.get(row, "performer");
    v.channel = table.get(row, "channel");
    v.duration_s = table.get_int(row, "duration_s");
    if (v.duration_s < 0) table.fail(row, "negative duration_s");
    if (const auto& d = table.get(row, "upload_date"); !d.empty()) v.upload_date = d;
    v.source = parse_source(table.get(row, "source"));
    if (v.work_id.empty() || v.version_id.empty() || v.video_id.empty()) {
      table.fail(row, "work_id, version_id and video_id are required");
    }
    if (!keys.emplace(v.work_id, v.version_id).second) {
      table.fail(row, "duplicate (work_id, version_id) = (" + v.work_id + ", " + v.version_id + ")");
    }
    out.push_back(std::move(v));
  }
  return out;
}

inline std::vector<VersionRecord> read_versions_tsv(const fs::path& path) {
  return parse_versions_tsv(read_file(path), path.string());
}

inline std::string write_labels_tsv(std::span<const LabelRecord> labels) {
  TsvWriter w(label_columns());
  for (const auto& l : labels) {
    w.row({l.work_id, l.video_id, l.group ? std::string(to_string(*l.group)) : "",
           l.label ? std::string(to_string(*l.label)) : "", l.uncertainty_class,
           std::string(to_string(l.origin))});
  }
  return w.str();
}

inline std::vector<LabelRecord> parse_labels_tsv(std::string_view text, const std::string& source,
                                                 const Vocabulary& vocab = Vocabulary::builtin()) {
  auto table = TsvTable::parse(text, label_columns(), source);
  std::vector<LabelRecord> out;
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& row : table.rows()) {
    LabelRecord l;
    l.work_id = table.get(row, "work_id");
    l.video_id = table.get(row, "video_id");
    if (const auto& g = table.get(row, "group"); !g.empty()) l.group = parse_sampling_group(g);
    if (const auto& v = table.get(row, "label"); !v.empty()) l.label = parse_relevance(v);
    l.uncertainty_class = table.get(row, "uncertainty_class");
    if (!l.uncertainty_class.empty()) vocab.at(l.uncertainty_class);
    l.origin = parse_label_origin(table.get(row, "origin"));
    if (l.label.has_value() == (l.origin == LabelOrigin::kUndecided)) {
      table.fail(row, "label must be empty exactly when origin is 'undecided'");
    }
    if (!keys.emplace(l.work_id, l.video_id).second) {
      table.fail(row, "duplicate label row for (" + l.work_id + ", " + l.video_id + ")");
    }
    out.push_back(std::move(l));
  }
  return out;
}

inline std::vector<LabelRecord> read_labels_tsv(const fs::path& path,
                                                const Vocabulary& vocab = Vocabulary::builtin()) {
  return parse_labels_tsv(read_file(path), path.string(), vocab);
}

/// Reads `<dir>/versions.tsv` and, when present, `<dir>/labels.tsv`.
inline Dataset read_dataset(const fs::path& dir, const Vocabulary& vocab = Vocabulary::builtin()) {
  Dataset ds;
  ds.versions = read_versions_tsv(dir / "versions.tsv");
  if (fs::exists(dir / "labels.tsv")) ds.labels = read_labels_tsv(dir / "labels.tsv", vocab);
  return ds;
}

inline void write_dataset(const fs::path& dir, const Dataset& ds) {
  fs::create_directories(dir);
  write_file_atomic(dir / "versions.tsv", write_versions_tsv(ds.versions));
  write_file_atomic(dir / "labels.tsv", write_labels_tsv(ds.labels));
}

/// Turns crawl records into candidate versions. A record's work comes from its
/// own work_id field or from the work that issued its originating query.
inline std::vector<VersionRecord> crawl_to_candidates(std::span<const CrawlRecord> crawl,
                                                      std::span<const QueryRow> queries) {
  std::unordered_map<std::string, std::string> query_work;
  for (const auto& q : queries) query_work.emplace(q.query, q.work_id);
  std::vector<VersionRecord> out;
  out.reserve(crawl.size());
  for (const auto& rec : crawl) {
    std::string work;
    if (rec.work_id) {
      work = *rec.work_id;
    } else if (auto it = query_work.find(rec.originating_query); it != query_work.end()) {
      work = it->second;
    } else {
      throw Error(ErrorKind::kData, "crawl record '" + rec.video_id +
                                        "' has unknown originating query '" +
                                        rec.originating_query + "'");
    }
    VersionRecord v;
    v.work_id = std::move(work);
    v.version_id = rec.video_id;
    v.video_id = rec.video_id;
    v.title = rec.title;
    v.channel = rec.channel;
    v.duration_s = rec.duration_s;
    v.upload_date = rec.upload_date;
    v.source = Source::kWebCandidate;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace covbench

#endif  // COVBENCH_INGEST_HPP
