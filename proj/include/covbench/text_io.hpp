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

// Tabular text formats (TSV with escaping, RFC 4180 CSV), number formatting,
// atomic file replacement and advisory lock files.

#ifndef COVBENCH_TEXT_IO_HPP
#define COVBENCH_TEXT_IO_HPP

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <vector>

#include "covbench/error.hpp"

namespace covbench {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Numbers

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

/// Fixed-point rendering for human-readable reports.
inline std::string format_fixed(double value, int digits) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

inline std::optional<double> try_parse_double(std::string_view s) {
  double value = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return value;
}

inline std::optional<std::int64_t> try_parse_int(std::string_view s) {
  std::int64_t value = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return value;
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::kIo, "read failed for '" + path.string() + "'");
  return data;
}

/// Writes `data` to a sibling temp file, fsyncs it and renames it over `path`.
inline void write_file_atomic(const fs::path& path, std::string_view data) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error(ErrorKind::kIo, "cannot create '" + tmp.string() + "'");
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      ::close(fd);
      fs::remove(tmp);
      throw Error(ErrorKind::kIo, "write failed for '" + tmp.string() + "'");
    }
    off += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) {
    fs::remove(tmp);
    throw Error(ErrorKind::kIo, "sync failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::kIo, "cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

/// Advisory lock: holds `<path>.lock`, created exclusively, for its lifetime.
class FileLock {
 public:
  explicit FileLock(const fs::path& path) : lock_path_(path) {
    lock_path_ += ".lock";
    int fd = ::open(lock_path_.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0644);
    if (fd < 0) {
      throw Error(ErrorKind::kServe, "lock held: '" + lock_path_.string() + "' exists");
    }
    std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;
  ~FileLock() {
    std::error_code ec;
    fs::remove(lock_path_, ec);
  }

  const fs::path& lock_path() const { return lock_path_; }

 private:
  fs::path lock_path_;
};

// ---------------------------------------------------------------------------
// TSV

inline std::string tsv_escape(std::string_view field) {
  std::string out;
  out.reserve(field.size());
  for (char c : field) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string tsv_unescape(std::string_view field) {
  std::string out;
  out.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] == '\\' && i + 1 < field.size()) {
      char next = field[++i];
      switch (next) {
        case 't': out += '\t'; break;
        case 'n': out += '\n'; break;
        case 'r': out += '\r'; break;
        case '\\': out += '\\'; break;
        default:
          out += '\\';
          out += next;
      }
    } else {
      out += field[i];
    }
  }
  return out;
}

inline std::vector<std::string_view> split_view(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

/// A parsed TSV file whose header must match an expected column list exactly.
class TsvTable {
 public:
  struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
  };

  static TsvTable parse(std::string_view text, const std::vector<std::string>& expected,
                        const std::string& source) {
    TsvTable table;
    table.source_ = source;
    table.columns_ = expected;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool have_header = false;
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!have_header) {
        table.check_header(split_view(line, '\t'));
        have_header = true;
        continue;
      }
      if (line.empty()) continue;
      auto parts = split_view(line, '\t');
      if (parts.size() != expected.size()) {
        throw Error(ErrorKind::kSchema, source + ":" + std::to_string(line_no) + ": expected " +
                                            std::to_string(expected.size()) + " fields, got " +
                                            std::to_string(parts.size()));
      }
      Row row;
      row.line = line_no;
      row.fields.reserve(parts.size());
      for (auto p : parts) row.fields.push_back(tsv_unescape(p));
      table.rows_.push_back(std::move(row));
    }
    if (!have_header) {
      throw Error(ErrorKind::kSchema, source + ": missing header row");
    }
    return table;
  }

  static TsvTable read(const fs::path& path, const std::vector<std::string>& expected) {
    return parse(read_file(path), expected, path.string());
  }

  const std::vector<Row>& rows() const { return rows_; }
  const std::string& source() const { return source_; }

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i] == name) return i;
    }
    throw Error(ErrorKind::kSchema, source_ + ": no column '" + std::string(name) + "'");
  }

  const std::string& get(const Row& row, std::string_view name) const {
    return row.fields[column(name)];
  }

  [[noreturn]] void fail(const Row& row, const std::string& message) const {
    throw Error(ErrorKind::kSchema, source_ + ":" + std::to_string(row.line) + ": " + message);
  }

  double get_double(const Row& row, std::string_view name) const {
    auto v = try_parse_double(get(row, name));
    if (!v) fail(row, "column '" + std::string(name) + "' is not a number");
    return *v;
  }

  std::int64_t get_int(const Row& row, std::string_view name) const {
    auto v = try_parse_int(get(row, name));
    if (!v) fail(row, "column '" + std::string(name) + "' is not an integer");
    return *v;
  }

 private:
  void check_header(const std::vector<std::string_view>& header) const {
    std::vector<std::string> unknown;
    std::vector<std::string> missing;
    for (auto h : header) {
      if (std::find(columns_.begin(), columns_.end(), h) == columns_.end()) {
        unknown.emplace_back(h);
      }
    }
    for (const auto& c : columns_) {
      if (std::find(header.begin(), header.end(), c) == header.end()) missing.push_back(c);
    }
    if (!unknown.empty() || !missing.empty()) {
      std::string msg = source_ + ": header mismatch;";
      if (!unknown.empty()) {
        msg += " unknown columns:";
        for (const auto& u : unknown) msg += " " + u;
        msg += ";";
      }
      if (!missing.empty()) {
        msg += " missing columns:";
        for (const auto& m : missing) msg += " " + m;
      }
      throw Error(ErrorKind::kSchema, msg);
    }
    bool same_order = header.size() == columns_.size();
    for (std::size_t i = 0; same_order && i < header.size(); ++i) {
      same_order = header[i] == columns_[i];
    }
    if (!same_order) {
      throw Error(ErrorKind::kSchema, source_ + ": columns out of order");
    }
  }

  std::string source_;
  std::vector<std::string> columns_;
  std::vector<Row> rows_;
};

class TsvWriter {
 public:
  explicit TsvWriter(const std::vector<std::string>& columns) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ += '\t';
      out_ += columns[i];
    }
    out_ += '\n';
    width_ = columns.size();
  }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != width_) {
      throw Error(ErrorKind::kSchema, "tsv writer: row width mismatch");
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ += '\t';
      out_ += tsv_escape(fields[i]);
    }
    out_ += '\n';
  }

  const std::string& str() const { return out_; }

 private:
  std::string out_;
  std::size_t width_ = 0;
};

// ---------------------------------------------------------------------------
// CSV (RFC 4180)

inline std::string csv_quote(std::string_view field) {
  bool needs = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_quote(fields[i]);
  }
  out += "\r\n";
  return out;
}

/// Parses CSV text into records. Quoted fields may span lines.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text,
                                                       const std::string& source) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started || !field.empty()) {
          throw Error(ErrorKind::kSchema,
                      source + ":" + std::to_string(line) + ": stray quote in field");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',': end_field(); break;
      case '\r': break;
      case '\n':
        end_record();
        ++line;
        break;
      default: field += c;
    }
  }
  if (in_quotes) throw Error(ErrorKind::kSchema, source + ": unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

/// CSV records keyed by a required header. Extra columns are ignored, which
/// keeps crowdsourcing exports with additional platform columns readable.
class CsvTable {
 public:
  static CsvTable parse(std::string_view text, const std::vector<std::string>& required,
                        const std::string& source) {
    CsvTable table;
    table.source_ = source;
    auto records = parse_csv(text, source);
    if (records.empty()) throw Error(ErrorKind::kSchema, source + ": missing header row");
    const auto& header = records.front();
    std::vector<std::string> missing;
    for (const auto& name : required) {
      auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) {
        missing.push_back(name);
      } else {
        table.index_[name] = static_cast<std::size_t>(it - header.begin());
      }
    }
    if (!missing.empty()) {
      std::string msg = source + ": missing columns:";
      for (const auto& m : missing) msg += " " + m;
      throw Error(ErrorKind::kSchema, msg);
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
      if (records[r].size() != header.size()) {
        throw Error(ErrorKind::kSchema, source + ": record " + std::to_string(r) +
                                            " has " + std::to_string(records[r].size()) +
                                            " fields, header has " +
                                            std::to_string(header.size()));
      }
      table.rows_.push_back(std::move(records[r]));
    }
    return table;
  }

  std::size_t size() const { return rows_.size(); }
  const std::string& source() const { return source_; }

  const std::string& get(std::size_t row, const std::string& name) const {
    return rows_[row][index_.at(name)];
  }

  [[noreturn]] void fail(std::size_t row, const std::string& message) const {
    throw Error(ErrorKind::kSchema,
                source_ + ": record " + std::to_string(row + 1) + ": " + message);
  }

 private:
  std::string source_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace covbench

#endif  // COVBENCH_TEXT_IO_HPP
