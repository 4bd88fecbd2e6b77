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

// Per-candidate aggregation of music similarity (mean cosine over the work's
// query versions) and text matching confidence (max over the same pairs).

#ifndef COVBENCH_SCORING_HPP
#define COVBENCH_SCORING_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdlib>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "covbench/core.hpp"
#include "covbench/error.hpp"
#include "covbench/fuzzy.hpp"
#include "covbench/ingest.hpp"
#include "covbench/text_io.hpp"

namespace covbench {

struct ScoreRecord {
  std::string work_id;
  std::string candidate_video_id;
  double s_music = 0;  // mean cosine, [-1, 1]
  double s_text = 0;   // max confidence, [0, 1]

  bool operator==(const ScoreRecord& other) const = default;
};

inline void validate(const ScoreRecord& r) {
  if (!std::isfinite(r.s_music) || r.s_music < -1.0 || r.s_music > 1.0) {
    throw Error(ErrorKind::kData, "s_music out of range for '" + r.candidate_video_id + "'");
  }
  if (!std::isfinite(r.s_text) || r.s_text < 0.0 || r.s_text > 1.0) {
    throw Error(ErrorKind::kData, "s_text out of range for '" + r.candidate_video_id + "'");
  }
}

/// The query versions Q_i of one work.
struct WorkQuerySet {
  std::string work_id;
  std::vector<VersionRecord> queries;

  void check() const {
    if (queries.empty()) {
      throw Error(ErrorKind::kData, "work '" + work_id + "' has no query versions");
    }
    for (const auto& q : queries) {
      if (q.work_id != work_id) {
        throw Error(ErrorKind::kData, "query version '" + q.video_id + "' belongs to work '" +
                                          q.work_id + "', not '" + work_id + "'");
      }
    }
  }
};

template <typename T, typename U>
double cosine(std::span<const T> u, std::span<const U> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorKind::kData, "cosine: dimension mismatch (" + std::to_string(u.size()) +
                                      " vs " + std::to_string(v.size()) + ")");
  }
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double a = static_cast<double>(u[i]);
    double b = static_cast<double>(v[i]);
    dot += a * b;
    nu += a * a;
    nv += b * b;
  }
  if (nu == 0 || nv == 0) throw Error(ErrorKind::kData, "cosine: zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

inline double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  return cosine(std::span<const double>(u), std::span<const double>(v));
}

enum class MusicAggregation { kMean, kMax };

/// Mean (or max) cosine between the candidate and every query version.
inline double aggregate_music(std::string_view candidate_video_id, const WorkQuerySet& work,
                              const EmbeddingStore& store,
                              MusicAggregation agg = MusicAggregation::kMean) {
  work.check();
  auto cand = store.at(candidate_video_id);
  double sum = 0;
  double best = -1.0;
  for (const auto& q : work.queries) {
    double c = cosine(cand, store.at(q.video_id));
    sum += c;
    best = std::max(best, c);
  }
  if (agg == MusicAggregation::kMax) return best;
  return std::clamp(sum / static_cast<double>(work.queries.size()), -1.0, 1.0);
}

/// Metadata handed to text matchers: titles and channel/performer only.
struct MatchPair {
  std::string cand_title;
  std::string cand_channel;
  std::string query_title;
  std::string query_performer;
};

/// Batch matcher: one confidence in [0, 1] per input pair, same order.
using TextMatcher = std::function<std::vector<double>(std::span<const MatchPair>)>;

/// Built-in matcher: token set ratio of "title channel" vs "performer title".
inline std::vector<double> fuzzy_matcher(std::span<const MatchPair> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back(fuzzy_match(p.cand_title + " " + p.cand_channel,
                              p.query_performer + " " + p.query_title));
  }
  return out;
}

inline MatchPair make_pair_meta(const VersionRecord& candidate, const VersionRecord& query) {
  return {candidate.title, candidate.channel, query.title, query.performer};
}

namespace detail {

inline std::vector<double> checked_matcher_call(const TextMatcher& matcher,
                                                std::span<const MatchPair> pairs,
                                                const std::vector<std::string>& pair_ids) {
  std::vector<double> conf = matcher(pairs);
  if (conf.size() != pairs.size()) {
    throw Error(ErrorKind::kMatcher, "matcher returned " + std::to_string(conf.size()) +
                                         " confidences for " + std::to_string(pairs.size()) +
                                         " pairs");
  }
  for (std::size_t i = 0; i < conf.size(); ++i) {
    if (!std::isfinite(conf[i]) || conf[i] < 0.0 || conf[i] > 1.0) {
      throw Error(ErrorKind::kMatcher, "matcher confidence " + format_double(conf[i]) +
                                           " out of [0, 1] for pair " + pair_ids[i]);
    }
  }
  return conf;
}

}  // namespace detail

/// Maximum matching confidence between the candidate and any query version.
inline double aggregate_text(const VersionRecord& candidate, const WorkQuerySet& work,
                             const TextMatcher& matcher) {
  work.check();
  std::vector<MatchPair> pairs;
  std::vector<std::string> ids;
  for (const auto& q : work.queries) {
    pairs.push_back(make_pair_meta(candidate, q));
    ids.push_back("(" + candidate.video_id + ", " + q.video_id + ")");
  }
  auto conf = detail::checked_matcher_call(matcher, pairs, ids);
  return *std::max_element(conf.begin(), conf.end());
}

// ---------------------------------------------------------------------------
// External matcher subprocess

inline const std::vector<std::string>& match_pair_columns() {
  static const std::vector<std::string> cols = {"cand_title", "cand_channel", "query_title",
                                                "query_performer"};
  return cols;
}

inline std::string write_pairs_tsv(std::span<const MatchPair> pairs) {
  TsvWriter w(match_pair_columns());
  for (const auto& p : pairs) w.row({p.cand_title, p.cand_channel, p.query_title, p.query_performer});
  return w.str();
}

inline std::vector<double> parse_confidences(std::string_view text, const std::string& source) {
  std::vector<double> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) continue;
    auto v = try_parse_double(line);
    if (!v) {
      throw Error(ErrorKind::kMatcher,
                  source + ":" + std::to_string(line_no) + ": not a number: '" + std::string(line) + "'");
    }
    if (!std::isfinite(*v) || *v < 0.0 || *v > 1.0) {
      throw Error(ErrorKind::kMatcher, source + ":" + std::to_string(line_no) + ": confidence " +
                                           std::string(line) + " outside [0, 1]");
    }
    out.push_back(*v);
  }
  return out;
}

/// Runs `command` with the pairs file on stdin and captures one confidence per
/// data row from stdout into `confidences_path`.
inline std::vector<double> run_external_matcher(const std::string& command,
                                                const fs::path& pairs_path,
                                                const fs::path& confidences_path) {
  auto table = TsvTable::read(pairs_path, match_pair_columns());
  std::string quoted_in = "'" + pairs_path.string() + "'";
  std::string quoted_out = "'" + confidences_path.string() + "'";
  std::string full = "(" + command + ") < " + quoted_in + " > " + quoted_out;
  int status = std::system(full.c_str());
  if (status != 0) {
    throw Error(ErrorKind::kMatcher,
                "matcher command failed with status " + std::to_string(status) + ": " + command);
  }
  auto conf = parse_confidences(read_file(confidences_path), confidences_path.string());
  if (conf.size() != table.rows().size()) {
    throw Error(ErrorKind::kMatcher, "matcher returned " + std::to_string(conf.size()) +
                                         " confidences for " +
                                         std::to_string(table.rows().size()) + " pairs");
  }
  return conf;
}

/// TextMatcher backed by an external command, exchanging files in `work_dir`.
inline TextMatcher external_matcher(std::string command, fs::path work_dir) {
  return [command = std::move(command), work_dir = std::move(work_dir)](
             std::span<const MatchPair> pairs) {
    fs::create_directories(work_dir);
    fs::path in = work_dir / "matcher_pairs.tsv";
    fs::path out = work_dir / "matcher_confidences.txt";
    write_file_atomic(in, write_pairs_tsv(pairs));
    auto conf = run_external_matcher(command, in, out);
    fs::remove(in);
    fs::remove(out);
    return conf;
  };
}

// ---------------------------------------------------------------------------

/// Scores every candidate of one work; one matcher call covers all pairs.
inline std::vector<ScoreRecord> score_work(const WorkQuerySet& work,
                                           std::span<const VersionRecord> candidates,
                                           const EmbeddingStore& store, const TextMatcher& matcher,
                                           MusicAggregation agg = MusicAggregation::kMean) {
  work.check();
  if (candidates.empty()) {
    throw Error(ErrorKind::kData, "score_work: work '" + work.work_id + "' has no candidates");
  }
  std::vector<MatchPair> pairs;
  std::vector<std::string> ids;
  pairs.reserve(candidates.size() * work.queries.size());
  for (const auto& c : candidates) {
    for (const auto& q : work.queries) {
      pairs.push_back(make_pair_meta(c, q));
      ids.push_back("(" + c.video_id + ", " + q.video_id + ")");
    }
  }
  auto conf = detail::checked_matcher_call(matcher, pairs, ids);

  std::vector<ScoreRecord> out;
  out.reserve(candidates.size());
  const std::size_t nq = work.queries.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    ScoreRecord r;
    r.work_id = work.work_id;
    r.candidate_video_id = candidates[i].video_id;
    r.s_music = aggregate_music(candidates[i].video_id, work, store, agg);
    r.s_text = *std::max_element(conf.begin() + static_cast<std::ptrdiff_t>(i * nq),
                                 conf.begin() + static_cast<std::ptrdiff_t>((i + 1) * nq));
    validate(r);
    out.push_back(std::move(r));
  }
  return out;
}

inline const std::vector<std::string>& score_columns() {
  static const std::vector<std::string> cols = {"work_id", "video_id", "s_music", "s_text"};
  return cols;
}

inline std::string write_scores_tsv(std::span<const ScoreRecord> scores) {
  TsvWriter w(score_columns());
  for (const auto& s : scores) {
    w.row({s.work_id, s.candidate_video_id, format_double(s.s_music), format_double(s.s_text)});
  }
  return w.str();
}

inline std::vector<ScoreRecord> parse_scores_tsv(std::string_view text, const std::string& source) {
  auto table = TsvTable::parse(text, score_columns(), source);
  std::vector<ScoreRecord> out;
  for (const auto& row : table.rows()) {
    ScoreRecord r{table.get(row, "work_id"), table.get(row, "video_id"),
                  table.get_double(row, "s_music"), table.get_double(row, "s_text")};
    try {
      validate(r);
    } catch (const Error& e) {
      table.fail(row, e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<ScoreRecord> read_scores_tsv(const fs::path& path) {
  return parse_scores_tsv(read_file(path), path.string());
}

}  // namespace covbench

#endif  // COVBENCH_SCORING_HPP
