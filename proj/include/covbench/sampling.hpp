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

// Uncertainty sampling: disagreement between the music and text modalities,
// and mutual uncertainty around the per-work center of the score range.

#ifndef COVBENCH_SAMPLING_HPP
#define COVBENCH_SAMPLING_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "covbench/core.hpp"
#include "covbench/error.hpp"
#include "covbench/scoring.hpp"
#include "covbench/text_io.hpp"

namespace covbench {

enum class Modality { kMusic, kText };

/// The scored candidate set C_i of one work.
class WorkScoreCloud {
 public:
  WorkScoreCloud() = default;
  WorkScoreCloud(std::string work_id, std::vector<ScoreRecord> records)
      : work_id_(std::move(work_id)), records_(std::move(records)) {
    for (const auto& r : records_) {
      if (r.work_id != work_id_) {
        throw Error(ErrorKind::kData, "score record for '" + r.candidate_video_id +
                                          "' belongs to work '" + r.work_id + "', not '" +
                                          work_id_ + "'");
      }
    }
  }

  const std::string& work_id() const { return work_id_; }
  const std::vector<ScoreRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }

  static double value(const ScoreRecord& r, Modality m) {
    return m == Modality::kMusic ? r.s_music : r.s_text;
  }

  double min(Modality m) const {
    require_non_empty();
    double v = value(records_.front(), m);
    for (const auto& r : records_) v = std::min(v, value(r, m));
    return v;
  }

  double max(Modality m) const {
    require_non_empty();
    double v = value(records_.front(), m);
    for (const auto& r : records_) v = std::max(v, value(r, m));
    return v;
  }

  /// Midpoint of the modality's range over the cloud.
  double center(Modality m) const { return 0.5 * (min(m) + max(m)); }

 private:
  void require_non_empty() const {
    if (records_.empty()) {
      throw Error(ErrorKind::kData, "empty score cloud for work '" + work_id_ + "'");
    }
  }

  std::string work_id_;
  std::vector<ScoreRecord> records_;
};

struct RankedCandidate {
  std::string video_id;
  double score = 0;
  bool operator==(const RankedCandidate& other) const = default;
};

enum class DisagreementDirection { kAudioOverText, kTextOverAudio };

namespace detail {

inline void sort_ranked(std::vector<RankedCandidate>& ranked) {
  std::sort(ranked.begin(), ranked.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.video_id < b.video_id;
  });
}

}  // namespace detail

/// Candidates whose modalities disagree in the given direction, by
/// descending difference. Equal scores qualify for neither direction.
inline std::vector<RankedCandidate> disagreement_rank(const WorkScoreCloud& cloud,
                                                      DisagreementDirection direction) {
  std::vector<RankedCandidate> ranked;
  for (const auto& r : cloud.records()) {
    double diff = direction == DisagreementDirection::kAudioOverText ? r.s_music - r.s_text
                                                                     : r.s_text - r.s_music;
    bool qualifies = direction == DisagreementDirection::kAudioOverText ? r.s_music > r.s_text
                                                                        : r.s_text > r.s_music;
    if (qualifies) ranked.push_back({r.candidate_video_id, diff});
  }
  detail::sort_ranked(ranked);
  return ranked;
}

/// (S*_m, S*_t): per-modality midpoint of min and max.
inline std::pair<double, double> mutual_center(const WorkScoreCloud& cloud) {
  return {cloud.center(Modality::kMusic), cloud.center(Modality::kText)};
}

/// Candidates by descending negative Euclidean distance to the center.
inline std::vector<RankedCandidate> mutual_rank(const WorkScoreCloud& cloud) {
  auto [cm, ct] = mutual_center(cloud);
  std::vector<RankedCandidate> ranked;
  ranked.reserve(cloud.records().size());
  for (const auto& r : cloud.records()) {
    // sqrt of the exact-as-possible square sum: equal distances stay equal,
    // which hypot does not guarantee across argument pairs.
    double dm = r.s_music - cm, dt = r.s_text - ct;
    ranked.push_back({r.candidate_video_id, -std::sqrt(dm * dm + dt * dt)});
  }
  detail::sort_ranked(ranked);
  return ranked;
}

struct GroupAssignment {
  std::string work_id;
  std::string candidate_video_id;
  SamplingGroup group = SamplingGroup::kMutualUnc;
  double rank_score = 0;
  bool operator==(const GroupAssignment& other) const = default;
};

/// Top-k per group in the order DisagrAudio, DisagrText, MutualUnc, skipping
/// candidates already taken. A DisagrAudio shortfall is taken from the
/// MutualUnc ranking as extra MutualUnc picks.
inline std::vector<GroupAssignment> select_groups(const WorkScoreCloud& cloud, std::size_t k = 3) {
  if (k == 0) throw Error(ErrorKind::kConfig, "select_groups: k must be at least 1");
  std::vector<GroupAssignment> out;
  if (cloud.empty()) return out;
  std::unordered_set<std::string> taken;

  auto take = [&](const std::vector<RankedCandidate>& ranked, SamplingGroup group,
                  std::size_t quota) {
    std::size_t n = 0;
    for (const auto& c : ranked) {
      if (n == quota) break;
      if (!taken.insert(c.video_id).second) continue;
      out.push_back({cloud.work_id(), c.video_id, group, c.score});
      ++n;
    }
    return n;
  };

  std::size_t audio =
      take(disagreement_rank(cloud, DisagreementDirection::kAudioOverText), SamplingGroup::kDisagrAudio, k);
  take(disagreement_rank(cloud, DisagreementDirection::kTextOverAudio), SamplingGroup::kDisagrText, k);
  take(mutual_rank(cloud), SamplingGroup::kMutualUnc, k + (k - audio));
  return out;
}

/// Groups score records into clouds, ordered by work_id.
inline std::vector<WorkScoreCloud> clouds_from_scores(std::span<const ScoreRecord> scores) {
  std::map<std::string, std::vector<ScoreRecord>> by_work;
  for (const auto& s : scores) {
    auto& bucket = by_work[s.work_id];
    for (const auto& existing : bucket) {
      if (existing.candidate_video_id == s.candidate_video_id) {
        throw Error(ErrorKind::kData, "duplicate score for ('" + s.work_id + "', '" +
                                          s.candidate_video_id + "')");
      }
    }
    bucket.push_back(s);
  }
  std::vector<WorkScoreCloud> clouds;
  for (auto& [work, records] : by_work) clouds.emplace_back(work, std::move(records));
  return clouds;
}

/// Concatenates per-work selections in work_id order.
inline std::vector<GroupAssignment> sample_dataset(std::span<const WorkScoreCloud> clouds,
                                                   std::size_t k = 3) {
  std::vector<const WorkScoreCloud*> ordered;
  std::set<std::string> seen;
  for (const auto& c : clouds) {
    if (!seen.insert(c.work_id()).second) {
      throw Error(ErrorKind::kData, "sample_dataset: duplicate work_id '" + c.work_id() + "'");
    }
    ordered.push_back(&c);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->work_id() < b->work_id(); });
  std::vector<GroupAssignment> out;
  for (const auto* c : ordered) {
    auto part = select_groups(*c, k);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

/// Videos sampled for more than one work, with the works in order.
inline std::map<std::string, std::vector<std::string>> cross_work_duplicates(
    std::span<const GroupAssignment> assignments) {
  std::map<std::string, std::vector<std::string>> works;
  for (const auto& a : assignments) works[a.candidate_video_id].push_back(a.work_id);
  std::map<std::string, std::vector<std::string>> dups;
  for (auto& [video, ws] : works) {
    if (ws.size() > 1) dups.emplace(video, std::move(ws));
  }
  return dups;
}

inline const std::vector<std::string>& sampled_columns() {
  static const std::vector<std::string> cols = {"work_id", "video_id", "group", "rank_score"};
  return cols;
}

inline std::string write_sampled_tsv(std::span<const GroupAssignment> rows) {
  TsvWriter w(sampled_columns());
  for (const auto& a : rows) {
    w.row({a.work_id, a.candidate_video_id, std::string(to_string(a.group)),
           format_double(a.rank_score)});
  }
  return w.str();
}

inline std::vector<GroupAssignment> read_sampled_tsv(const fs::path& path) {
  auto table = TsvTable::read(path, sampled_columns());
  std::vector<GroupAssignment> out;
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& row : table.rows()) {
    GroupAssignment a{table.get(row, "work_id"), table.get(row, "video_id"),
                      parse_sampling_group(table.get(row, "group")),
                      table.get_double(row, "rank_score")};
    if (!keys.emplace(a.work_id, a.candidate_video_id).second) {
      table.fail(row, "candidate assigned twice within work '" + a.work_id + "'");
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace covbench

#endif  // COVBENCH_SAMPLING_HPP
