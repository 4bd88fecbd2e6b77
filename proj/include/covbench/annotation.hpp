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

// Crowdsourced annotation: task construction, assignment validation, majority
// voting and the merge of expert curation into final labels.
//
// hits.csv has one row per task item (query metadata repeated on every row);
// assignments.csv has one row per worker judgment of one item.

#ifndef COVBENCH_ANNOTATION_HPP
#define COVBENCH_ANNOTATION_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "covbench/agreement.hpp"
#include "covbench/core.hpp"
#include "covbench/error.hpp"
#include "covbench/ingest.hpp"
#include "covbench/random.hpp"
#include "covbench/sampling.hpp"
#include "covbench/text_io.hpp"

namespace covbench {

inline constexpr int kDefaultVoteThreshold = 3;
inline constexpr std::int64_t kDefaultMinAssignmentS = 10;

struct QualityCheck {
  std::string video_id;
  RelevanceLabel expected = RelevanceLabel::kVersion;  // Version or NonVersion
  bool operator==(const QualityCheck& other) const = default;
};

struct Hit {
  std::string hit_id;
  std::string work_id;
  VersionRecord query_version;
  std::vector<std::string> candidates;
  QualityCheck quality_check;
  std::uint64_t permutation_seed = 0;

  /// Candidates plus the quality check, shuffled by the permutation seed.
  std::vector<std::string> presentation_order() const {
    std::vector<std::string> items = candidates;
    items.push_back(quality_check.video_id);
    Rng rng(permutation_seed);
    rng.shuffle(std::span<std::string>(items));
    return items;
  }

  bool operator==(const Hit& other) const = default;
};

struct BuildHitsResult {
  std::vector<Hit> hits;
  std::vector<std::string> warnings;
};

/// One task per work: a random seed version as query, the sampled candidates
/// and a known-answer item drawn from the seed data.
inline BuildHitsResult build_hits(std::span<const GroupAssignment> sampled,
                                  std::span<const VersionRecord> seed, std::uint64_t rng_seed,
                                  std::size_t max_candidates = 9) {
  std::map<std::string, std::vector<const VersionRecord*>> seed_by_work;
  for (const auto& v : seed) {
    if (v.source == Source::kSeed) seed_by_work[v.work_id].push_back(&v);
  }
  for (auto& [work, versions] : seed_by_work) {
    std::sort(versions.begin(), versions.end(), [](const auto* a, const auto* b) {
      return compare_version_ids(a->version_id, b->version_id) < 0;
    });
  }
  std::map<std::string, std::vector<std::string>> cands_by_work;
  for (const auto& a : sampled) cands_by_work[a.work_id].push_back(a.candidate_video_id);

  std::set<std::string> works;
  for (const auto& [w, _] : seed_by_work) works.insert(w);
  for (const auto& [w, _] : cands_by_work) works.insert(w);
  std::vector<std::string> seed_works;
  for (const auto& [w, _] : seed_by_work) seed_works.push_back(w);

  BuildHitsResult result;
  Rng rng(rng_seed);
  for (const auto& work : works) {
    auto sit = seed_by_work.find(work);
    if (sit == seed_by_work.end()) {
      throw Error(ErrorKind::kData, "build_hits: work '" + work + "' has no seed versions");
    }
    auto cit = cands_by_work.find(work);
    if (cit == cands_by_work.end() || cit->second.empty()) {
      result.warnings.push_back("work '" + work + "' has no sampled candidates; no task built");
      continue;
    }
    const auto& versions = sit->second;
    if (cit->second.size() > max_candidates) {
      throw Error(ErrorKind::kData, "build_hits: work '" + work + "' has " +
                                        std::to_string(cit->second.size()) + " candidates (max " +
                                        std::to_string(max_candidates) + ")");
    }
    Hit hit;
    hit.hit_id = "hit-" + work;
    hit.work_id = work;
    hit.candidates = cit->second;
    hit.query_version = *versions[rng.below(versions.size())];

    std::set<std::string> used(hit.candidates.begin(), hit.candidates.end());
    used.insert(hit.query_version.video_id);
    std::vector<const VersionRecord*> same;
    for (const auto* v : versions) {
      if (!used.count(v->video_id)) same.push_back(v);
    }
    std::vector<const VersionRecord*> other;
    for (const auto& w : seed_works) {
      if (w == work) continue;
      for (const auto* v : seed_by_work[w]) {
        if (!used.count(v->video_id)) other.push_back(v);
      }
    }
    bool want_version = rng.below(2) == 0;
    if (want_version && same.empty()) want_version = false;
    if (!want_version && other.empty()) want_version = !same.empty();
    if (want_version) {
      hit.quality_check = {same[rng.below(same.size())]->video_id, RelevanceLabel::kVersion};
    } else if (!other.empty()) {
      hit.quality_check = {other[rng.below(other.size())]->video_id, RelevanceLabel::kNonVersion};
    } else {
      throw Error(ErrorKind::kData, "build_hits: no known-answer item available for work '" + work + "'");
    }
    hit.permutation_seed = rng.next();
    result.hits.push_back(std::move(hit));
  }
  return result;
}

// ---------------------------------------------------------------------------
// hits.csv

inline const std::vector<std::string>& hit_columns() {
  static const std::vector<std::string> cols = {
      "hit_id",        "work_id",         "query_version_id", "query_video_id", "query_title",
      "query_performer", "permutation_seed", "position",       "video_id",       "item_title",
      "item_channel",  "is_quality_check", "expected_label"};
  return cols;
}

/// `metadata` resolves item titles/channels; unknown items get empty fields.
inline std::string write_hits_csv(std::span<const Hit> hits,
                                  std::span<const VersionRecord> metadata = {}) {
  std::unordered_map<std::string, const VersionRecord*> meta;
  for (const auto& v : metadata) meta.emplace(v.video_id, &v);
  std::string out = csv_line(hit_columns());
  for (const auto& h : hits) {
    auto order = h.presentation_order();
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const auto& vid = order[pos];
      bool qc = vid == h.quality_check.video_id;
      auto it = meta.find(vid);
      out += csv_line({h.hit_id, h.work_id, h.query_version.version_id, h.query_version.video_id,
                       h.query_version.title, h.query_version.performer,
                       std::to_string(h.permutation_seed), std::to_string(pos + 1), vid,
                       it == meta.end() ? "" : it->second->title,
                       it == meta.end() ? "" : it->second->channel, qc ? "1" : "0",
                       qc ? std::string(to_string(h.quality_check.expected)) : ""});
    }
  }
  return out;
}

inline std::vector<Hit> parse_hits_csv(std::string_view text, const std::string& source) {
  auto table = CsvTable::parse(text, hit_columns(), source);
  std::vector<Hit> hits;
  std::vector<std::map<std::size_t, std::string>> shown;  // position -> candidate
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t r = 0; r < table.size(); ++r) {
    const auto& id = table.get(r, "hit_id");
    auto [it, fresh] = by_id.emplace(id, hits.size());
    if (fresh) {
      Hit h;
      h.hit_id = id;
      h.work_id = table.get(r, "work_id");
      h.query_version.work_id = h.work_id;
      h.query_version.version_id = table.get(r, "query_version_id");
      h.query_version.video_id = table.get(r, "query_video_id");
      h.query_version.title = table.get(r, "query_title");
      h.query_version.performer = table.get(r, "query_performer");
      const auto& seed_text = table.get(r, "permutation_seed");
      auto res = std::from_chars(seed_text.data(), seed_text.data() + seed_text.size(),
                                 h.permutation_seed);
      if (seed_text.empty() || res.ec != std::errc() ||
          res.ptr != seed_text.data() + seed_text.size()) {
        table.fail(r, "bad permutation_seed");
      }
      hits.push_back(std::move(h));
      shown.emplace_back();
    }
    Hit& h = hits[it->second];
    const auto& vid = table.get(r, "video_id");
    auto pos = try_parse_int(table.get(r, "position"));
    if (!pos || *pos < 1) table.fail(r, "bad position");
    if (table.get(r, "is_quality_check") == "1") {
      if (!h.quality_check.video_id.empty()) table.fail(r, "second quality check in " + id);
      RelevanceLabel expected = parse_relevance(table.get(r, "expected_label"));
      if (expected != RelevanceLabel::kVersion && expected != RelevanceLabel::kNonVersion) {
        table.fail(r, "quality check answer must be version or non_version");
      }
      h.quality_check = {vid, expected};
    } else if (!shown[it->second].emplace(static_cast<std::size_t>(*pos), vid).second) {
      table.fail(r, "duplicate position in " + id);
    }
  }
  // The presentation shuffle hides the sampled order; regenerate the
  // permutation and invert it.
  for (std::size_t i = 0; i < hits.size(); ++i) {
    Hit& h = hits[i];
    if (h.quality_check.video_id.empty()) {
      throw Error(ErrorKind::kSchema, source + ": task " + h.hit_id + " lacks a quality check");
    }
    std::size_t n = shown[i].size() + 1;
    std::vector<std::size_t> perm(n);
    for (std::size_t j = 0; j < n; ++j) perm[j] = j;
    Rng rng(h.permutation_seed);
    rng.shuffle(std::span<std::size_t>(perm));
    // perm[pos] is the original index of the item shown at pos; n - 1 is the QC.
    std::vector<std::string> original(n - 1);
    auto next = shown[i].begin();
    for (std::size_t pos = 0; pos < n; ++pos) {
      if (perm[pos] == n - 1) continue;
      original[perm[pos]] = (next++)->second;
    }
    h.candidates = std::move(original);
  }
  return hits;
}

inline std::vector<Hit> read_hits_csv(const fs::path& path) {
  return parse_hits_csv(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Assignments

struct Assignment {
  std::string hit_id;
  std::string worker_id;
  std::map<std::string, RelevanceLabel> labels;  // video_id -> label
  std::int64_t duration_s = 0;
  std::string justification;
  bool manual_override = false;  // accept a failed quality check for payment only

  bool operator==(const Assignment& other) const = default;
};

inline const std::vector<std::string>& assignment_columns() {
  static const std::vector<std::string> cols = {"hit_id", "worker_id",     "video_id", "label",
                                                "duration_s", "justification", "override"};
  return cols;
}

inline std::string write_assignments_csv(std::span<const Assignment> assignments) {
  std::string out = csv_line(assignment_columns());
  for (const auto& a : assignments) {
    for (const auto& [vid, label] : a.labels) {
      out += csv_line({a.hit_id, a.worker_id, vid, std::string(to_string(label)),
                       std::to_string(a.duration_s), a.justification, a.manual_override ? "1" : "0"});
    }
  }
  return out;
}

/// Groups judgment rows into assignments keyed by (hit_id, worker_id), in
/// order of first appearance.
inline std::vector<Assignment> parse_assignments_csv(std::string_view text, const std::string& source) {
  auto table = CsvTable::parse(text, assignment_columns(), source);
  std::vector<Assignment> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (std::size_t r = 0; r < table.size(); ++r) {
    auto key = std::make_pair(table.get(r, "hit_id"), table.get(r, "worker_id"));
    auto dur = try_parse_int(table.get(r, "duration_s"));
    if (!dur || *dur < 0) table.fail(r, "duration_s must be a non-negative integer");
    const auto& ov = table.get(r, "override");
    if (ov != "0" && ov != "1" && !ov.empty()) table.fail(r, "override must be 0 or 1");
    auto [it, fresh] = index.emplace(key, out.size());
    if (fresh) {
      Assignment a;
      a.hit_id = key.first;
      a.worker_id = key.second;
      a.duration_s = *dur;
      a.justification = table.get(r, "justification");
      a.manual_override = ov == "1";
      out.push_back(std::move(a));
    }
    Assignment& a = out[it->second];
    if (a.duration_s != *dur || a.manual_override != (ov == "1")) {
      table.fail(r, "inconsistent duration/override within assignment");
    }
    if (a.justification.empty()) a.justification = table.get(r, "justification");
    auto label = try_parse_relevance(table.get(r, "label"));
    if (!label) table.fail(r, "unknown label '" + table.get(r, "label") + "'");
    if (!a.labels.emplace(table.get(r, "video_id"), *label).second) {
      table.fail(r, "item judged twice by the same worker");
    }
  }
  return out;
}

inline std::vector<Assignment> read_assignments_csv(const fs::path& path) {
  return parse_assignments_csv(read_file(path), path.string());
}

enum class Verdict { kAccept, kAcceptExcluded, kReject };
enum class RejectReason { kNone, kQualityFail, kTooFast };

struct ValidationResult {
  Verdict verdict = Verdict::kAccept;
  RejectReason reason = RejectReason::kNone;
  bool operator==(const ValidationResult& other) const = default;
};

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kAccept: return "accept";
    case Verdict::kAcceptExcluded: return "accept_excluded";
    case Verdict::kReject: return "reject";
  }
  return "";
}

inline std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::kNone: return "";
    case RejectReason::kQualityFail: return "quality_fail";
    case RejectReason::kTooFast: return "too_fast";
  }
  return "";
}

/// Quality check first, then minimum duration. A manual override turns a
/// failed quality check into an accepted-but-excluded assignment.
inline ValidationResult validate_assignment(const Assignment& a, const Hit& hit,
                                            std::int64_t min_duration_s = kDefaultMinAssignmentS) {
  if (a.hit_id != hit.hit_id) {
    throw Error(ErrorKind::kData, "assignment for '" + a.hit_id + "' checked against '" + hit.hit_id + "'");
  }
  std::set<std::string> items(hit.candidates.begin(), hit.candidates.end());
  items.insert(hit.quality_check.video_id);
  for (const auto& item : items) {
    if (!a.labels.count(item)) {
      throw Error(ErrorKind::kData, "assignment " + a.hit_id + "/" + a.worker_id +
                                        " has no label for item '" + item + "'");
    }
  }
  for (const auto& [vid, _] : a.labels) {
    if (!items.count(vid)) {
      throw Error(ErrorKind::kData, "assignment " + a.hit_id + "/" + a.worker_id +
                                        " labels unknown item '" + vid + "'");
    }
  }
  bool quality_ok = a.labels.at(hit.quality_check.video_id) == hit.quality_check.expected;
  if (!quality_ok && !a.manual_override) return {Verdict::kReject, RejectReason::kQualityFail};
  if (a.duration_s < min_duration_s) return {Verdict::kReject, RejectReason::kTooFast};
  if (!quality_ok) return {Verdict::kAcceptExcluded, RejectReason::kQualityFail};
  return {Verdict::kAccept, RejectReason::kNone};
}

// ---------------------------------------------------------------------------
// Voting

using Tally = std::array<int, 4>;  // indexed by rank()

struct VoteResult {
  std::optional<RelevanceLabel> final;  // nullopt = undecided
  Tally tally{};
  bool operator==(const VoteResult& other) const = default;
};

/// Final label iff some label has at least `threshold` votes and strictly more
/// than every other label.
inline VoteResult majority_vote(std::span<const RelevanceLabel> labels, int threshold = kDefaultVoteThreshold) {
  VoteResult r;
  for (auto l : labels) ++r.tally[static_cast<std::size_t>(rank(l))];
  int best = -1;
  std::size_t best_idx = 0;
  bool unique = false;
  for (std::size_t i = 0; i < r.tally.size(); ++i) {
    if (r.tally[i] > best) {
      best = r.tally[i];
      best_idx = i;
      unique = true;
    } else if (r.tally[i] == best) {
      unique = false;
    }
  }
  if (unique && best >= threshold) r.final = static_cast<RelevanceLabel>(best_idx);
  return r;
}

struct VoteRow {
  std::string work_id;
  std::string video_id;
  VoteResult vote;
  bool operator==(const VoteRow& other) const = default;
};

struct AssignmentStatus {
  std::string hit_id;
  std::string worker_id;
  ValidationResult result;
};

struct VoteCollection {
  std::vector<VoteRow> votes;
  std::vector<AssignmentStatus> statuses;
};

/// Validates every assignment and votes over each task's candidates using
/// accepted (not excluded) assignments only.
inline VoteCollection collect_votes(std::span<const Hit> hits, std::span<const Assignment> assignments,
                                    int threshold = kDefaultVoteThreshold,
                                    std::int64_t min_duration_s = kDefaultMinAssignmentS) {
  std::unordered_map<std::string, const Hit*> by_id;
  for (const auto& h : hits) {
    if (!by_id.emplace(h.hit_id, &h).second) {
      throw Error(ErrorKind::kData, "duplicate task id '" + h.hit_id + "'");
    }
  }
  VoteCollection out;
  std::unordered_map<std::string, std::vector<const Assignment*>> accepted;
  for (const auto& a : assignments) {
    auto it = by_id.find(a.hit_id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::kIdMismatch, "assignment references unknown task '" + a.hit_id + "'");
    }
    auto res = validate_assignment(a, *it->second, min_duration_s);
    out.statuses.push_back({a.hit_id, a.worker_id, res});
    if (res.verdict == Verdict::kAccept) accepted[a.hit_id].push_back(&a);
  }
  for (const auto& h : hits) {
    const auto& acc = accepted[h.hit_id];
    for (const auto& vid : h.candidates) {
      std::vector<RelevanceLabel> labels;
      for (const auto* a : acc) labels.push_back(a->labels.at(vid));
      out.votes.push_back({h.work_id, vid, majority_vote(labels, threshold)});
    }
  }
  return out;
}

inline const std::vector<std::string>& vote_columns() {
  static const std::vector<std::string> cols = {"work_id",     "video_id",       "final",
                                                "n_no_music",  "n_non_version",  "n_version",
                                                "n_match"};
  return cols;
}

inline std::string write_votes_tsv(std::span<const VoteRow> rows) {
  TsvWriter w(vote_columns());
  for (const auto& r : rows) {
    w.row({r.work_id, r.video_id,
           r.vote.final ? std::string(to_string(*r.vote.final)) : "undecided",
           std::to_string(r.vote.tally[0]), std::to_string(r.vote.tally[1]),
           std::to_string(r.vote.tally[2]), std::to_string(r.vote.tally[3])});
  }
  return w.str();
}

inline std::vector<VoteRow> parse_votes_tsv(std::string_view text, const std::string& source) {
  auto table = TsvTable::parse(text, vote_columns(), source);
  std::vector<VoteRow> out;
  for (const auto& row : table.rows()) {
    VoteRow v;
    v.work_id = table.get(row, "work_id");
    v.video_id = table.get(row, "video_id");
    if (const auto& f = table.get(row, "final"); f != "undecided") v.vote.final = parse_relevance(f);
    const char* cols[] = {"n_no_music", "n_non_version", "n_version", "n_match"};
    for (std::size_t i = 0; i < 4; ++i) {
      auto n = table.get_int(row, cols[i]);
      if (n < 0) table.fail(row, "negative tally");
      v.vote.tally[i] = static_cast<int>(n);
    }
    out.push_back(std::move(v));
  }
  return out;
}

inline std::vector<VoteRow> read_votes_tsv(const fs::path& path) {
  return parse_votes_tsv(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Expert curation

struct ExpertLabel {
  std::string video_id;
  RelevanceLabel label = RelevanceLabel::kNonVersion;
  std::string uncertainty_class;
  std::string note;
  bool operator==(const ExpertLabel& other) const = default;
};

inline const std::vector<std::string>& expert_columns() {
  static const std::vector<std::string> cols = {"video_id", "relevance", "uncertainty_class", "note"};
  return cols;
}

inline std::string write_expert_tsv(std::span<const ExpertLabel> rows) {
  TsvWriter w(expert_columns());
  for (const auto& e : rows) {
    w.row({e.video_id, std::string(to_string(e.label)), e.uncertainty_class, e.note});
  }
  return w.str();
}

inline std::vector<ExpertLabel> parse_expert_tsv(std::string_view text, const std::string& source,
                                                 const Vocabulary& vocab = Vocabulary::builtin()) {
  auto table = TsvTable::parse(text, expert_columns(), source);
  std::vector<ExpertLabel> out;
  for (const auto& row : table.rows()) {
    ExpertLabel e{table.get(row, "video_id"), parse_relevance(table.get(row, "relevance")),
                  table.get(row, "uncertainty_class"), table.get(row, "note")};
    if (!e.uncertainty_class.empty() && !vocab.find(e.uncertainty_class)) {
      table.fail(row, "unknown uncertainty class '" + e.uncertainty_class + "'");
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<ExpertLabel> read_expert_tsv(const fs::path& path,
                                                const Vocabulary& vocab = Vocabulary::builtin()) {
  return parse_expert_tsv(read_file(path), path.string(), vocab);
}

struct CurationResult {
  std::vector<LabelRecord> labels;
  std::size_t incomplete = 0;    // undecided with no expert label
  std::size_t worker_error = 0;  // expert disagreed with a decided vote
};

/// Expert labels override votes. Groups come from the sampled table when given.
inline CurationResult merge_curation(std::span<const VoteRow> votes, std::span<const ExpertLabel> expert,
                                     std::span<const GroupAssignment> sampled = {}) {
  std::unordered_map<std::string, const ExpertLabel*> by_video;
  for (const auto& e : expert) {
    auto [it, fresh] = by_video.emplace(e.video_id, &e);
    if (!fresh && !(*it->second == e)) {
      if (it->second->label != e.label || it->second->uncertainty_class != e.uncertainty_class) {
        throw Error(ErrorKind::kData, "conflicting expert rows for '" + e.video_id + "'");
      }
    }
  }
  std::set<std::string> known;
  for (const auto& v : votes) known.insert(v.video_id);
  for (const auto& [vid, _] : by_video) {
    if (!known.count(vid)) {
      throw Error(ErrorKind::kIdMismatch, "expert label for unknown video '" + vid + "'");
    }
  }
  std::map<std::pair<std::string, std::string>, SamplingGroup> groups;
  for (const auto& s : sampled) groups[{s.work_id, s.candidate_video_id}] = s.group;

  CurationResult out;
  for (const auto& v : votes) {
    LabelRecord l;
    l.work_id = v.work_id;
    l.video_id = v.video_id;
    if (auto g = groups.find({v.work_id, v.video_id}); g != groups.end()) l.group = g->second;
    auto e = by_video.find(v.video_id);
    if (e != by_video.end()) {
      l.label = e->second->label;
      l.uncertainty_class = e->second->uncertainty_class;
      if (v.vote.final && *v.vote.final != e->second->label) {
        l.origin = LabelOrigin::kExpertOverride;
        ++out.worker_error;
      } else {
        l.origin = LabelOrigin::kExpert;
      }
    } else if (v.vote.final) {
      l.label = v.vote.final;
      l.origin = LabelOrigin::kVote;
    } else {
      l.origin = LabelOrigin::kUndecided;
      ++out.incomplete;
    }
    out.labels.push_back(std::move(l));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Agreement over an annotation round

/// tau: decided worker vote vs expert label on every curated item.
/// alpha: accepted worker judgments of task candidates, raters = workers.
inline AgreementReport annotation_agreement(std::span<const Hit> hits,
                                            std::span<const Assignment> assignments,
                                            std::span<const VoteRow> votes,
                                            std::span<const ExpertLabel> expert,
                                            AlphaLevel level = AlphaLevel::kOrdinal,
                                            std::int64_t min_duration_s = kDefaultMinAssignmentS) {
  AgreementReport report;
  std::unordered_map<std::string, RelevanceLabel> expert_by_video;
  for (const auto& e : expert) expert_by_video.emplace(e.video_id, e.label);
  std::vector<RelevanceLabel> xs, ys;
  for (const auto& v : votes) {
    auto it = expert_by_video.find(v.video_id);
    if (v.vote.final && it != expert_by_video.end()) {
      xs.push_back(*v.vote.final);
      ys.push_back(it->second);
    }
  }
  report.n_tau_items = xs.size();
  if (xs.size() >= 2) {
    try {
      report.kendall_tau = kendall_tau(xs, ys);
    } catch (const Error&) {
    }
  }

  std::unordered_map<std::string, const Hit*> hit_by_id;
  for (const auto& h : hits) hit_by_id.emplace(h.hit_id, &h);
  std::map<std::string, std::size_t> rater_index;
  std::map<std::pair<std::string, std::string>, std::map<std::size_t, int>> cells;
  for (const auto& a : assignments) {
    auto it = hit_by_id.find(a.hit_id);
    if (it == hit_by_id.end()) continue;
    if (validate_assignment(a, *it->second, min_duration_s).verdict != Verdict::kAccept) continue;
    std::size_t rater = rater_index.emplace(a.worker_id, rater_index.size()).first->second;
    for (const auto& vid : it->second->candidates) {
      cells[{a.hit_id, vid}][rater] = rank(a.labels.at(vid));
    }
  }
  report.n_raters = rater_index.size();
  RatingMatrix matrix;
  for (const auto& [item, by_rater] : cells) {
    std::vector<std::optional<int>> row(rater_index.size());
    for (const auto& [r, v] : by_rater) row[r] = v;
    if (by_rater.size() >= 2) ++report.n_alpha_items;
    matrix.push_back(std::move(row));
  }
  try {
    report.krippendorff_alpha = krippendorff_alpha(matrix, level);
  } catch (const Error&) {
  }
  return report;
}

}  // namespace covbench

#endif  // COVBENCH_ANNOTATION_HPP
