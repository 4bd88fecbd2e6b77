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

// Benchmark assembly, retrieval metrics (MAP, MR1) over a similarity matrix,
// pair-class similarity distributions and per-uncertainty-class tests.

#ifndef COVBENCH_EVALUATION_HPP
#define COVBENCH_EVALUATION_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "covbench/core.hpp"
#include "covbench/error.hpp"
#include "covbench/ingest.hpp"
#include "covbench/scoring.hpp"
#include "covbench/stats.hpp"
#include "covbench/text_io.hpp"

namespace covbench {

inline constexpr double kDefaultSignificance = 0.01;

// ---------------------------------------------------------------------------
// Benchmark sets

enum class BenchmarkVariant { kYt2Q, kYtAllQ, kCustom };

inline std::string_view to_string(BenchmarkVariant v) {
  switch (v) {
    case BenchmarkVariant::kYt2Q: return "yt2q";
    case BenchmarkVariant::kYtAllQ: return "ytallq";
    case BenchmarkVariant::kCustom: return "custom";
  }
  return "";
}

inline BenchmarkVariant parse_benchmark_variant(std::string_view s) {
  for (auto v : {BenchmarkVariant::kYt2Q, BenchmarkVariant::kYtAllQ, BenchmarkVariant::kCustom}) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorKind::kConfig, "unknown benchmark variant '" + std::string(s) + "'");
}

struct BenchmarkMember {
  VersionRecord record;
  RelevanceLabel label = RelevanceLabel::kVersion;  // seed versions are Version
  std::string uncertainty_class;

  bool is_seed() const { return record.source == Source::kSeed; }
  bool operator==(const BenchmarkMember& other) const = default;
};

struct BenchmarkSet {
  BenchmarkVariant variant = BenchmarkVariant::kCustom;
  std::vector<BenchmarkMember> members;
  std::vector<std::string> exclusions_applied;
};

/// Builds a benchmark from annotated candidates and seed versions.
///
/// Yt2Q adds each work's annotation query plus the lowest-id seed version
/// other than the query; YtAllQ adds every seed version. Ids in `exclusions`
/// (video ids) are removed everywhere. Candidates without a final label are
/// left out and listed in exclusions_applied.
inline BenchmarkSet assemble_benchmark(std::span<const VersionRecord> candidates,
                                       std::span<const LabelRecord> labels,
                                       std::span<const VersionRecord> seed,
                                       const std::map<std::string, std::string>& query_by_work,
                                       BenchmarkVariant variant,
                                       const std::set<std::string>& exclusions = {}) {
  BenchmarkSet set;
  set.variant = variant;
  std::map<std::pair<std::string, std::string>, const VersionRecord*> cand_meta;
  for (const auto& c : candidates) cand_meta[{c.work_id, c.video_id}] = &c;
  std::map<std::string, std::vector<const VersionRecord*>> seed_by_work;
  for (const auto& s : seed) {
    if (s.source == Source::kSeed) seed_by_work[s.work_id].push_back(&s);
  }
  for (auto& [w, vs] : seed_by_work) {
    std::sort(vs.begin(), vs.end(), [](const auto* a, const auto* b) {
      return compare_version_ids(a->version_id, b->version_id) < 0;
    });
  }

  std::set<std::string> works;
  std::vector<BenchmarkMember> yt;
  for (const auto& l : labels) {
    if (exclusions.count(l.video_id)) {
      set.exclusions_applied.push_back(l.video_id + ": excluded by list");
      continue;
    }
    if (!l.label) {
      set.exclusions_applied.push_back(l.video_id + ": no final label");
      continue;
    }
    auto it = cand_meta.find({l.work_id, l.video_id});
    if (it == cand_meta.end()) {
      throw Error(ErrorKind::kIdMismatch, "labeled candidate '" + l.video_id + "' of work '" +
                                              l.work_id + "' has no version record");
    }
    yt.push_back({*it->second, *l.label, l.uncertainty_class});
    works.insert(l.work_id);
  }

  std::vector<BenchmarkMember> seeds;
  std::vector<std::string> missing;
  std::set<std::string> query_ids;
  if (variant != BenchmarkVariant::kCustom) {
    for (const auto& w : works) {
      auto sit = seed_by_work.find(w);
      if (sit == seed_by_work.end()) {
        missing.push_back(w);
        continue;
      }
      std::vector<const VersionRecord*> kept;
      for (const auto* v : sit->second) {
        if (exclusions.count(v->video_id)) {
          set.exclusions_applied.push_back(v->video_id + ": excluded by list");
        } else {
          kept.push_back(v);
        }
      }
      if (kept.empty()) {
        missing.push_back(w);
        continue;
      }
      if (variant == BenchmarkVariant::kYtAllQ) {
        for (const auto* v : kept) seeds.push_back({*v, RelevanceLabel::kVersion, ""});
        continue;
      }
      std::string query;
      if (auto q = query_by_work.find(w); q != query_by_work.end()) query = q->second;
      const VersionRecord* query_rec = nullptr;
      const VersionRecord* anchor = nullptr;
      for (const auto* v : kept) {
        if (v->video_id == query) {
          query_rec = v;
        } else if (!anchor) {
          anchor = v;
        }
      }
      if (query_rec) {
        seeds.push_back({*query_rec, RelevanceLabel::kVersion, ""});
        query_ids.insert(query_rec->video_id);
      }
      if (anchor) seeds.push_back({*anchor, RelevanceLabel::kVersion, ""});
    }
  }
  if (!missing.empty()) {
    std::string msg = "works without usable seed versions:";
    for (const auto& w : missing) msg += " " + w;
    throw Error(ErrorKind::kData, msg);
  }

  set.members.reserve(seeds.size() + yt.size());
  for (auto& m : seeds) set.members.push_back(std::move(m));
  for (auto& m : yt) set.members.push_back(std::move(m));
  std::stable_sort(set.members.begin(), set.members.end(),
                   [](const BenchmarkMember& a, const BenchmarkMember& b) {
                     if (a.record.work_id != b.record.work_id) return a.record.work_id < b.record.work_id;
                     if (a.is_seed() != b.is_seed()) return a.is_seed();
                     if (a.is_seed()) {
                       return compare_version_ids(a.record.version_id, b.record.version_id) < 0;
                     }
                     return a.record.video_id < b.record.video_id;
                   });

  std::map<std::string, std::string> seen;
  std::vector<std::string> dups;
  for (const auto& m : set.members) {
    auto [it, fresh] = seen.emplace(m.record.video_id, m.record.work_id);
    if (!fresh) dups.push_back(m.record.video_id);
  }
  if (!dups.empty()) {
    std::string msg = "video ids appear more than once in the benchmark:";
    for (const auto& d : dups) msg += " " + d;
    throw Error(ErrorKind::kData, msg);
  }

  if (variant != BenchmarkVariant::kCustom) {
    std::map<std::string, int> relevant;
    for (const auto& m : set.members) {
      if (is_relevant(m.label) && !query_ids.count(m.record.video_id)) ++relevant[m.record.work_id];
    }
    std::vector<std::string> lacking;
    for (const auto& w : works) {
      if (relevant[w] == 0) lacking.push_back(w);
    }
    if (!lacking.empty()) {
      std::string msg = "works without a relevant member besides the query:";
      for (const auto& w : lacking) msg += " " + w;
      throw Error(ErrorKind::kData, msg);
    }
  }
  return set;
}

inline const std::vector<std::string>& benchmark_columns() {
  static const std::vector<std::string> cols = {
      "work_id",    "version_id",  "video_id", "title", "performer",        "channel",
      "duration_s", "upload_date", "source",   "label", "uncertainty_class"};
  return cols;
}

inline std::string write_benchmark_tsv(const BenchmarkSet& set) {
  TsvWriter w(benchmark_columns());
  for (const auto& m : set.members) {
    const auto& v = m.record;
    w.row({v.work_id, v.version_id, v.video_id, v.title, v.performer, v.channel,
           std::to_string(v.duration_s), v.upload_date.value_or(""), std::string(to_string(v.source)),
           std::string(to_string(m.label)), m.uncertainty_class});
  }
  return w.str();
}

inline BenchmarkSet parse_benchmark_tsv(std::string_view text, const std::string& source) {
  auto table = TsvTable::parse(text, benchmark_columns(), source);
  BenchmarkSet set;
  for (const auto& row : table.rows()) {
    BenchmarkMember m;
    m.record.work_id = table.get(row, "work_id");
    m.record.version_id = table.get(row, "version_id");
    m.record.video_id = table.get(row, "video_id");
    m.record.title = table.get(row, "title");
    m.record.performer = table.get(row, "performer");
    m.record.channel = table.get(row, "channel");
    m.record.duration_s = table.get_int(row, "duration_s");
    if (const auto& d = table.get(row, "upload_date"); !d.empty()) m.record.upload_date = d;
    m.record.source = parse_source(table.get(row, "source"));
    m.label = parse_relevance(table.get(row, "label"));
    m.uncertainty_class = table.get(row, "uncertainty_class");
    set.members.push_back(std::move(m));
  }
  return set;
}

inline BenchmarkSet read_benchmark_tsv(const fs::path& path) {
  return parse_benchmark_tsv(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Similarity matrices

class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::vector<std::string> ids, std::vector<double> values)
      : ids_(std::move(ids)), values_(std::move(values)) {
    const std::size_t n = ids_.size();
    if (values_.size() != n * n) {
      throw Error(ErrorKind::kSchema, "similarity matrix is not " + std::to_string(n) + "x" +
                                          std::to_string(n));
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : ids_) {
      if (!seen.insert(id).second) {
        throw Error(ErrorKind::kSchema, "similarity matrix: duplicate id '" + id + "'");
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double v = values_[i * n + j];
        if (!std::isfinite(v)) {
          throw Error(ErrorKind::kData, "similarity matrix: non-finite value at (" + ids_[i] +
                                            ", " + ids_[j] + ")");
        }
        if (j > i && std::fabs(v - values_[j * n + i]) > 1e-6) {
          throw Error(ErrorKind::kData, "similarity matrix: asymmetric at (" + ids_[i] + ", " +
                                            ids_[j] + ")");
        }
      }
    }
  }

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * ids_.size() + j]; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<std::string> ids_;
  std::vector<double> values_;
};

/// Cosine similarities between the stored embeddings of `ids`.
inline SimilarityMatrix similarity_from_embeddings(const EmbeddingStore& store,
                                                   const std::vector<std::string>& ids) {
  const std::size_t n = ids.size();
  std::vector<std::span<const float>> rows;
  rows.reserve(n);
  for (const auto& id : ids) rows.push_back(store.at(id));
  std::vector<double> values(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i * n + i] = cosine(rows[i], rows[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      double c = cosine(rows[i], rows[j]);
      values[i * n + j] = c;
      values[j * n + i] = c;
    }
  }
  return SimilarityMatrix(ids, std::move(values));
}

/// `sims.f32` (square, row-major float32 LE) + one id per line.
inline SimilarityMatrix load_similarity(const fs::path& matrix_path, const fs::path& ids_path) {
  auto index = parse_index(read_file(ids_path), ids_path.string());
  std::string bytes = read_file(matrix_path);
  const std::size_t n = index.size();
  if (bytes.size() != n * n * 4) {
    throw Error(ErrorKind::kSchema, matrix_path.string() + ": expected " +
                                        std::to_string(n * n * 4) + " bytes for " +
                                        std::to_string(n) + " ids, found " +
                                        std::to_string(bytes.size()));
  }
  std::vector<std::string> ids(n);
  std::vector<bool> used(n, false);
  for (auto& [id, row] : index) {
    if (row >= n || used[row]) throw Error(ErrorKind::kSchema, ids_path.string() + ": bad row for '" + id + "'");
    used[row] = true;
    ids[row] = id;
  }
  auto floats = detail::decode_f32le(bytes);
  std::vector<double> values(floats.begin(), floats.end());
  return SimilarityMatrix(std::move(ids), std::move(values));
}

inline void save_similarity(const SimilarityMatrix& m, const fs::path& matrix_path,
                            const fs::path& ids_path) {
  std::vector<float> floats(m.values().begin(), m.values().end());
  write_file_atomic(matrix_path, detail::encode_f32le(floats));
  std::string idx;
  for (const auto& id : m.ids()) idx += id + "\n";
  write_file_atomic(ids_path, idx);
}

// ---------------------------------------------------------------------------
// Ranking metrics

/// All members except the query by descending similarity; ties by id.
inline std::vector<std::size_t> rank_for_query(std::size_t query, const SimilarityMatrix& m) {
  if (query >= m.size()) throw Error(ErrorKind::kData, "rank_for_query: query index out of range");
  std::vector<std::size_t> order;
  order.reserve(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i != query) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double sa = m(query, a), sb = m(query, b);
    if (sa != sb) return sa > sb;
    return m.ids()[a] < m.ids()[b];
  });
  return order;
}

/// Mean over relevant positions k of precision@k.
inline double average_precision(const std::vector<bool>& relevant) {
  double sum = 0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < relevant.size(); ++k) {
    if (relevant[k]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  if (hits == 0) throw Error(ErrorKind::kData, "average_precision: no relevant item");
  return sum / static_cast<double>(hits);
}

/// 1-based rank of the first relevant item.
inline std::size_t first_relevant_rank(const std::vector<bool>& relevant) {
  for (std::size_t k = 0; k < relevant.size(); ++k) {
    if (relevant[k]) return k + 1;
  }
  throw Error(ErrorKind::kData, "ranking has no relevant item");
}

inline double mean_rank_first_relevant(const std::vector<std::vector<bool>>& rankings) {
  if (rankings.empty()) throw Error(ErrorKind::kData, "mean_rank_first_relevant: no rankings");
  double sum = 0;
  for (const auto& r : rankings) sum += static_cast<double>(first_relevant_rank(r));
  return sum / static_cast<double>(rankings.size());
}

struct RetrievalMetrics {
  double map = 0;
  double mr1 = 0;
  std::size_t n_queries = 0;
  std::size_t n_queries_without_relevant = 0;
};

/// Same work and both sides relevant.
inline bool relevant_pair(const BenchmarkMember& a, const BenchmarkMember& b) {
  return a.record.work_id == b.record.work_id && is_relevant(a.label) && is_relevant(b.label);
}

/// Maps each benchmark member to its matrix row; errors unless the id sets match.
inline std::vector<std::size_t> align_members(const BenchmarkSet& set, const SimilarityMatrix& m) {
  std::unordered_map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < m.size(); ++i) row.emplace(m.ids()[i], i);
  std::vector<std::size_t> out;
  std::vector<std::string> missing;
  for (const auto& mem : set.members) {
    auto it = row.find(mem.record.video_id);
    if (it == row.end()) {
      missing.push_back(mem.record.video_id);
    } else {
      out.push_back(it->second);
    }
  }
  if (!missing.empty() || m.size() != set.members.size()) {
    std::string msg = "similarity ids do not match benchmark members (" +
                      std::to_string(m.size()) + " ids, " + std::to_string(set.members.size()) +
                      " members)";
    if (!missing.empty()) {
      msg += "; missing:";
      for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) msg += " " + missing[i];
    }
    throw Error(ErrorKind::kIdMismatch, msg);
  }
  return out;
}

/// MAP and MR1 with every member as a query in turn. Queries with no
/// relevant counterpart are skipped and counted.
inline RetrievalMetrics evaluate(const BenchmarkSet& set, const SimilarityMatrix& m) {
  auto rows = align_members(set, m);
  std::vector<std::size_t> member_of_row(m.size());
  for (std::size_t i = 0; i < rows.size(); ++i) member_of_row[rows[i]] = i;

  RetrievalMetrics out;
  double ap_sum = 0;
  double r1_sum = 0;
  for (std::size_t qi = 0; qi < set.members.size(); ++qi) {
    const auto& q = set.members[qi];
    auto order = rank_for_query(rows[qi], m);
    std::vector<bool> flags;
    flags.reserve(order.size());
    bool any = false;
    for (std::size_t r : order) {
      bool rel = relevant_pair(q, set.members[member_of_row[r]]);
      any = any || rel;
      flags.push_back(rel);
    }
    if (!any) {
      ++out.n_queries_without_relevant;
      continue;
    }
    ap_sum += average_precision(flags);
    r1_sum += static_cast<double>(first_relevant_rank(flags));
    ++out.n_queries;
  }
  if (out.n_queries == 0) throw Error(ErrorKind::kData, "evaluate: no query has a relevant counterpart");
  out.map = ap_sum / static_cast<double>(out.n_queries);
  out.mr1 = r1_sum / static_cast<double>(out.n_queries);
  return out;
}

// ---------------------------------------------------------------------------
// Pair classes and distributions

/// Relationship of member b to the seed baseline a; nullopt when a is not a
/// seed or the pair falls outside every class.
inline std::optional<PairClass> classify_pair(const BenchmarkMember& a, const BenchmarkMember& b) {
  if (!a.is_seed()) return std::nullopt;
  bool same_work = a.record.work_id == b.record.work_id;
  if (b.is_seed()) return same_work ? PairClass::kShsPositive : PairClass::kShsNegative;
  if (!same_work) return std::nullopt;
  switch (b.label) {
    case RelevanceLabel::kMatch: return PairClass::kYtMatch;
    case RelevanceLabel::kVersion: return PairClass::kYtPositive;
    case RelevanceLabel::kNonVersion: return PairClass::kYtNegative;
    case RelevanceLabel::kNoMusic: return PairClass::kYtNoMusic;
  }
  return std::nullopt;
}

/// Similarities per pair class over every (seed a, other member b) pair.
inline std::map<PairClass, std::vector<double>> pair_class_samples(const BenchmarkSet& set,
                                                                   const SimilarityMatrix& m) {
  auto rows = align_members(set, m);
  std::map<PairClass, std::vector<double>> out;
  for (PairClass c : kAllPairClasses) out[c];
  for (std::size_t a = 0; a < set.members.size(); ++a) {
    if (!set.members[a].is_seed()) continue;
    for (std::size_t b = 0; b < set.members.size(); ++b) {
      if (a == b) continue;
      if (auto c = classify_pair(set.members[a], set.members[b])) {
        out[*c].push_back(m(rows[a], rows[b]));
      }
    }
  }
  return out;
}

inline std::map<PairClass, Summary> pair_class_stats(const BenchmarkSet& set, const SimilarityMatrix& m) {
  std::map<PairClass, Summary> out;
  for (const auto& [c, xs] : pair_class_samples(set, m)) out[c] = summarize(xs);
  return out;
}

struct GroupStat {
  PairClass baseline = PairClass::kShsPositive;
  std::string uncertainty_class;
  Summary summary;
  std::optional<double> t;
  std::optional<double> p;
  bool significant = false;
  bool degenerate = false;  // support < 2 or zero variance; no test run
};

/// Similarities of (seed, YT member) pairs of the same work grouped by the YT
/// member's uncertainty class, each tested against its baseline class:
/// relevant members against ShsPositive, NonVersion members against
/// ShsNegative. Members without an uncertainty class are not grouped.
inline std::vector<GroupStat> grouped_uncertainty_stats(const BenchmarkSet& set, const SimilarityMatrix& m,
                                                        double alpha = kDefaultSignificance) {
  auto rows = align_members(set, m);
  auto base = pair_class_samples(set, m);
  std::map<std::pair<PairClass, std::string>, std::vector<double>> groups;
  for (std::size_t a = 0; a < set.members.size(); ++a) {
    const auto& ma = set.members[a];
    if (!ma.is_seed()) continue;
    for (std::size_t b = 0; b < set.members.size(); ++b) {
      const auto& mb = set.members[b];
      if (mb.is_seed() || mb.uncertainty_class.empty()) continue;
      if (mb.record.work_id != ma.record.work_id) continue;
      std::optional<PairClass> baseline;
      if (is_relevant(mb.label)) baseline = PairClass::kShsPositive;
      if (mb.label == RelevanceLabel::kNonVersion) baseline = PairClass::kShsNegative;
      if (!baseline) continue;
      groups[{*baseline, mb.uncertainty_class}].push_back(m(rows[a], rows[b]));
    }
  }
  std::vector<GroupStat> out;
  for (const auto& [key, xs] : groups) {
    GroupStat g;
    g.baseline = key.first;
    g.uncertainty_class = key.second;
    g.summary = summarize(xs);
    const auto& ref = base[key.first];
    if (xs.size() < 2 || ref.size() < 2) {
      g.degenerate = true;
      g.summary.std.reset();
      if (xs.size() < 2) g.summary.mean.reset();
    } else {
      try {
        auto r = welch_t_test(xs, ref);
        g.t = r.t;
        g.p = r.p;
        g.significant = r.p < alpha;
      } catch (const Error&) {
        g.degenerate = true;
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace covbench

#endif  // COVBENCH_EVALUATION_HPP
