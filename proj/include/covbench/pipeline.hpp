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

// Pipeline stages. Each stage reads its inputs from the configured paths or
// the work directory, writes its outputs atomically and returns a one-line
// summary. Files are the only contract between stages.

#ifndef COVBENCH_PIPELINE_HPP
#define COVBENCH_PIPELINE_HPP

#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "covbench/agreement.hpp"
#include "covbench/annotation.hpp"
#include "covbench/config.hpp"
#include "covbench/core.hpp"
#include "covbench/evaluation.hpp"
#include "covbench/ingest.hpp"
#include "covbench/sampling.hpp"
#include "covbench/scoring.hpp"
#include "covbench/text_io.hpp"

namespace covbench {

namespace files {
inline constexpr const char* kQueries = "queries.tsv";
inline constexpr const char* kCandidates = "candidates.tsv";
inline constexpr const char* kScores = "scores.tsv";
inline constexpr const char* kSampled = "sampled.tsv";
inline constexpr const char* kHits = "hits.csv";
inline constexpr const char* kVotes = "votes.tsv";
inline constexpr const char* kAssignmentStatus = "assignment_status.tsv";
inline constexpr const char* kShsYt = "shs_yt";
inline constexpr const char* kAgreement = "agreement.json";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kReportMd = "report.md";

inline std::string benchmark(const std::string& variant) { return "benchmark_" + variant + ".tsv"; }
}  // namespace files

inline Vocabulary load_vocabulary(const PipelineConfig& cfg) {
  if (cfg.vocab.empty()) return Vocabulary::builtin();
  require_file(cfg.vocab, "vocabulary");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(cfg.vocab));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kSchema, cfg.vocab.string() + ": " + e.what());
  }
  return Vocabulary::from_json(doc);
}

inline AlphaLevel parse_alpha_level(std::string_view s) {
  if (s == "nominal") return AlphaLevel::kNominal;
  if (s == "ordinal") return AlphaLevel::kOrdinal;
  if (s == "ordinal_cumulative") return AlphaLevel::kOrdinalCumulative;
  throw Error(ErrorKind::kConfig, "unknown alpha level '" + std::string(s) + "'");
}

namespace detail {

inline void prepare_work_dir(const PipelineConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.work_dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + cfg.work_dir.string() + ": " + ec.message());
}

inline fs::path stage_input(const PipelineConfig& cfg, const std::string& name, const char* stage) {
  fs::path p = cfg.out(name);
  std::error_code ec;
  if (!fs::exists(p, ec)) {
    throw Error(ErrorKind::kIo, std::string(name) + " not found in " + cfg.work_dir.string() +
                                    " (run '" + stage + "' first)");
  }
  return p;
}

/// The lowest-id seed version of each work, in work order.
inline std::map<std::string, const VersionRecord*> originals(const std::vector<VersionRecord>& seed) {
  std::map<std::string, const VersionRecord*> out;
  for (const auto& v : seed) {
    if (v.source != Source::kSeed) continue;
    auto [it, fresh] = out.emplace(v.work_id, &v);
    if (!fresh && compare_version_ids(v.version_id, it->second->version_id) < 0) it->second = &v;
  }
  return out;
}

inline std::vector<VersionRecord> read_seed(const PipelineConfig& cfg) {
  require_file(cfg.seed, "seed versions");
  auto seed = read_versions_tsv(cfg.seed);
  std::set<std::string> ids;
  for (const auto& v : seed) {
    if (v.source != Source::kSeed) {
      throw Error(ErrorKind::kData, cfg.seed.string() + ": '" + v.video_id + "' is not a seed version");
    }
    if (!ids.insert(v.video_id).second) {
      throw Error(ErrorKind::kData, cfg.seed.string() + ": duplicate video_id '" + v.video_id + "'");
    }
  }
  return seed;
}

inline std::set<std::string> read_exclusions(const PipelineConfig& cfg) {
  std::set<std::string> out;
  if (cfg.exclusions.empty()) return out;
  require_file(cfg.exclusions, "exclusion list");
  std::string text = read_file(cfg.exclusions);
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = trim(std::string_view(text).substr(pos, end - pos));
    if (!line.empty() && line[0] != '#') out.insert(line);
    pos = end + 1;
  }
  return out;
}

}  // namespace detail

/// Search queries per work built from its lowest-id seed version.
inline std::string cmd_queries(const PipelineConfig& cfg) {
  auto seed = detail::read_seed(cfg);
  detail::prepare_work_dir(cfg);
  std::vector<QueryRow> rows;
  for (const auto& [work, v] : detail::originals(seed)) {
    for (auto& q : formulate_queries(v->performer, v->title, {})) rows.push_back({work, std::move(q)});
  }
  write_file_atomic(cfg.out(files::kQueries), write_queries_tsv(rows));
  return "queries: " + std::to_string(rows.size()) + " queries for " +
         std::to_string(detail::originals(seed).size()) + " works";
}

/// Crawl records to candidate versions. Videos already in the seed data are
/// not candidates.
inline std::string cmd_ingest(const PipelineConfig& cfg) {
  auto seed = detail::read_seed(cfg);
  require_file(cfg.crawl, "crawl");
  auto queries = read_queries_tsv(detail::stage_input(cfg, files::kQueries, "queries"));
  auto parsed = parse_crawl(read_file(cfg.crawl), cfg.duration_cap_s, cfg.crawl.string());
  std::set<std::string> seed_ids;
  for (const auto& v : seed) seed_ids.insert(v.video_id);
  std::vector<CrawlRecord> kept;
  std::size_t known = 0;
  for (auto& r : parsed.records) {
    if (seed_ids.count(r.video_id)) {
      ++known;
    } else {
      kept.push_back(std::move(r));
    }
  }
  auto candidates = crawl_to_candidates(kept, queries);
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const VersionRecord& a, const VersionRecord& b) { return a.work_id < b.work_id; });
  write_file_atomic(cfg.out(files::kCandidates), write_versions_tsv(candidates));
  return "ingest: " + std::to_string(candidates.size()) + " candidates (" +
         std::to_string(parsed.dropped_duration) + " over duration cap, " +
         std::to_string(parsed.dropped_duplicate) + " duplicates, " + std::to_string(known) +
         " seed videos, " + std::to_string(parsed.malformed.size()) + " malformed lines)";
}

inline std::string cmd_score(const PipelineConfig& cfg) {
  auto seed = detail::read_seed(cfg);
  auto candidates = read_versions_tsv(detail::stage_input(cfg, files::kCandidates, "ingest"));
  require_file(cfg.embeddings, "embeddings");
  require_file(cfg.embeddings_index(), "embedding index");
  auto store = load_embeddings(cfg.embeddings, cfg.embeddings_index());
  TextMatcher matcher = cfg.matcher == "fuzzy" ? TextMatcher(fuzzy_matcher)
                                               : external_matcher(cfg.matcher, cfg.work_dir);
  auto agg = cfg.music_aggregation == "max" ? MusicAggregation::kMax : MusicAggregation::kMean;

  std::map<std::string, WorkQuerySet> works;
  for (const auto& v : seed) {
    auto& w = works[v.work_id];
    w.work_id = v.work_id;
    w.queries.push_back(v);
  }
  std::map<std::string, std::vector<VersionRecord>> by_work;
  for (const auto& c : candidates) by_work[c.work_id].push_back(c);
  std::vector<ScoreRecord> scores;
  for (const auto& [work, cands] : by_work) {
    auto it = works.find(work);
    if (it == works.end()) {
      throw Error(ErrorKind::kData, "candidates reference work '" + work + "' absent from seed data");
    }
    auto part = score_work(it->second, cands, store, matcher, agg);
    scores.insert(scores.end(), part.begin(), part.end());
  }
  write_file_atomic(cfg.out(files::kScores), write_scores_tsv(scores));
  return "score: " + std::to_string(scores.size()) + " candidates over " + std::to_string(by_work.size()) +
         " works";
}

inline std::string cmd_sample(const PipelineConfig& cfg) {
  auto scores = read_scores_tsv(detail::stage_input(cfg, files::kScores, "score"));
  auto clouds = clouds_from_scores(scores);
  auto sampled = sample_dataset(clouds, static_cast<std::size_t>(cfg.k));
  write_file_atomic(cfg.out(files::kSampled), write_sampled_tsv(sampled));
  std::string summary = "sample: " + std::to_string(sampled.size()) + " candidates from " +
                        std::to_string(clouds.size()) + " works";
  if (auto dups = cross_work_duplicates(sampled); !dups.empty()) {
    summary += " (" + std::to_string(dups.size()) + " videos sampled for several works)";
  }
  return summary;
}

inline std::string cmd_hits(const PipelineConfig& cfg) {
  auto seed = detail::read_seed(cfg);
  auto sampled = read_sampled_tsv(detail::stage_input(cfg, files::kSampled, "sample"));
  auto candidates = read_versions_tsv(detail::stage_input(cfg, files::kCandidates, "ingest"));
  auto built = build_hits(sampled, seed, cfg.rng_seed, static_cast<std::size_t>(3 * cfg.k));
  std::vector<VersionRecord> meta = seed;
  meta.insert(meta.end(), candidates.begin(), candidates.end());
  write_file_atomic(cfg.out(files::kHits), write_hits_csv(built.hits, meta));
  return "hits: " + std::to_string(built.hits.size()) + " tasks (" +
         std::to_string(built.warnings.size()) + " warnings)";
}

inline std::string cmd_votes(const PipelineConfig& cfg) {
  auto hits = read_hits_csv(detail::stage_input(cfg, files::kHits, "hits"));
  require_file(cfg.assignments, "assignments");
  auto assignments = read_assignments_csv(cfg.assignments);
  auto collected = collect_votes(hits, assignments, static_cast<int>(cfg.vote_threshold), cfg.min_assignment_s);
  write_file_atomic(cfg.out(files::kVotes), write_votes_tsv(collected.votes));
  TsvWriter status({"hit_id", "worker_id", "verdict", "reason"});
  std::map<Verdict, std::size_t> counts;
  for (const auto& s : collected.statuses) {
    status.row({s.hit_id, s.worker_id, std::string(to_string(s.result.verdict)),
                std::string(to_string(s.result.reason))});
    ++counts[s.result.verdict];
  }
  write_file_atomic(cfg.out(files::kAssignmentStatus), status.str());
  std::size_t undecided = 0;
  for (const auto& v : collected.votes) undecided += v.vote.final ? 0 : 1;
  return "votes: " + std::to_string(collected.votes.size()) + " candidates, " +
         std::to_string(undecided) + " undecided; assignments accepted " +
         std::to_string(counts[Verdict::kAccept]) + ", excluded " +
         std::to_string(counts[Verdict::kAcceptExcluded]) + ", rejected " +
         std::to_string(counts[Verdict::kReject]);
}

/// Merges votes with expert labels into the annotated dataset.
inline std::string cmd_curate(const PipelineConfig& cfg) {
  auto vocab = load_vocabulary(cfg);
  auto votes = read_votes_tsv(detail::stage_input(cfg, files::kVotes, "votes"));
  auto sampled = read_sampled_tsv(detail::stage_input(cfg, files::kSampled, "sample"));
  auto candidates = read_versions_tsv(detail::stage_input(cfg, files::kCandidates, "ingest"));
  std::vector<ExpertLabel> expert;
  if (!cfg.expert.empty()) {
    require_file(cfg.expert, "expert labels");
    expert = read_expert_tsv(cfg.expert, vocab);
  }
  auto merged = merge_curation(votes, expert, sampled);
  std::map<std::pair<std::string, std::string>, const VersionRecord*> meta;
  for (const auto& c : candidates) meta[{c.work_id, c.video_id}] = &c;
  Dataset ds;
  for (const auto& l : merged.labels) {
    auto it = meta.find({l.work_id, l.video_id});
    if (it == meta.end()) {
      throw Error(ErrorKind::kIdMismatch, "voted candidate '" + l.video_id + "' is not in " +
                                              std::string(files::kCandidates));
    }
    ds.versions.push_back(*it->second);
  }
  ds.labels = std::move(merged.labels);
  write_dataset(cfg.out(files::kShsYt), ds);
  return "curate: " + std::to_string(ds.labels.size()) + " labeled candidates, " +
         std::to_string(merged.incomplete) + " still undecided, " + std::to_string(merged.worker_error) +
         " votes overridden";
}

inline nlohmann::ordered_json agreement_json(const AgreementReport& r, std::string_view level) {
  nlohmann::ordered_json j;
  j["kendall_tau"] = r.kendall_tau ? nlohmann::ordered_json(*r.kendall_tau) : nullptr;
  j["krippendorff_alpha"] =
      r.krippendorff_alpha ? nlohmann::ordered_json(*r.krippendorff_alpha) : nullptr;
  j["alpha_level"] = level;
  j["n_tau_items"] = r.n_tau_items;
  j["n_alpha_items"] = r.n_alpha_items;
  j["n_raters"] = r.n_raters;
  return j;
}

inline std::string cmd_agreement(const PipelineConfig& cfg) {
  auto vocab = load_vocabulary(cfg);
  auto hits = read_hits_csv(detail::stage_input(cfg, files::kHits, "hits"));
  auto votes = read_votes_tsv(detail::stage_input(cfg, files::kVotes, "votes"));
  require_file(cfg.assignments, "assignments");
  auto assignments = read_assignments_csv(cfg.assignments);
  std::vector<ExpertLabel> expert;
  if (!cfg.expert.empty()) {
    require_file(cfg.expert, "expert labels");
    expert = read_expert_tsv(cfg.expert, vocab);
  }
  auto level = parse_alpha_level(cfg.alpha_level);
  auto report = annotation_agreement(hits, assignments, votes, expert, level, cfg.min_assignment_s);
  write_file_atomic(cfg.out(files::kAgreement), agreement_json(report, cfg.alpha_level).dump(2) + "\n");
  auto show = [](const std::optional<double>& v) { return v ? format_fixed(*v, 3) : std::string("n/a"); };
  return "agreement: tau " + show(report.kendall_tau) + " over " + std::to_string(report.n_tau_items) +
         " items, alpha " + show(report.krippendorff_alpha) + " over " +
         std::to_string(report.n_alpha_items) + " items";
}

inline std::string cmd_benchmark(const PipelineConfig& cfg) {
  auto variant = parse_benchmark_variant(cfg.variant);
  auto seed = detail::read_seed(cfg);
  auto exclusions = detail::read_exclusions(cfg);
  fs::path dir = cfg.out(files::kShsYt);
  detail::stage_input(cfg, std::string(files::kShsYt) + "/versions.tsv", "curate");
  auto ds = read_dataset(dir, load_vocabulary(cfg));
  std::map<std::string, std::string> query_by_work;
  if (variant == BenchmarkVariant::kYt2Q) {
    for (const auto& h : read_hits_csv(detail::stage_input(cfg, files::kHits, "hits"))) {
      query_by_work[h.work_id] = h.query_version.video_id;
    }
  }
  auto set = assemble_benchmark(ds.versions, ds.labels, seed, query_by_work, variant, exclusions);
  write_file_atomic(cfg.out(files::benchmark(cfg.variant)), write_benchmark_tsv(set));
  std::set<std::string> works;
  for (const auto& m : set.members) works.insert(m.record.work_id);
  return "benchmark " + cfg.variant + ": " + std::to_string(set.members.size()) + " members over " +
         std::to_string(works.size()) + " works (" + std::to_string(set.exclusions_applied.size()) +
         " left out)";
}

// ---------------------------------------------------------------------------
// Evaluation report

struct EvalReport {
  std::string model;
  std::string variant;
  std::size_t n_members = 0;
  std::size_t n_works = 0;
  RetrievalMetrics metrics;
  std::map<PairClass, Summary> pair_stats;
  std::vector<GroupStat> groups;
  double significance = kDefaultSignificance;
};

inline EvalReport build_report(const BenchmarkSet& set, const SimilarityMatrix& m, std::string model,
                               std::string variant, double significance) {
  EvalReport r;
  r.model = std::move(model);
  r.variant = std::move(variant);
  r.n_members = set.members.size();
  std::set<std::string> works;
  for (const auto& mem : set.members) works.insert(mem.record.work_id);
  r.n_works = works.size();
  r.metrics = evaluate(set, m);
  r.pair_stats = pair_class_stats(set, m);
  r.groups = grouped_uncertainty_stats(set, m, significance);
  r.significance = significance;
  return r;
}

inline nlohmann::ordered_json report_json(const EvalReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nullptr; };
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["variant"] = r.variant;
  j["members"] = r.n_members;
  j["works"] = r.n_works;
  j["map"] = r.metrics.map;
  j["mr1"] = r.metrics.mr1;
  j["queries"] = r.metrics.n_queries;
  j["queries_without_relevant"] = r.metrics.n_queries_without_relevant;
  j["significance"] = r.significance;
  auto& pc = j["pair_classes"] = nlohmann::ordered_json::array();
  for (const auto& [c, s] : r.pair_stats) {
    pc.push_back({{"class", to_string(c)}, {"support", s.support}, {"mean", opt(s.mean)}, {"std", opt(s.std)}});
  }
  auto& gs = j["groups"] = nlohmann::ordered_json::array();
  for (const auto& g : r.groups) {
    gs.push_back({{"baseline", to_string(g.baseline)},
                  {"uncertainty_class", g.uncertainty_class},
                  {"support", g.summary.support},
                  {"mean", opt(g.summary.mean)},
                  {"std", opt(g.summary.std)},
                  {"t", opt(g.t)},
                  {"p", opt(g.p)},
                  {"significant", g.significant},
                  {"degenerate", g.degenerate}});
  }
  return j;
}

inline std::string format_scientific(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

inline std::string report_markdown(const EvalReport& r, const Vocabulary& vocab = Vocabulary::builtin()) {
  auto mean_std = [](const Summary& s) {
    if (!s.mean) return std::string("n/a");
    return format_fixed(*s.mean, 2) + " ± " + (s.std ? format_fixed(*s.std, 2) : std::string("n/a"));
  };
  std::string out = "# Evaluation report\n\n";
  out += "Model `" + r.model + "` on benchmark `" + r.variant + "` (" + std::to_string(r.n_members) +
         " members, " + std::to_string(r.n_works) + " works).\n\n";
  out += "## Retrieval\n\n| Model | MAP | MR1 | Queries | Without relevant |\n|---|---|---|---|---|\n";
  out += "| " + r.model + " | " + format_fixed(r.metrics.map, 3) + " | " + format_fixed(r.metrics.mr1, 2) +
         " | " + std::to_string(r.metrics.n_queries) + " | " +
         std::to_string(r.metrics.n_queries_without_relevant) + " |\n\n";
  out += "## Similarity by pair class\n\n| Class | Mean ± std | Support |\n|---|---|---|\n";
  for (const auto& [c, s] : r.pair_stats) {
    out += "| " + std::string(to_string(c)) + " | " + mean_std(s) + " | " + std::to_string(s.support) + " |\n";
  }
  out += "\n## Similarity by uncertainty class\n\n";
  out += "Tested against the baseline class with Welch's t-test, significant when p < " +
         format_double(r.significance) + ".\n\n";
  out += "| Baseline | Uncertainty class | Mean ± std | Support | p | Significant |\n|---|---|---|---|---|---|\n";
  for (const auto& g : r.groups) {
    std::string name = g.uncertainty_class;
    if (const auto* uc = vocab.find(g.uncertainty_class)) name = uc->display;
    out += "| " + std::string(to_string(g.baseline)) + " | " + name + " | " + mean_std(g.summary) + " | " +
           std::to_string(g.summary.support) + " | " + (g.p ? format_scientific(*g.p) : std::string("n/a")) +
           " | " + (g.degenerate ? "n/a" : (g.significant ? "yes" : "no")) + " |\n";
  }
  return out;
}

/// Similarities come from the configured matrix or, when none is given, from
/// embedding cosines. No output is written unless evaluation succeeds.
inline std::string cmd_eval(const PipelineConfig& cfg) {
  auto vocab = load_vocabulary(cfg);
  auto set = read_benchmark_tsv(detail::stage_input(cfg, files::benchmark(cfg.variant), "benchmark"));
  SimilarityMatrix m;
  if (!cfg.sims.empty()) {
    require_file(cfg.sims, "similarity matrix");
    require_file(cfg.sims_ids(), "similarity ids");
    m = load_similarity(cfg.sims, cfg.sims_ids());
  } else {
    require_file(cfg.embeddings, "embeddings");
    require_file(cfg.embeddings_index(), "embedding index");
    auto store = load_embeddings(cfg.embeddings, cfg.embeddings_index());
    std::vector<std::string> ids;
    for (const auto& mem : set.members) ids.push_back(mem.record.video_id);
    m = similarity_from_embeddings(store, ids);
  }
  auto report = build_report(set, m, cfg.model, cfg.variant, cfg.significance);
  std::string json = report_json(report).dump(2) + "\n";
  std::string md = report_markdown(report, vocab);
  write_file_atomic(cfg.out(files::kReportJson), json);
  write_file_atomic(cfg.out(files::kReportMd), md);
  return "eval " + cfg.model + " on " + cfg.variant + ": MAP " + format_fixed(report.metrics.map, 3) + ", MR1 " +
         format_fixed(report.metrics.mr1, 2) + " over " + std::to_string(report.metrics.n_queries) + " queries";
}

/// Every batch stage in order.
inline std::vector<std::string> cmd_run(const PipelineConfig& cfg) {
  std::vector<std::string> out;
  out.push_back(cmd_queries(cfg));
  out.push_back(cmd_ingest(cfg));
  out.push_back(cmd_score(cfg));
  out.push_back(cmd_sample(cfg));
  out.push_back(cmd_hits(cfg));
  out.push_back(cmd_votes(cfg));
  out.push_back(cmd_curate(cfg));
  out.push_back(cmd_agreement(cfg));
  out.push_back(cmd_benchmark(cfg));
  out.push_back(cmd_eval(cfg));
  return out;
}

}  // namespace covbench

#endif  // COVBENCH_PIPELINE_HPP
