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

// Seeded synthetic corpus: seed versions, a web crawl with hidden ground
// truth, embeddings, simulated worker assignments and expert labels. Used for
// the shipped fixture and for end-to-end tests.

#ifndef COVBENCH_SYNTH_HPP
#define COVBENCH_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "covbench/pipeline.hpp"
#include "covbench/random.hpp"

namespace covbench {

struct SynthOptions {
  std::size_t works = 100;
  std::size_t crawl_per_work = 20;
  std::size_t min_seed_versions = 2;
  std::size_t max_seed_versions = 5;
  std::size_t dim = 16;
  std::size_t workers = 30;
  std::uint64_t seed = 7;
};

struct SynthTruth {
  RelevanceLabel label = RelevanceLabel::kNonVersion;
  std::string uncertainty_class;
};

namespace synth_detail {

inline const std::vector<std::string>& title_words() {
  static const std::vector<std::string> w = {
      "midnight", "river",  "golden", "heart",  "summer", "rain",   "highway", "dream",  "fire",
      "silver",   "moon",   "dancing", "lonely", "city",  "blue",   "wild",    "sweet",  "ocean",
      "shadow",   "morning", "broken", "paper",  "velvet", "echo",  "winter",  "garden", "neon",
      "hollow",   "crystal", "thunder", "café",  "señorita"};
  return w;
}

inline const std::vector<std::string>& name_words() {
  static const std::vector<std::string> w = {
      "The Harbor", "Nova",    "Lena Marsh", "Blue Attic", "Otis Crane", "Vera Lind",   "Kestrel",
      "Mila Stone", "The Reds", "Juno Park", "Ash & Ivy",  "Calder",     "Björk Trio",  "Rosa Vale",
      "Felix Roe",  "Ida West", "Tom Haze",  "Greyhound",  "Sol Nadir",  "Ezra Quinn"};
  return w;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& xs) {
  return xs[rng.below(xs.size())];
}

inline std::string video_id(Rng& rng, std::set<std::string>& used) {
  static const char* alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
  for (;;) {
    std::string id(11, ' ');
    for (auto& c : id) c = alphabet[rng.below(64)];
    if (used.insert(id).second) return id;
  }
}

/// `center` plus isotropic noise of expected norm about `sigma`.
inline std::vector<float> noisy(Rng& rng, const std::vector<double>& center, double sigma) {
  std::vector<float> v(center.size());
  const double s = sigma / std::sqrt(static_cast<double>(center.size()));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(center[i] + s * rng.normal());
  return v;
}

inline std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0;
  for (auto& x : v) {
    x = rng.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

inline std::string uncertainty_for(Rng& rng, RelevanceLabel label) {
  static const std::vector<std::string> version = {
      "none",           "song_difficult_cover", "song_drum_only",     "song_instrumental",
      "song_medley",    "song_single_instrument", "song_slowed_spedup", "song_vocal_only",
      "song_mashup_remix", "video_low_fidelity", "video_multiple_versions"};
  static const std::vector<std::string> non_version = {"none", "song_same_artist", "song_same_genre",
                                                       "song_similar_version", "video_low_fidelity"};
  static const std::vector<std::string> no_music = {"none", "video_with_non_music"};
  switch (label) {
    case RelevanceLabel::kMatch: return rng.below(2) ? "none" : "video_low_fidelity";
    case RelevanceLabel::kVersion: return pick(rng, version);
    case RelevanceLabel::kNonVersion: return pick(rng, non_version);
    case RelevanceLabel::kNoMusic: return pick(rng, no_music);
  }
  return "none";
}

inline RelevanceLabel worker_label(Rng& rng, RelevanceLabel truth, double accuracy) {
  if (rng.uniform() < accuracy) return truth;
  int r = rank(truth);
  int shift = rng.below(2) ? 1 : -1;
  if (r + shift < 0 || r + shift > 3) shift = -shift;
  if (rng.uniform() < 0.25) return static_cast<RelevanceLabel>(rng.below(4));
  return static_cast<RelevanceLabel>(r + shift);
}

}  // namespace synth_detail

/// Writes the corpus inputs plus a `config.toml` into `dir`. Returns the
/// hidden label of every crawl candidate.
inline std::map<std::string, SynthTruth> write_synthetic_corpus(const fs::path& dir, const SynthOptions& opt) {
  using namespace synth_detail;
  fs::create_directories(dir);
  Rng rng(opt.seed);
  std::set<std::string> used_ids;
  std::vector<VersionRecord> seed;
  std::vector<std::string> emb_ids;
  std::vector<float> emb_values;
  auto add_embedding = [&](const std::string& id, const std::vector<float>& v) {
    emb_ids.push_back(id);
    emb_values.insert(emb_values.end(), v.begin(), v.end());
  };
  std::map<std::string, SynthTruth> truth;
  std::string crawl;
  std::size_t version_counter = 1000;

  std::vector<std::vector<double>> centers;
  for (std::size_t w = 0; w < opt.works; ++w) centers.push_back(random_unit(rng, opt.dim));

  for (std::size_t w = 0; w < opt.works; ++w) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "W%03zu", w + 1);
    const std::string work = buf;
    std::string title = pick(rng, title_words()) + " " + pick(rng, title_words());
    title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title[0])));
    std::string performer = pick(rng, name_words());
    std::size_t n_versions =
        opt.min_seed_versions + rng.below(opt.max_seed_versions - opt.min_seed_versions + 1);
    for (std::size_t v = 0; v < n_versions; ++v) {
      VersionRecord r;
      r.work_id = work;
      version_counter += 1 + rng.below(50);
      r.version_id = std::to_string(version_counter);
      r.video_id = video_id(rng, used_ids);
      r.title = title;
      r.performer = v == 0 ? performer : pick(rng, name_words());
      r.channel = r.performer + " Official";
      r.duration_s = static_cast<std::int64_t>(150 + rng.below(250));
      if (rng.below(3)) r.upload_date = "20" + std::to_string(10 + rng.below(13)) + "-0" + std::to_string(1 + rng.below(9)) + "-1" + std::to_string(rng.below(10));
      r.source = Source::kSeed;
      add_embedding(r.video_id, noisy(rng, centers[w], 0.25));
      seed.push_back(std::move(r));
    }

    auto queries = formulate_queries(performer, title, {});
    for (std::size_t c = 0; c < opt.crawl_per_work; ++c) {
      double u = rng.uniform();
      RelevanceLabel label = u < 0.05   ? RelevanceLabel::kMatch
                             : u < 0.40 ? RelevanceLabel::kVersion
                             : u < 0.85 ? RelevanceLabel::kNonVersion
                                        : RelevanceLabel::kNoMusic;
      std::string id = video_id(rng, used_ids);
      std::string other_title = pick(rng, title_words()) + " " + pick(rng, title_words());
      std::string cover_artist = pick(rng, name_words());
      nlohmann::ordered_json j;
      j["video_id"] = id;
      std::vector<float> emb;
      switch (label) {
        case RelevanceLabel::kMatch:
          j["title"] = performer + " - " + title + " (Official Video)";
          j["channel"] = performer;
          emb = noisy(rng, centers[w], 0.15);
          break;
        case RelevanceLabel::kVersion:
          j["title"] = rng.below(2) ? title + " (" + cover_artist + " cover)" : cover_artist + " plays " + title;
          j["channel"] = cover_artist;
          emb = noisy(rng, centers[w], rng.below(4) ? 0.35 : 0.9);
          break;
        case RelevanceLabel::kNonVersion:
          j["title"] = rng.below(2) ? performer + " " + other_title : title + " " + other_title;
          j["channel"] = rng.below(2) ? performer : cover_artist;
          emb = noisy(rng, centers[rng.below(opt.works)], 0.5);
          break;
        case RelevanceLabel::kNoMusic:
          j["title"] = performer + (rng.below(2) ? " interview" : " " + title + " reaction");
          j["channel"] = cover_artist + " TV";
          emb = noisy(rng, random_unit(rng, opt.dim), 0.4);
          break;
      }
      j["duration_s"] = rng.below(20) == 0 ? 600 + static_cast<std::int64_t>(rng.below(900))
                                            : 60 + static_cast<std::int64_t>(rng.below(480));
      j["query"] = pick(rng, queries);
      if (rng.below(4)) j["upload_date"] = "2022-1" + std::to_string(rng.below(3)) + "-0" + std::to_string(1 + rng.below(9));
      crawl += j.dump() + "\n";
      if (rng.below(40) == 0) crawl += j.dump() + "\n";  // repeated search hit
      add_embedding(id, emb);
      truth[id] = {label, uncertainty_for(rng, label)};
    }
    if (w % 25 == 0) crawl += "{not json\n";
    if (w % 10 == 0) {
      // The search also finds a version already in the seed data.
      const auto& known = seed.back();
      nlohmann::ordered_json j;
      j["video_id"] = known.video_id;
      j["title"] = known.title;
      j["channel"] = known.channel;
      j["duration_s"] = known.duration_s;
      j["query"] = queries.front();
      crawl += j.dump() + "\n";
    }
  }

  write_file_atomic(dir / "seed_versions.tsv", write_versions_tsv(seed));
  write_file_atomic(dir / "crawl.jsonl", crawl);
  save_embeddings(EmbeddingStore(opt.dim, std::move(emb_values), std::move(emb_ids)), dir / "embeddings.f32",
                  dir / "embeddings.idx");
  std::string config =
      "# Synthetic fixture configuration\n"
      "seed = \"seed_versions.tsv\"\n"
      "crawl = \"crawl.jsonl\"\n"
      "embeddings = \"embeddings.f32\"\n"
      "assignments = \"assignments.csv\"\n"
      "expert = \"expert.tsv\"\n"
      "work_dir = \"out\"\n"
      "k = 3\n"
      "vote_threshold = 3\n"
      "min_assignment_s = 10\n"
      "duration_cap_s = 600\n"
      "significance = 0.01\n"
      "rng_seed = " + std::to_string(opt.seed * 6364136223846793005ULL % 1000003ULL) + "\n"
      "variant = \"yt2q\"\n"
      "model = \"synthetic-embeddings\"\n";
  write_file_atomic(dir / "config.toml", config);
  return truth;
}

/// Simulated crowd answers for the given tasks. Worker accuracy varies; a few
/// assignments are rushed or fail the known-answer item.
inline std::vector<Assignment> simulate_assignments(std::span<const Hit> hits,
                                                    const std::map<std::string, SynthTruth>& truth,
                                                    const SynthOptions& opt) {
  using namespace synth_detail;
  Rng rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> accuracy(opt.workers);
  for (auto& a : accuracy) a = rng.uniform(0.55, 0.95);
  std::vector<Assignment> out;
  for (const auto& h : hits) {
    std::size_t n = 5 - (rng.below(6) == 0 ? 1 + rng.below(2) : 0);
    std::vector<std::size_t> pool(opt.workers);
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    rng.shuffle(std::span<std::size_t>(pool));
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t w = pool[k];
      Assignment a;
      a.hit_id = h.hit_id;
      char buf[32];
      std::snprintf(buf, sizeof buf, "A%04zu", w + 1);
      a.worker_id = buf;
      for (const auto& c : h.candidates) a.labels[c] = worker_label(rng, truth.at(c).label, accuracy[w]);
      a.labels[h.quality_check.video_id] = worker_label(rng, h.quality_check.expected, 0.9);
      a.duration_s = rng.below(30) == 0 ? static_cast<std::int64_t>(rng.below(10))
                                        : 200 + static_cast<std::int64_t>(rng.below(1200));
      if (a.labels[h.quality_check.video_id] != h.quality_check.expected && rng.below(3) == 0) {
        a.manual_override = true;
        a.justification = "the reference clip sounds like a live take of the same song";
      }
      out.push_back(std::move(a));
    }
  }
  return out;
}

/// Expert review: every undecided candidate, every candidate voted NoMusic
/// and a sample of the rest, labeled with the hidden truth.
inline std::vector<ExpertLabel> simulate_expert(std::span<const VoteRow> votes,
                                                const std::map<std::string, SynthTruth>& truth,
                                                const SynthOptions& opt) {
  Rng rng(opt.seed + 17);
  std::vector<ExpertLabel> out;
  for (const auto& v : votes) {
    bool review = !v.vote.final || *v.vote.final == RelevanceLabel::kNoMusic || rng.below(3) == 0;
    if (!review) continue;
    const auto& t = truth.at(v.video_id);
    out.push_back({v.video_id, t.label, t.uncertainty_class, rng.below(5) == 0 ? "checked twice" : ""});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.video_id < b.video_id; });
  return out;
}

/// Full fixture: corpus, then the tasks the pipeline builds from it, then the
/// simulated annotations. Pipeline outputs land in `scratch`.
inline std::string write_synthetic_fixture(const fs::path& dir, const fs::path& scratch, const SynthOptions& opt) {
  auto truth = write_synthetic_corpus(dir, opt);
  auto cfg = PipelineConfig::load(dir / "config.toml");
  cfg.work_dir = scratch;
  cmd_queries(cfg);
  cmd_ingest(cfg);
  cmd_score(cfg);
  cmd_sample(cfg);
  cmd_hits(cfg);
  auto hits = read_hits_csv(cfg.out(files::kHits));
  auto assignments = simulate_assignments(hits, truth, opt);
  write_file_atomic(dir / "assignments.csv", write_assignments_csv(assignments));
  auto votes = collect_votes(hits, assignments, static_cast<int>(cfg.vote_threshold), cfg.min_assignment_s);
  auto expert = simulate_expert(votes.votes, truth, opt);
  write_file_atomic(dir / "expert.tsv", write_expert_tsv(expert));
  return "synth: " + std::to_string(opt.works) + " works, " + std::to_string(truth.size()) + " crawl videos, " +
         std::to_string(hits.size()) + " tasks, " + std::to_string(assignments.size()) + " assignments, " +
         std::to_string(expert.size()) + " expert labels";
}

/// A small benchmark with seeded similarities: `works` works of `per_work`
/// members each (the first two seed versions, the rest labeled candidates).
inline std::pair<BenchmarkSet, SimilarityMatrix> synthetic_eval_set(std::size_t works, std::size_t per_work,
                                                                    std::uint64_t seed) {
  Rng rng(seed);
  BenchmarkSet set;
  set.variant = BenchmarkVariant::kCustom;
  std::set<std::string> used;
  for (std::size_t w = 0; w < works; ++w) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "E%02zu", w + 1);
    for (std::size_t i = 0; i < per_work; ++i) {
      BenchmarkMember m;
      m.record.work_id = buf;
      m.record.video_id = synth_detail::video_id(rng, used);
      m.record.version_id = i < 2 ? std::to_string(100 * (w + 1) + i) : m.record.video_id;
      m.record.title = std::string("work ") + buf;
      m.record.duration_s = 200;
      m.record.source = i < 2 ? Source::kSeed : Source::kWebCandidate;
      m.label = i < 2 ? RelevanceLabel::kVersion : static_cast<RelevanceLabel>(rng.below(4));
      m.uncertainty_class = i < 2 ? "" : "none";
      set.members.push_back(std::move(m));
    }
  }
  const std::size_t n = set.members.size();
  std::vector<double> values(n * n);
  std::vector<std::string> ids;
  for (const auto& m : set.members) ids.push_back(m.record.video_id);
  for (std::size_t i = 0; i < n; ++i) {
    values[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      bool same = set.members[i].record.work_id == set.members[j].record.work_id;
      double v = static_cast<float>(rng.uniform(-0.2, 0.6) + (same ? rng.uniform(0, 0.5) : 0.0));
      if (rng.below(10) == 0) v = 0.25;  // shared values exercise the tie rule
      values[i * n + j] = v;
      values[j * n + i] = v;
    }
  }
  return {std::move(set), SimilarityMatrix(std::move(ids), std::move(values))};
}

}  // namespace covbench

#endif  // COVBENCH_SYNTH_HPP
