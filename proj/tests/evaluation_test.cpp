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

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "covbench/evaluation.hpp"
#include "covbench/random.hpp"
#include "covbench/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace covbench {
namespace {

using L = RelevanceLabel;

BenchmarkMember member(const std::string& work, const std::string& vid, L label, bool seed,
                       const std::string& cls = "") {
  BenchmarkMember m;
  m.record.work_id = work;
  m.record.video_id = vid;
  m.record.version_id = seed ? vid.substr(1) : vid;
  m.record.duration_s = 100;
  m.record.source = seed ? Source::kSeed : Source::kWebCandidate;
  m.label = label;
  m.uncertainty_class = cls;
  return m;
}

SimilarityMatrix matrix_of(const std::vector<std::string>& ids, const std::function<double(std::size_t, std::size_t)>& f) {
  const std::size_t n = ids.size();
  std::vector<double> v(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) v[i * n + j] = i == j ? 1.0 : f(std::min(i, j), std::max(i, j));
  }
  return SimilarityMatrix(ids, v);
}

std::vector<std::string> ids_of(const BenchmarkSet& s) {
  std::vector<std::string> out;
  for (const auto& m : s.members) out.push_back(m.record.video_id);
  return out;
}

TEST(AveragePrecision, Examples) {
  EXPECT_NEAR(average_precision({true, false, true, false}), (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(average_precision({true, true, false, false}), 1.0);
  EXPECT_DOUBLE_EQ(average_precision({false, false, false, false, true}), 1.0 / 5.0);
  EXPECT_THROW(average_precision({false, false}), Error);
  EXPECT_THROW(average_precision({}), Error);
}

TEST(AveragePrecision, MatchesPrefixOracle) {
  Rng rng(61);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t n = 1 + rng.below(50);
    std::vector<bool> flags(n);
    for (std::size_t i = 0; i < n; ++i) flags[i] = rng.below(3) == 0;
    flags[rng.below(n)] = true;
    EXPECT_NEAR(average_precision(flags), oracle::average_precision(flags), 1e-12);
  }
}

TEST(MeanRankFirstRelevant, Examples) {
  EXPECT_EQ(mean_rank_first_relevant({{true, false}, {false, false, true}}), 2.0);
  EXPECT_EQ(mean_rank_first_relevant({{true}, {true, false}}), 1.0);
  std::vector<bool> late(44, false);
  late.back() = true;
  EXPECT_EQ(mean_rank_first_relevant({late}), 44.0);
  EXPECT_THROW(mean_rank_first_relevant({{false, false}}), Error);
}

TEST(RankForQuery, Examples) {
  auto m = matrix_of({"a", "b", "c"}, [](std::size_t i, std::size_t j) {
    if (i == 0) return j == 1 ? 0.9 : 0.2;
    return 0.5;
  });
  EXPECT_EQ(rank_for_query(0, m), (std::vector<std::size_t>{1, 2}));
  auto flat = matrix_of({"z", "b", "a"}, [](std::size_t, std::size_t) { return 0.5; });
  EXPECT_EQ(rank_for_query(0, flat), (std::vector<std::size_t>{2, 1}));
  auto single = matrix_of({"a"}, [](std::size_t, std::size_t) { return 0.0; });
  EXPECT_TRUE(rank_for_query(0, single).empty());
  EXPECT_THROW(rank_for_query(1, single), Error);
}

TEST(SimilarityMatrixTest, Validation) {
  EXPECT_THROW(SimilarityMatrix({"a", "b"}, {1, 0, 0}), Error);
  EXPECT_THROW(SimilarityMatrix({"a", "a"}, {1, 0, 0, 1}), Error);
  EXPECT_THROW(SimilarityMatrix({"a", "b"}, {1, 0.5, 0.4, 1}), Error);
  EXPECT_THROW(SimilarityMatrix({"a", "b"}, {1, NAN, NAN, 1}), Error);
  EXPECT_NO_THROW(SimilarityMatrix({"a", "b"}, {1, 0.5, 0.5 + 1e-7, 1}));
}

TEST(SimilarityMatrixTest, SaveLoadRoundTrip) {
  testing::TempDir dir;
  auto [set, m] = synthetic_eval_set(3, 4, 5);
  save_similarity(m, dir / "s.f32", dir / "s.ids");
  auto back = load_similarity(dir / "s.f32", dir / "s.ids");
  EXPECT_EQ(back.ids(), m.ids());
  EXPECT_EQ(back.values(), m.values());
}

BenchmarkSet two_works() {
  BenchmarkSet s;
  s.members = {member("A", "s1", L::kVersion, true),   member("A", "s2", L::kVersion, true),
               member("A", "y1", L::kMatch, false),    member("A", "y2", L::kNonVersion, false),
               member("B", "s3", L::kVersion, true),   member("B", "s4", L::kVersion, true),
               member("B", "y3", L::kNoMusic, false),  member("B", "y4", L::kVersion, false)};
  return s;
}

TEST(Evaluate, PerfectSeparationGivesOne) {
  auto s = two_works();
  auto m = matrix_of(ids_of(s), [&](std::size_t i, std::size_t j) {
    return relevant_pair(s.members[i], s.members[j]) ? 0.9 : 0.1;
  });
  auto r = evaluate(s, m);
  EXPECT_EQ(r.map, 1.0);
  EXPECT_EQ(r.mr1, 1.0);
  EXPECT_EQ(r.n_queries, 6u);
  EXPECT_EQ(r.n_queries_without_relevant, 2u);
}

TEST(Evaluate, IdMismatchIsAnError) {
  auto s = two_works();
  auto ids = ids_of(s);
  ids.back() = "other";
  auto m = matrix_of(ids, [](std::size_t, std::size_t) { return 0.3; });
  try {
    evaluate(s, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIdMismatch);
  }
  ids.pop_back();
  EXPECT_THROW(evaluate(s, matrix_of(ids, [](std::size_t, std::size_t) { return 0.3; })), Error);
}

TEST(Evaluate, MatrixOrderDoesNotMatter) {
  auto [set, m] = synthetic_eval_set(6, 5, 17);
  std::vector<std::size_t> perm(m.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::vector<std::string> ids;
  for (auto p : perm) ids.push_back(m.ids()[p]);
  auto shuffled = matrix_of(ids, [&](std::size_t i, std::size_t j) { return m(perm[i], perm[j]); });
  auto a = evaluate(set, m), b = evaluate(set, shuffled);
  EXPECT_EQ(a.map, b.map);
  EXPECT_EQ(a.mr1, b.mr1);
}

TEST(Evaluate, MatchesOracleOnRandomSets) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto [set, m] = synthetic_eval_set(3 + seed % 5, 3 + seed % 4, seed);
    auto got = evaluate(set, m);
    auto want = oracle::retrieval(set, m);
    EXPECT_NEAR(got.map, want.map, 1e-12) << seed;
    EXPECT_NEAR(got.mr1, want.mr1, 1e-12) << seed;
    EXPECT_EQ(got.n_queries, want.queries);
  }
}

TEST(Evaluate, ShippedTwentyWorkFixtureMatchesOracle) {
  auto dir = testing::fixture_dir("eval20");
  auto set = read_benchmark_tsv(dir / "benchmark_custom.tsv");
  auto m = load_similarity(dir / "sims.f32", dir / "sims.ids");
  ASSERT_EQ(set.members.size(), 100u);
  auto got = evaluate(set, m);
  auto want = oracle::retrieval(set, m);
  EXPECT_NEAR(got.map, want.map, 1e-9);
  EXPECT_NEAR(got.mr1, want.mr1, 1e-9);
  EXPECT_GE(got.mr1, 1.0);
}

TEST(Evaluate, StrictlyIncreasingTransformsKeepMetrics) {
  std::vector<std::function<double(double)>> transforms = {
      [](double x) { return 3 * x + 1; }, [](double x) { return std::exp(x); },
      [](double x) { return x * x * x; }, [](double x) { return std::atan(4 * x); }};
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    auto [set, m] = synthetic_eval_set(5, 5, 100 + seed);
    auto base = evaluate(set, m);
    for (const auto& f : transforms) {
      auto t = matrix_of(m.ids(), [&](std::size_t i, std::size_t j) { return f(m(i, j)); });
      auto r = evaluate(set, t);
      EXPECT_EQ(r.map, base.map);
      EXPECT_EQ(r.mr1, base.mr1);
    }
  }
}

TEST(Evaluate, MapOneIffRelevantFirst) {
  Rng rng(62);
  for (int trial = 0; trial < 50; ++trial) {
    auto [set, m] = synthetic_eval_set(4, 4, 200 + trial);
    bool separated = trial % 2 == 0;
    auto sims = matrix_of(m.ids(), [&](std::size_t i, std::size_t j) {
      if (separated) return relevant_pair(set.members[i], set.members[j]) ? 0.75 : 0.25;
      return m(i, j);
    });
    bool all_first = true;
    for (std::size_t q = 0; q < set.members.size(); ++q) {
      bool seen_irrelevant = false;
      for (auto r : rank_for_query(q, sims)) {
        bool rel = relevant_pair(set.members[q], set.members[r]);
        if (rel && seen_irrelevant) all_first = false;
        if (!rel) seen_irrelevant = true;
      }
    }
    EXPECT_EQ(evaluate(set, sims).map == 1.0, all_first);
  }
}

TEST(ClassifyPair, Examples) {
  auto sa = member("A", "s1", L::kVersion, true);
  EXPECT_EQ(classify_pair(sa, member("A", "s2", L::kVersion, true)), PairClass::kShsPositive);
  EXPECT_EQ(classify_pair(sa, member("B", "s3", L::kVersion, true)), PairClass::kShsNegative);
  EXPECT_EQ(classify_pair(sa, member("A", "y", L::kVersion, false)), PairClass::kYtPositive);
  EXPECT_EQ(classify_pair(sa, member("A", "y", L::kMatch, false)), PairClass::kYtMatch);
  EXPECT_EQ(classify_pair(sa, member("A", "y", L::kNoMusic, false)), PairClass::kYtNoMusic);
  EXPECT_EQ(classify_pair(sa, member("A", "y", L::kNonVersion, false)), PairClass::kYtNegative);
  EXPECT_FALSE(classify_pair(sa, member("B", "y", L::kVersion, false)));
  EXPECT_FALSE(classify_pair(member("A", "y", L::kVersion, false), sa));
}

TEST(PairClassStats, SupportsSumToEvaluatedPairs) {
  auto [set, m] = synthetic_eval_set(7, 5, 71);
  auto samples = pair_class_samples(set, m);
  std::size_t total = 0;
  for (const auto& [c, xs] : samples) total += xs.size();
  std::size_t expected = 0;
  for (std::size_t a = 0; a < set.members.size(); ++a) {
    for (std::size_t b = 0; b < set.members.size(); ++b) {
      if (a != b && classify_pair(set.members[a], set.members[b])) ++expected;
    }
  }
  EXPECT_EQ(total, expected);
  // Two seeds per work: ordered seed-seed pairs.
  EXPECT_EQ(samples[PairClass::kShsPositive].size(), 7u * 2u);
  EXPECT_EQ(samples[PairClass::kShsNegative].size(), 14u * 12u);
}

TEST(PairClassStats, DegenerateClasses) {
  BenchmarkSet s;
  s.members = {member("A", "s1", L::kVersion, true), member("A", "y1", L::kVersion, false),
               member("A", "y2", L::kMatch, false), member("A", "y3", L::kMatch, false)};
  auto m = matrix_of(ids_of(s), [](std::size_t i, std::size_t j) { return i == 0 && j == 1 ? 0.4 : 0.6; });
  auto st = pair_class_stats(s, m);
  EXPECT_EQ(st[PairClass::kYtPositive].support, 1u);
  EXPECT_EQ(*st[PairClass::kYtPositive].mean, 0.4);
  EXPECT_FALSE(st[PairClass::kYtPositive].std);
  EXPECT_EQ(*st[PairClass::kYtMatch].std, 0.0);
  EXPECT_EQ(st[PairClass::kShsNegative].support, 0u);
  EXPECT_FALSE(st[PairClass::kShsNegative].mean);
}

TEST(GroupedStats, SignificanceAndDegenerateGroups) {
  BenchmarkSet s;
  std::vector<double> seed_pair;
  for (int w = 0; w < 6; ++w) {
    std::string W = "W" + std::to_string(w);
    s.members.push_back(member(W, "s" + std::to_string(10 * w), L::kVersion, true));
    s.members.push_back(member(W, "s" + std::to_string(10 * w + 1), L::kVersion, true));
    s.members.push_back(member(W, "d" + std::to_string(w), L::kVersion, false, "song_drum_only"));
    s.members.push_back(member(W, "n" + std::to_string(w), L::kNonVersion, false, "song_same_artist"));
  }
  s.members.push_back(member("W0", "x0", L::kVersion, false, "song_medley"));
  s.members.push_back(member("W0", "z0", L::kNoMusic, false, "video_with_non_music"));
  // Five-level jitter balanced within every work and across works.
  auto m = matrix_of(ids_of(s), [&](std::size_t i, std::size_t j) {
    const auto &a = s.members[i], &b = s.members[j];
    double e = 0.004 * static_cast<double>(static_cast<int>((i + 2 * j) % 5) - 2);
    if (a.record.work_id != b.record.work_id) return 0.1 + e;
    if (a.is_seed() && b.is_seed()) return 0.9 + e;
    if (b.record.video_id[0] == 'd' || a.record.video_id[0] == 'd') return 0.5 + e;
    return 0.1 + e;
  });
  auto groups = grouped_uncertainty_stats(s, m, 0.01);
  ASSERT_EQ(groups.size(), 3u);
  for (const auto& g : groups) {
    if (g.uncertainty_class == "song_drum_only") {
      EXPECT_EQ(g.baseline, PairClass::kShsPositive);
      EXPECT_EQ(g.summary.support, 12u);
      EXPECT_TRUE(g.significant);
      EXPECT_LT(*g.p, 0.01);
    } else if (g.uncertainty_class == "song_same_artist") {
      EXPECT_EQ(g.baseline, PairClass::kShsNegative);
      EXPECT_FALSE(g.significant);
      EXPECT_FALSE(g.degenerate);
    } else {
      EXPECT_EQ(g.uncertainty_class, "song_medley");
      EXPECT_EQ(g.summary.support, 2u);
    }
  }
}

TEST(GroupedStats, SingleValueGroupIsFlagged) {
  BenchmarkSet s;
  s.members = {member("A", "s1", L::kVersion, true), member("A", "s2", L::kVersion, true),
               member("B", "s3", L::kVersion, true), member("B", "y", L::kVersion, false, "song_medley")};
  auto m = matrix_of(ids_of(s), [](std::size_t i, std::size_t j) { return 0.1 * static_cast<double>(i + j); });
  auto groups = grouped_uncertainty_stats(s, m);
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_TRUE(groups[0].degenerate);
  EXPECT_EQ(groups[0].summary.support, 1u);
  EXPECT_FALSE(groups[0].summary.mean);
  EXPECT_FALSE(groups[0].p);
  EXPECT_FALSE(groups[0].significant);
}

TEST(GroupedStats, SameSampleAsBaselineNotSignificant) {
  auto [set, m] = synthetic_eval_set(10, 5, 91);
  for (auto& mem : set.members) {
    if (!mem.is_seed()) mem.uncertainty_class = "song_same_genre";
  }
  auto groups = grouped_uncertainty_stats(set, m);
  for (const auto& g : groups) {
    if (g.p) {
      EXPECT_EQ(g.significant, *g.p < 0.01);
    }
  }
}

// assemble_benchmark

struct AssemblyInput {
  std::vector<VersionRecord> candidates;
  std::vector<LabelRecord> labels;
  std::vector<VersionRecord> seed;
  std::map<std::string, std::string> queries;
};

VersionRecord rec(const std::string& work, const std::string& version, const std::string& vid, Source src) {
  VersionRecord r;
  r.work_id = work;
  r.version_id = version;
  r.video_id = vid;
  r.duration_s = 100;
  r.source = src;
  return r;
}

AssemblyInput assembly_input() {
  AssemblyInput in;
  for (const char* w : {"A", "B"}) {
    std::string W = w;
    for (int v : {10, 9, 30}) in.seed.push_back(rec(W, std::to_string(v), W + "s" + std::to_string(v), Source::kSeed));
    in.queries[W] = W + "s30";
    const std::pair<const char*, std::optional<L>> cands[] = {
        {"c1", L::kVersion}, {"c2", L::kNonVersion}, {"c3", std::nullopt}};
    for (const auto& [c, label] : cands) {
      in.candidates.push_back(rec(W, W + c, W + c, Source::kWebCandidate));
      LabelRecord l;
      l.work_id = W;
      l.video_id = W + c;
      l.label = label;
      in.labels.push_back(l);
    }
  }
  return in;
}

TEST(AssembleBenchmark, Yt2QAddsQueryAndLowestOtherSeed) {
  auto in = assembly_input();
  auto s = assemble_benchmark(in.candidates, in.labels, in.seed, in.queries, BenchmarkVariant::kYt2Q);
  EXPECT_EQ(ids_of(s), (std::vector<std::string>{"As9", "As30", "Ac1", "Ac2", "Bs9", "Bs30", "Bc1", "Bc2"}));
  EXPECT_EQ(s.exclusions_applied.size(), 2u);
}

TEST(AssembleBenchmark, YtAllQAndCustom) {
  auto in = assembly_input();
  auto all = assemble_benchmark(in.candidates, in.labels, in.seed, in.queries, BenchmarkVariant::kYtAllQ);
  EXPECT_EQ(all.members.size(), 10u);
  EXPECT_EQ(all.members[0].record.version_id, "9");
  auto custom = assemble_benchmark(in.candidates, in.labels, in.seed, in.queries, BenchmarkVariant::kCustom);
  EXPECT_EQ(ids_of(custom), (std::vector<std::string>{"Ac1", "Ac2", "Bc1", "Bc2"}));
}

TEST(AssembleBenchmark, ExclusionsApplyEverywhere) {
  auto in = assembly_input();
  auto s = assemble_benchmark(in.candidates, in.labels, in.seed, in.queries, BenchmarkVariant::kYt2Q,
                              {"As9", "Bc2"});
  EXPECT_EQ(ids_of(s), (std::vector<std::string>{"As10", "As30", "Ac1", "Ac2", "Bs9", "Bs30", "Bc1"}));
}

TEST(AssembleBenchmark, AllSeedsExcludedIsAnError) {
  auto in = assembly_input();
  try {
    assemble_benchmark(in.candidates, in.labels, in.seed, in.queries, BenchmarkVariant::kYtAllQ,
                       {"Bs9", "Bs10", "Bs30"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("B"), std::string::npos);
  }
}

TEST(AssembleBenchmark, WorkWithoutRelevantMemberIsAnError) {
  auto in = assembly_input();
  in.seed.erase(std::remove_if(in.seed.begin(), in.seed.end(),
                               [](const auto& v) { return v.work_id == "A" && v.version_id != "30"; }),
                in.seed.end());
  in.labels[0].label = L::kNoMusic;
  EXPECT_THROW(assemble_benchmark(in.candidates, in.labels, in.seed, in.queries, BenchmarkVariant::kYt2Q), Error);
}

TEST(AssembleBenchmark, TsvRoundTrip) {
  auto in = assembly_input();
  in.labels[0].uncertainty_class = "song_instrumental";
  auto s = assemble_benchmark(in.candidates, in.labels, in.seed, in.queries, BenchmarkVariant::kYtAllQ);
  auto text = write_benchmark_tsv(s);
  auto back = parse_benchmark_tsv(text, "b.tsv");
  EXPECT_EQ(write_benchmark_tsv(back), text);
  ASSERT_EQ(back.members.size(), s.members.size());
  for (std::size_t i = 0; i < s.members.size(); ++i) {
    EXPECT_EQ(back.members[i].record, s.members[i].record);
    EXPECT_EQ(back.members[i].label, s.members[i].label);
    EXPECT_EQ(back.members[i].uncertainty_class, s.members[i].uncertainty_class);
  }
}

}  // namespace
}  // namespace covbench
