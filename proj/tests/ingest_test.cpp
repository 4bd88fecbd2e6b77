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

#include <algorithm>
#include <cmath>
#include <limits>

#include "covbench/ingest.hpp"
#include "covbench/random.hpp"
#include "test_util.hpp"

namespace covbench {
namespace {

std::string crawl_line(const std::string& id, std::int64_t duration, const std::string& extra = "") {
  return R"({"video_id":")" + id + R"(","title":"t )" + id + R"(","channel":"c","duration_s":)" +
         std::to_string(duration) + R"(,"query":"q")" + extra + "}\n";
}

TEST(CrawlTest, DurationCapIsExclusive) {
  auto r = parse_crawl(crawl_line("a", 600) + crawl_line("b", 599));
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].video_id, "b");
  EXPECT_EQ(r.dropped_duration, 1u);
  EXPECT_EQ(parse_crawl(crawl_line("a", 600), 601).records.size(), 1u);
}

TEST(CrawlTest, DuplicatesCollapseToFirst) {
  auto r = parse_crawl(crawl_line("a", 100) + crawl_line("a", 200));
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].duration_s, 100);
  EXPECT_EQ(r.dropped_duplicate, 1u);
}

TEST(CrawlTest, MalformedLinesReportedWithLineNumbers) {
  auto r = parse_crawl(crawl_line("a", 1) + "{broken\n" + "[1,2]\n" + crawl_line("b", 2));
  EXPECT_EQ(r.records.size(), 2u);
  ASSERT_EQ(r.malformed.size(), 2u);
  EXPECT_EQ(r.malformed[0].line, 2u);
  EXPECT_EQ(r.malformed[1].line, 3u);
}

TEST(CrawlTest, MissingFieldNamesFieldAndLine) {
  try {
    parse_crawl(crawl_line("a", 1) + R"({"video_id":"b","title":"x","channel":"c","query":"q"})" "\n", 600, "crawl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSchema);
    EXPECT_NE(std::string(e.what()).find("crawl:2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("duration_s"), std::string::npos);
  }
  EXPECT_THROW(parse_crawl(crawl_line("a", -1)), Error);
}

TEST(CrawlTest, SerializeParseIsIdempotent) {
  auto first = parse_crawl(crawl_line("a", 10, R"(,"upload_date":"2021-01-02")") +
                           crawl_line("b", 20, R"(,"work_id":"W1")") + crawl_line("c\"q", 30));
  auto second = parse_crawl(serialize_crawl(first.records));
  EXPECT_EQ(first.records, second.records);
  EXPECT_EQ(parse_crawl(serialize_crawl(second.records)).records, second.records);
}

TEST(QueryTest, BaseTemplateFirstAndDeduplicated) {
  std::vector<std::string> none;
  auto q = formulate_queries("Metallica", "Enter Sandman", none);
  ASSERT_FALSE(q.empty());
  EXPECT_EQ(q[0], "Metallica Enter Sandman");
  EXPECT_NE(std::find(q.begin(), q.end(), "Enter Sandman Metallica"), q.end());

  std::vector<std::string> sugg = {"Metallica Enter Sandman", "enter sandman live"};
  auto q2 = formulate_queries("Metallica", "Enter Sandman", sugg);
  EXPECT_EQ(std::count(q2.begin(), q2.end(), "Metallica Enter Sandman"), 1);
  EXPECT_EQ(q2.back(), "enter sandman live");
  EXPECT_THROW(formulate_queries("  ", "x", none), Error);
}

TEST(QueryTest, SuggestionOrderPreserved) {
  std::vector<std::string> a = {"s1", "s2"}, b = {"s2", "s1"};
  auto qa = formulate_queries("P", "T", a);
  auto qb = formulate_queries("P", "T", b);
  EXPECT_NE(qa, qb);
  std::sort(qa.begin(), qa.end());
  std::sort(qb.begin(), qb.end());
  EXPECT_EQ(qa, qb);
}

TEST(EmbeddingTest, SaveLoadIsBitExact) {
  testing::TempDir dir;
  Rng rng(1);
  std::vector<float> values(5 * 3);
  for (auto& v : values) v = static_cast<float>(rng.normal());
  values[4] = -0.0f;
  values[7] = std::numeric_limits<float>::denorm_min();
  EmbeddingStore store(3, values, std::vector<std::string>{"a", "b", "c", "d", "e"});
  save_embeddings(store, dir / "e.f32", dir / "e.idx");
  auto loaded = load_embeddings(dir / "e.f32", dir / "e.idx");
  EXPECT_EQ(loaded.dim(), 3u);
  EXPECT_TRUE(loaded == store);
  EXPECT_TRUE(std::signbit(loaded.at("b")[1]));
}

TEST(EmbeddingTest, ExplicitIndexAndErrors) {
  std::vector<float> v = {1, 2, 3, 4, 5, 6};
  EmbeddingStore s(2, v, std::vector<std::pair<std::string, std::size_t>>{{"x", 2}, {"y", 0}});
  EXPECT_EQ(s.at("x")[0], 5.0f);
  EXPECT_THROW(EmbeddingStore(2, v, std::vector<std::pair<std::string, std::size_t>>{{"x", 5}}), Error);
  EXPECT_THROW(EmbeddingStore(2, v, std::vector<std::pair<std::string, std::size_t>>{{"x", 1}, {"y", 1}}),
               Error);
  v[3] = std::nanf("");
  try {
    EmbeddingStore(2, v, std::vector<std::string>{"a", "b", "c"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
  EXPECT_THROW(s.at("zzz"), Error);
}

TEST(EmbeddingTest, LengthMismatchRejected) {
  testing::TempDir dir;
  write_file_atomic(dir / "e.f32", std::string(4 * 7, '\0'));
  write_file_atomic(dir / "e.idx", "a\nb\n");
  EXPECT_THROW(load_embeddings(dir / "e.f32", dir / "e.idx"), Error);
  write_file_atomic(dir / "e.idx", "a\t0\nb\t5\n");
  EXPECT_THROW(load_embeddings(dir / "e.f32", dir / "e.idx", 1), Error);
}

std::vector<VersionRecord> sample_versions(std::size_t n) {
  std::vector<VersionRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    VersionRecord v;
    v.work_id = "W" + std::to_string(i % 7);
    v.version_id = std::to_string(i);
    v.video_id = "vid" + std::to_string(i);
    v.title = i % 3 ? "Title\twith tab" : "Café ünïcode";
    v.performer = "P" + std::to_string(i);
    v.channel = i % 5 ? "chan" : "multi\nline";
    v.duration_s = static_cast<std::int64_t>(i * 3);
    if (i % 2) v.upload_date = "2020-01-01";
    v.source = i % 4 ? Source::kWebCandidate : Source::kSeed;
    out.push_back(v);
  }
  return out;
}

TEST(DatasetTest, RoundTripIsLossless) {
  testing::TempDir dir;
  Dataset ds;
  ds.versions = sample_versions(900);
  for (std::size_t i = 0; i < 30; ++i) {
    LabelRecord l;
    l.work_id = "W1";
    l.video_id = "vid" + std::to_string(i);
    if (i % 3) l.group = static_cast<SamplingGroup>(i % 3);
    if (i % 5) l.label = static_cast<RelevanceLabel>(i % 4);
    l.uncertainty_class = i % 2 ? "song_medley" : "";
    l.origin = l.label ? LabelOrigin::kVote : LabelOrigin::kUndecided;
    ds.labels.push_back(l);
  }
  write_dataset(dir.path(), ds);
  auto back = read_dataset(dir.path());
  EXPECT_EQ(back.versions, ds.versions);
  EXPECT_EQ(back.labels, ds.labels);
}

TEST(DatasetTest, SchemaDriftAndEmptyFiles) {
  testing::TempDir dir;
  std::string header;
  for (const auto& c : version_columns()) header += (header.empty() ? "" : "\t") + c;
  write_file_atomic(dir / "versions.tsv", header + "\n");
  EXPECT_TRUE(read_dataset(dir.path()).versions.empty());
  write_file_atomic(dir / "versions.tsv", header + "\textra\n");
  try {
    read_dataset(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSchema);
    EXPECT_NE(std::string(e.what()).find("extra"), std::string::npos);
  }
}

TEST(CandidateTest, WorkResolvedFromQueryOrField) {
  auto crawl = parse_crawl(crawl_line("a", 1) + crawl_line("b", 1, R"(,"work_id":"W9")")).records;
  std::vector<QueryRow> queries = {{"W1", "q"}};
  auto c = crawl_to_candidates(crawl, queries);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].work_id, "W1");
  EXPECT_EQ(c[1].work_id, "W9");
  EXPECT_EQ(c[0].source, Source::kWebCandidate);
  std::vector<QueryRow> other = {{"W1", "other"}};
  EXPECT_THROW(crawl_to_candidates(crawl, other), Error);
}

}  // namespace
}  // namespace covbench
