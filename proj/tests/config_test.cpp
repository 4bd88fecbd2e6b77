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

#include <functional>
#include <string>
#include <vector>

#include "covbench/config.hpp"
#include "test_util.hpp"

namespace covbench {
namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kData;
}

TEST(FlatToml, ParsesValuesCommentsAndEscapes) {
  auto kv = parse_flat_toml(
      "# header\n"
      "k = 4\n"
      "  matcher = \"awk -F'\\t' '{print 1}'\"  # trailing\n"
      "significance=0.05\r\n"
      "note = \"a # not a comment\\n\\\"q\\\"\"\n"
      "\n",
      "c.toml");
  EXPECT_EQ(kv.at("k"), "4");
  EXPECT_EQ(kv.at("matcher"), "awk -F'\t' '{print 1}'");
  EXPECT_EQ(kv.at("significance"), "0.05");
  EXPECT_EQ(kv.at("note"), "a # not a comment\n\"q\"");
  EXPECT_EQ(kv.size(), 4u);
}

TEST(FlatToml, RejectsMalformedInput) {
  for (const char* text : {"[table]\n", "k 3\n", "= 3\n", "k = \n", "k = \"open\n", "k = 1\nk = 2\n",
                           "k = \"x\" y\n", "k = \"\\q\"\n"}) {
    EXPECT_EQ(kind_of([&] { parse_flat_toml(text, "c.toml"); }), ErrorKind::kConfig) << text;
  }
}

TEST(FlatToml, ErrorNamesLine) {
  try {
    parse_flat_toml("a = 1\nb 2\n", "c.toml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("c.toml:2"), std::string::npos);
  }
}

TEST(PipelineConfigTest, Defaults) {
  PipelineConfig c;
  EXPECT_EQ(c.k, 3);
  EXPECT_EQ(c.vote_threshold, 3);
  EXPECT_EQ(c.min_assignment_s, 10);
  EXPECT_EQ(c.duration_cap_s, 600);
  EXPECT_EQ(c.significance, 0.01);
  EXPECT_EQ(c.matcher, "fuzzy");
  EXPECT_NO_THROW(c.validate());
}

TEST(PipelineConfigTest, LoadResolvesRelativePaths) {
  testing::TempDir dir;
  write_file_atomic(dir / "c.toml",
                    "seed = \"data/seed.tsv\"\nembeddings = \"/abs/emb.f32\"\nk = 2\nrng_seed = 9\n"
                    "sims = \"m/sims.f32\"\n");
  auto c = PipelineConfig::load(dir / "c.toml");
  EXPECT_EQ(c.seed, dir.path() / "data/seed.tsv");
  EXPECT_EQ(c.embeddings, "/abs/emb.f32");
  EXPECT_EQ(c.embeddings_index(), "/abs/emb.idx");
  EXPECT_EQ(c.sims_ids(), dir.path() / "m/sims.ids");
  EXPECT_EQ(c.k, 2);
  EXPECT_EQ(c.rng_seed, 9u);
}

TEST(PipelineConfigTest, BadValues) {
  PipelineConfig c;
  EXPECT_EQ(kind_of([&] { c.set("k", "three"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([&] { c.set("rng_seed", "-1"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([&] { c.set("nope", "1"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([&] { c.set("significance", "x"); }), ErrorKind::kConfig);
  for (auto [key, value] : std::vector<std::pair<std::string, std::string>>{
           {"k", "0"}, {"port", "70000"}, {"significance", "1"}, {"music_aggregation", "median"},
           {"alpha_level", "ratio"}, {"vote_threshold", "-2"}}) {
    PipelineConfig d;
    d.set(key, value);
    EXPECT_EQ(kind_of([&] { d.validate(); }), ErrorKind::kConfig) << key;
  }
}

TEST(PipelineConfigTest, MissingFiles) {
  testing::TempDir dir;
  EXPECT_EQ(kind_of([&] { PipelineConfig::load(dir / "absent.toml"); }), ErrorKind::kIo);
  EXPECT_EQ(kind_of([&] { require_file({}, "seed"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([&] { require_file(dir / "x", "seed"); }), ErrorKind::kIo);
  write_file_atomic(dir / "x", "");
  EXPECT_NO_THROW(require_file(dir / "x", "seed"));
}

}  // namespace
}  // namespace covbench
