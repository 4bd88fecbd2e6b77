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

// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "covbench/agreement.hpp"
#include "covbench/evaluation.hpp"
#include "covbench/pipeline.hpp"
#include "covbench/random.hpp"
#include "covbench/sampling.hpp"
#include "covbench/stats.hpp"
#include "covbench/synth.hpp"
#include "oracles.hpp"

namespace {

using namespace covbench;

struct Outcome {
  enum { kPass, kFail, kNotRun } state = kPass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

Outcome metric_oracle() {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  std::size_t bad = 0;
  double ap_sum = 0, oracle_sum = 0;
  for (int i = 0; i < 1000; ++i) {
    std::size_t n = 1 + rng.below(50);
    std::vector<bool> flags(n);
    for (std::size_t k = 0; k < n; ++k) flags[k] = rng.below(3) == 0;
    flags[rng.below(n)] = true;
    double got = average_precision(flags), want = oracle::average_precision(flags);
    if (std::fabs(got - want) > 1e-12) ++bad;
    ap_sum += got;
    oracle_sum += want;
  }
  if (std::fabs(ap_sum / 1000 - oracle_sum / 1000) > 1e-12) ++bad;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto [set, m] = synthetic_eval_set(3 + seed % 6, 3 + seed % 5, 5000 + seed);
    auto got = evaluate(set, m);
    auto want = oracle::retrieval(set, m);
    if (std::fabs(got.map - want.map) > 1e-12 || std::fabs(got.mr1 - want.mr1) > 1e-12) ++bad;
  }
  double secs = seconds_since(t0);
  Outcome o;
  o.detail = "1000 rankings + 20 benchmark sets, " + std::to_string(bad) + " mismatches, " + fmt(secs) + " s";
  if (bad != 0 || secs >= 5.0) o.state = Outcome::kFail;
  return o;
}

Outcome sampling_oracle() {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(2002);
  std::size_t bad = 0, ties = 0;
  for (int i = 0; i < 200; ++i) {
    auto recs = oracle::random_records(rng, "w", i % 2 == 0);
    std::size_t k = 1 + static_cast<std::size_t>(i % 4);
    if (select_groups(WorkScoreCloud("w", recs), k) != oracle::select_groups("w", recs, k)) ++bad;
    std::map<std::pair<double, double>, int> seen;
    for (const auto& r : recs) {
      if (++seen[{r.s_music, r.s_text}] == 2) ++ties;
    }
  }
  double secs = seconds_since(t0);
  Outcome o;
  o.detail = "200 clouds (" + std::to_string(ties) + " duplicate points), " + std::to_string(bad) +
             " mismatches, " + fmt(secs) + " s";
  if (bad != 0 || secs >= 5.0) o.state = Outcome::kFail;
  return o;
}

Outcome statistics() {
  std::vector<std::string> failures;
  auto near = [&](const std::string& name, double got, double want, double tol) {
    if (!(std::fabs(got - want) <= tol)) failures.push_back(name);
  };
  {
    std::vector<double> x = {1, 2, 3, 4, 5}, y = {2, 3, 4, 5, 6};
    auto r = welch_t_test(x, y);
    near("welch t (1..5)", r.t, -1.0, 1e-9);
    near("welch p (1..5)", r.p, 0.34659350708733416, 1e-6);
  }
  {
    std::vector<double> x = {0.80, 0.81, 0.79, 0.80, 0.82}, y = {0.50, 0.51, 0.49, 0.52, 0.50, 0.48};
    auto r = welch_t_test(x, y);
    near("welch t (separated)", r.t, 39.46609980360192, 1e-9);
    near("welch p (separated)", r.p, 2.1474977887556986e-11, 1e-6);
    if (!(r.p < 0.01)) failures.push_back("separated samples not significant");
  }
  {
    std::vector<double> x = {0.25, 0.5, 0.75, 1.0};
    auto r = welch_t_test(x, x);
    if (r.t != 0.0 || r.p != 1.0) failures.push_back("identical samples not exactly (0, 1)");
  }
  {
    std::vector<int> x = {0, 1, 1, 2, 3, 3}, y = {0, 2, 1, 1, 3, 2};
    near("kendall tau", kendall_tau_b(std::span<const int>(x), std::span<const int>(y)), 9.0 / 13.0, 1e-9);
  }
  {
    RatingMatrix m = {{0, 0}, {1, 1}, {0, 1}, {1, 1}};
    near("alpha nominal toy", krippendorff_alpha(m, AlphaLevel::kNominal), 8.0 / 15.0, 1e-6);
    const std::optional<int> na;
    RatingMatrix m2 = {{0, 0, na}, {1, 1, 2}, {2, 3, 2}, {3, 3, 3}, {2, 1, 1}, {na, 2, 2}};
    near("alpha ordinal", krippendorff_alpha(m2, AlphaLevel::kOrdinal), 0.8125, 1e-6);
    near("alpha nominal", krippendorff_alpha(m2, AlphaLevel::kNominal), 0.5108695652173914, 1e-6);
    RatingMatrix perfect = {{0, 0, 0}, {3, 3, 3}, {1, 1}};
    if (krippendorff_alpha(perfect, AlphaLevel::kOrdinal) != 1.0) failures.push_back("perfect agreement not 1.0");
  }
  Outcome o;
  if (failures.empty()) {
    o.detail = "Welch, tau-b, alpha worked examples and degenerate cases";
  } else {
    o.state = Outcome::kFail;
    for (const auto& f : failures) o.detail += (o.detail.empty() ? "" : "; ") + f;
  }
  return o;
}

std::vector<std::string> ids(const std::vector<RankedCandidate>& r) {
  std::vector<std::string> out;
  for (const auto& c : r) out.push_back(c.video_id);
  return out;
}

Outcome invariance() {
  Rng rng(3003);
  std::size_t disagreement = 0, mutual = 0, metric = 0;
  for (int i = 0; i < 100; ++i) {
    auto recs = oracle::random_records(rng, "w", true);
    double c = static_cast<double>(rng.below(9)) / 16.0 - 0.25;
    auto moved = recs;
    for (auto& r : moved) {
      r.s_music += c;
      r.s_text += c;
    }
    WorkScoreCloud a("w", recs), b("w", moved);
    for (auto dir : {DisagreementDirection::kAudioOverText, DisagreementDirection::kTextOverAudio}) {
      if (ids(disagreement_rank(a, dir)) != ids(disagreement_rank(b, dir))) ++disagreement;
    }
  }
  for (int i = 0; i < 100; ++i) {
    auto recs = oracle::random_records(rng, "w", true);
    double dm = static_cast<double>(rng.below(9)) / 16.0 - 0.25;
    double dt = static_cast<double>(rng.below(9)) / 16.0 - 0.25;
    auto moved = recs;
    for (auto& r : moved) {
      r.s_music += dm;
      r.s_text += dt;
    }
    if (ids(mutual_rank(WorkScoreCloud("w", recs))) != ids(mutual_rank(WorkScoreCloud("w", moved)))) ++mutual;
  }
  const std::vector<std::function<double(double)>> transforms = {
      [](double x) { return 3 * x + 1; }, [](double x) { return std::exp(x); },
      [](double x) { return x * x * x; }, [](double x) { return std::atan(4 * x); }};
  for (int i = 0; i < 100; ++i) {
    auto [set, m] = synthetic_eval_set(4, 5, 7000 + static_cast<std::uint64_t>(i));
    auto base = evaluate(set, m);
    const auto& f = transforms[static_cast<std::size_t>(i) % transforms.size()];
    std::vector<double> v(m.values().size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = f(m.values()[j]);
    auto r = evaluate(set, SimilarityMatrix(m.ids(), v));
    if (r.map != base.map || r.mr1 != base.mr1) ++metric;
  }
  Outcome o;
  o.detail = "violations: disagreement " + std::to_string(disagreement) + "/100, mutual " +
             std::to_string(mutual) + "/100, metrics " + std::to_string(metric) + "/100";
  if (disagreement + mutual + metric != 0) o.state = Outcome::kFail;
  return o;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return out;
}

Outcome end_to_end() {
  fs::path fixture = fs::path(COVBENCH_SOURCE_DIR) / "tests" / "fixtures" / "synthetic";
  fs::path work = fs::temp_directory_path() / ("covbench_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  auto cfg = PipelineConfig::load(fixture / "config.toml");
  cfg.work_dir = work;
  auto t0 = std::chrono::steady_clock::now();
  cmd_run(cfg);
  double secs = seconds_since(t0);
  auto golden = snapshot(fixture / "golden");
  auto got = snapshot(work);
  fs::remove_all(work);
  std::size_t differing = 0;
  for (const auto& [name, bytes] : golden) {
    auto it = got.find(name);
    if (it == got.end() || it->second != bytes) ++differing;
  }
  differing += got.size() > golden.size() ? got.size() - golden.size() : 0;
  Outcome o;
  o.detail = std::to_string(golden.size()) + " golden files, " + std::to_string(differing) + " differ, " +
             fmt(secs) + " s";
  if (golden.empty() || differing != 0 || secs >= 30.0) o.state = Outcome::kFail;
  return o;
}

// Label and group totals of the published annotated dataset, when a copy in
// this toolkit's dataset layout is supplied. Agreement, benchmark sizes and
// similarity statistics need the upstream annotation and embedding files
// and are not checked here.
Outcome published_data() {
  const char* dir = std::getenv("COVBENCH_PUBLISHED_DIR");
  Outcome o;
  if (!dir || !fs::exists(fs::path(dir) / "labels.tsv")) {
    o.state = Outcome::kNotRun;
    o.detail = "published annotated dataset not present (set COVBENCH_PUBLISHED_DIR)";
    return o;
  }
  auto ds = read_dataset(dir);
  std::map<std::string, int> labels, groups;
  for (const auto& l : ds.labels) {
    if (l.label) ++labels[std::string(to_string(*l.label))];
    if (l.group) ++groups[std::string(to_string(*l.group))];
  }
  const std::map<std::string, int> want_labels = {{"match", 4}, {"version", 197}, {"non_version", 622}, {"no_music", 77}};
  bool ok = labels == want_labels && groups[std::string(to_string(SamplingGroup::kDisagrAudio))] == 293 &&
            groups[std::string(to_string(SamplingGroup::kDisagrText))] == 300 &&
            groups[std::string(to_string(SamplingGroup::kMutualUnc))] == 307;
  o.state = ok ? Outcome::kPass : Outcome::kFail;
  o.detail = "label and group totals checked; agreement, benchmark sizes and similarity statistics not checked";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric oracle equivalence", metric_oracle},
      {"sampling oracle equivalence", sampling_oracle},
      {"statistics validation", statistics},
      {"invariance suite", invariance},
      {"end-to-end fixture goldens", end_to_end},
      {"published data reproduction", published_data},
  };
  bool failed = false;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.state = Outcome::kFail;
      o.detail = std::string("error: ") + e.what();
    }
    const char* tag = o.state == Outcome::kPass ? "PASS" : o.state == Outcome::kFail ? "FAIL" : "NOT RUN";
    failed = failed || o.state == Outcome::kFail;
    std::cout << tag << "  " << name << ": " << o.detail << std::endl;
  }
  return failed ? 1 : 0;
}
