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

// covbench: command-line driver for the benchmark pipeline.

#include <pthread.h>

#include <csignal>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "covbench/config.hpp"
#include "covbench/pipeline.hpp"
#include "covbench/serve.hpp"
#include "covbench/synth.hpp"

namespace {

using covbench::Error;
using covbench::ErrorKind;
using covbench::PipelineConfig;

constexpr int kExitUsage = 1;
constexpr int kExitInternal = 9;

const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  usage error\n"
    "  2  configuration error\n"
    "  3  missing or unreadable input, or write failure\n"
    "  4  schema error in an input file\n"
    "  5  id mismatch between inputs\n"
    "  6  data error (invalid values, duplicates, empty sets)\n"
    "  7  external matcher failure\n"
    "  8  serve error (port in use, store lock held)\n"
    "  9  unexpected internal error\n";

// Flag name -> config key. Values given on the command line override the file.
const std::map<std::string, std::string> kOverrides = {
    {"work-dir", "work_dir"},
    {"seed", "seed"},
    {"crawl", "crawl"},
    {"embeddings", "embeddings"},
    {"assignments", "assignments"},
    {"expert", "expert"},
    {"vocab", "vocab"},
    {"sims", "sims"},
    {"exclusions", "exclusions"},
    {"matcher", "matcher"},
    {"aggregation", "music_aggregation"},
    {"variant", "variant"},
    {"alpha-level", "alpha_level"},
    {"model", "model"},
    {"k", "k"},
    {"duration-cap", "duration_cap_s"},
    {"threshold", "vote_threshold"},
    {"min-duration", "min_assignment_s"},
    {"significance", "significance"},
    {"rng-seed", "rng_seed"},
    {"port", "port"},
};

int serve(const PipelineConfig& cfg) {
  namespace cb = covbench;
  auto hits = cb::read_hits_csv(cb::detail::stage_input(cfg, cb::files::kHits, "hits"));
  auto votes = cb::read_votes_tsv(cb::detail::stage_input(cfg, cb::files::kVotes, "votes"));
  std::vector<cb::Assignment> assignments;
  if (!cfg.assignments.empty() && cb::fs::exists(cfg.assignments)) {
    assignments = cb::read_assignments_csv(cfg.assignments);
  }
  cb::fs::path expert = cfg.expert.empty() ? cfg.out("expert.tsv") : cfg.expert;
  cb::CurationStore store(std::move(hits), std::move(votes), std::move(assignments), expert,
                          cb::load_vocabulary(cfg));

  // Block termination signals here; a watcher thread turns them into stop().
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  httplib::Server server;
  cb::mount_routes(server, store);
  if (!server.bind_to_port("127.0.0.1", static_cast<int>(cfg.port))) {
    throw Error(ErrorKind::kServe, "cannot listen on port " + std::to_string(cfg.port));
  }
  std::thread watcher([&server, set] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  std::cout << "serve: listening on http://127.0.0.1:" << cfg.port << " (expert labels in "
            << expert.string() << ")" << std::endl;
  server.listen_after_bind();
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  std::cout << "serve: stopped" << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covbench: cover song benchmark curation and evaluation pipeline"};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("-c,--config", config_path, "Configuration file (key = value lines)");
  std::map<std::string, std::string> values;
  for (const auto& [flag, key] : kOverrides) {
    app.add_option("--" + flag, values[flag], "Overrides config key '" + key + "'");
  }

  using Stage = std::function<std::string(const PipelineConfig&)>;
  const std::vector<std::tuple<std::string, std::string, Stage>> stages = {
      {"queries", "Build search queries from the seed versions", covbench::cmd_queries},
      {"ingest", "Turn the crawl into candidate versions", covbench::cmd_ingest},
      {"score", "Compute music and text scores per candidate", covbench::cmd_score},
      {"sample", "Select candidates per uncertainty group", covbench::cmd_sample},
      {"hits", "Build annotation tasks", covbench::cmd_hits},
      {"votes", "Validate assignments and aggregate votes", covbench::cmd_votes},
      {"curate", "Merge expert labels into the annotated dataset", covbench::cmd_curate},
      {"agreement", "Compute worker/expert agreement", covbench::cmd_agreement},
      {"benchmark", "Assemble a benchmark set", covbench::cmd_benchmark},
      {"eval", "Evaluate similarities on a benchmark set", covbench::cmd_eval},
  };
  std::map<std::string, Stage> stage_fns;
  for (const auto& [name, help, fn] : stages) {
    app.add_subcommand(name, help);
    stage_fns[name] = fn;
  }
  app.add_subcommand("run", "Run every batch stage in order");
  app.add_subcommand("serve", "Serve the curation REST interface");

  auto* vocab_cmd = app.add_subcommand("vocab", "Print the uncertainty vocabulary as JSON");
  std::string vocab_out;
  vocab_cmd->add_option("-o,--out", vocab_out, "Write to a file instead of stdout");

  auto* synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic corpus with annotations");
  std::string synth_out;
  covbench::SynthOptions synth_opt;
  synth_cmd->add_option("-o,--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--works", synth_opt.works, "Number of works")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--per-work", synth_opt.crawl_per_work, "Crawl results per work")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--synth-seed", synth_opt.seed, "Generator seed");

  auto* synth_eval_cmd = app.add_subcommand("synth-eval", "Write a small benchmark with seeded similarities");
  std::string synth_eval_out;
  std::size_t eval_works = 20, eval_per_work = 5;
  std::uint64_t eval_seed = 11;
  synth_eval_cmd->add_option("-o,--out", synth_eval_out, "Output directory")->required();
  synth_eval_cmd->add_option("--works", eval_works, "Number of works")->check(CLI::PositiveNumber);
  synth_eval_cmd->add_option("--members", eval_per_work, "Members per work")->check(CLI::Range(2, 1000));
  synth_eval_cmd->add_option("--synth-seed", eval_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    PipelineConfig cfg;
    if (!config_path.empty()) {
      covbench::require_file(config_path, "config");
      cfg = PipelineConfig::load(config_path);
    }
    for (const auto& [flag, key] : kOverrides) {
      if (app.count("--" + flag) > 0) cfg.set(key, values[flag]);
    }
    cfg.validate();

    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (auto it = stage_fns.find(name); it != stage_fns.end()) {
      std::cout << it->second(cfg) << std::endl;
    } else if (name == "run") {
      for (const auto& line : covbench::cmd_run(cfg)) std::cout << line << std::endl;
    } else if (name == "serve") {
      return serve(cfg);
    } else if (name == "vocab") {
      std::string json = covbench::load_vocabulary(cfg).to_json().dump(2) + "\n";
      if (vocab_out.empty()) {
        std::cout << json;
      } else {
        covbench::write_file_atomic(vocab_out, json);
        std::cout << "vocab: written to " << vocab_out << std::endl;
      }
    } else if (name == "synth") {
      covbench::fs::path scratch = covbench::fs::path(synth_out) / "out";
      std::cout << covbench::write_synthetic_fixture(synth_out, scratch, synth_opt) << std::endl;
      covbench::fs::remove_all(scratch);
    } else if (name == "synth-eval") {
      auto [set, sims] = covbench::synthetic_eval_set(eval_works, eval_per_work, eval_seed);
      covbench::fs::create_directories(synth_eval_out);
      covbench::fs::path dir(synth_eval_out);
      covbench::write_file_atomic(dir / "benchmark_custom.tsv", covbench::write_benchmark_tsv(set));
      covbench::save_similarity(sims, dir / "sims.f32", dir / "sims.ids");
      std::cout << "synth-eval: " << set.members.size() << " members" << std::endl;
    }
  } catch (const Error& e) {
    std::cerr << "covbench: " << covbench::error_kind_name(e.kind()) << " error: " << e.what() << std::endl;
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "covbench: internal error: " << e.what() << std::endl;
    return kExitInternal;
  }
  return 0;
}
