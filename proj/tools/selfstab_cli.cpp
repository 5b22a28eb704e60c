/*
 * Copyright (c) 2026, the selfstab authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
*/

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "selfstab/experiment.hpp"

namespace {

using selfstab::ExperimentSpec;

void add_instance_options(CLI::App* cmd, ExperimentSpec& spec,
                          std::vector<std::string>& script_overrides) {
  cmd->add_option("--protocol", spec.protocol,
                  "basic2p | read-checking | weak-rendezvous | "
                  "quasi-rendezvous | naive-pairing");
  cmd->add_option("--topology", spec.topology,
                  "ring(n) | line(n) | star(n) | complete(n) | "
                  "gnp(n,p,seed) | inline 'n .. e ..' text | file path");
  cmd->add_option("--alphabet", spec.alphabet, "message alphabet symbols");
  cmd->add_option("--script", spec.script, "source script for every process");
  cmd->add_option("--script-for", script_overrides,
                  "per-process script as <pid>:<word> (repeatable)");
}

void add_run_options(CLI::App* cmd, ExperimentSpec& spec,
                     std::string& schedule_file, uint64_t& master_seed) {
  cmd->add_option("--scheduler", spec.scheduler,
                  "round-robin | random-fair | bounded-delay | scripted");
  cmd->add_option("--delay-bound", spec.delay_bound,
                  "k for the bounded-delay adversary (starvation <= k*n)");
  cmd->add_option("--schedule-file", schedule_file,
                  "whitespace-separated process ids for scripted runs");
  cmd->add_option("--seed", master_seed,
                  "master seed (derives scheduler and corruption seeds)");
  cmd->add_option("--steps", spec.steps, "atomic steps to execute");
  cmd->add_option("--corrupt", spec.corrupt_fraction,
                  "per-item corruption probability for the initial state");
}

void apply_overrides(ExperimentSpec& spec,
                     const std::vector<std::string>& overrides) {
  for (const std::string& s : overrides) {
    auto colon = s.find(':');
    if (colon == std::string::npos)
      throw selfstab::UsageError("--script-for expects <pid>:<word>");
    spec.script_overrides[std::stoi(s.substr(0, colon))] = s.substr(colon + 1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Simulator and verifier for self-stabilizing link-register "
      "communication protocols (read checking, weak rendezvous, quasi "
      "rendezvous)"};
  app.require_subcommand(1);

  ExperimentSpec spec;
  std::vector<std::string> script_overrides;
  std::string schedule_file;
  std::string out_prefix;
  std::string trace_path;
  uint64_t master_seed = 0;
  int n_min = 2, n_max = 20;
  uint64_t bench_seeds = 100;

  CLI::App* run_cmd =
      app.add_subcommand("run", "simulate, check and report one experiment");
  add_instance_options(run_cmd, spec, script_overrides);
  add_run_options(run_cmd, spec, schedule_file, master_seed);
  run_cmd->add_option("--sched-seed", spec.sched_seed,
                      "scheduler seed (overrides --seed derivation)");
  run_cmd->add_option("--corrupt-seed", spec.corrupt_seed,
                      "corruption seed (overrides --seed derivation)");
  run_cmd->add_option("--out", out_prefix, "artifact path prefix");

  CLI::App* check_cmd =
      app.add_subcommand("check", "re-check an existing trace artifact");
  check_cmd->add_option("--trace", trace_path, "trace file to re-check")
      ->required();
  check_cmd->add_option("--out", out_prefix, "artifact path prefix");

  CLI::App* explore_cmd = app.add_subcommand(
      "explore", "exhaustively verify convergence and closure");
  add_instance_options(explore_cmd, spec, script_overrides);
  explore_cmd->add_option("--cap", spec.cap,
                          "largest admissible configuration count");
  explore_cmd->add_option("--out", out_prefix, "artifact path prefix");

  CLI::App* bench_cmd = app.add_subcommand(
      "bench", "measure stabilization rounds across system sizes");
  add_instance_options(bench_cmd, spec, script_overrides);
  add_run_options(bench_cmd, spec, schedule_file, master_seed);
  bench_cmd->add_option("--n-min", n_min, "smallest process count");
  bench_cmd->add_option("--n-max", n_max, "largest process count");
  bench_cmd->add_option("--bench-seeds", bench_seeds,
                        "corrupted starts per size");
  bench_cmd->add_option("--out", out_prefix, "artifact path prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    apply_overrides(spec, script_overrides);
    CLI::App* active = run_cmd->parsed()     ? run_cmd
                       : bench_cmd->parsed() ? bench_cmd
                                             : nullptr;
    if (active && active->count("--seed")) {
      // explicit per-purpose seeds win over the master-seed derivation
      if (!run_cmd->parsed() || !run_cmd->count("--sched-seed"))
        spec.sched_seed = selfstab::Rng::derive(master_seed, 1);
      if (!run_cmd->parsed() || !run_cmd->count("--corrupt-seed"))
        spec.corrupt_seed = selfstab::Rng::derive(master_seed, 2);
    }
    if (!schedule_file.empty()) {
      std::ifstream in(schedule_file);
      if (!in)
        throw selfstab::UsageError("cannot open schedule file '" +
                                   schedule_file + "'");
      spec.schedule = selfstab::parse_schedule(in);
      spec.scheduler = "scripted";
    }
    if (run_cmd->parsed())
      return selfstab::cmd_run(spec, out_prefix, std::cout);
    if (check_cmd->parsed())
      return selfstab::cmd_check(trace_path, out_prefix, std::cout);
    if (explore_cmd->parsed())
      return selfstab::cmd_explore(spec, out_prefix, std::cout);
    if (bench_cmd->parsed())
      return selfstab::cmd_bench(spec, n_min, n_max, bench_seeds, out_prefix,
                                 std::cout);
  } catch (const selfstab::SizeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return selfstab::kTooLarge;
  } catch (const selfstab::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return selfstab::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return selfstab::kUsage;
  }
  return selfstab::kUsage;
}
