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

#ifndef SELFSTAB_EXPERIMENT_HPP_
#define SELFSTAB_EXPERIMENT_HPP_

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "selfstab/checker.hpp"
#include "selfstab/config.hpp"
#include "selfstab/explorer.hpp"
#include "selfstab/scheduler.hpp"
#include "selfstab/trace_io.hpp"

namespace selfstab {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kViolations = 2,   // unhealed violations, missing liveness, counterexample
  kEmptyLegit = 3,   // exhaustive verification found no legitimate behavior
  kTooLarge = 4,     // instance above the exhaustive-exploration cap
  kUsage = 64
};

/**
 * Everything that determines a run. Serializes to flat `key = value`
 * text with the topology and scripts fully resolved, so the canonical
 * form replays identically anywhere; the FNV-1a hash of that text
 * stamps every artifact.
 */
struct ExperimentSpec {
  std::string protocol = "read-checking";  // protocol name or "naive-pairing"
  std::string topology = "line(2)";        // generator, inline text, or path
  std::string alphabet = "abc";
  std::string script = "abc";              // default source script
  std::map<int, std::string> script_overrides;
  std::string scheduler = "round-robin";
  int delay_bound = 3;
  std::vector<int> schedule;               // for scripted runs
  uint64_t sched_seed = 0;
  uint64_t steps = 100000;
  double corrupt_fraction = 0.0;
  uint64_t corrupt_seed = 0;
  uint64_t cap = 10000000;                 // explorer node cap
};

// ---------------------------------------------------------------------------
// Topology resolution.

inline Topology resolve_topology(const std::string& text) {
  auto call = [&](const std::string& name) -> std::optional<std::string> {
    if (text.rfind(name + "(", 0) == 0 && text.back() == ')')
      return text.substr(name.size() + 1, text.size() - name.size() - 2);
    return std::nullopt;
  };
  try {
    if (auto arg = call("ring")) return make_ring(std::stoi(*arg));
    if (auto arg = call("line")) return make_line(std::stoi(*arg));
    if (auto arg = call("star")) return make_star(std::stoi(*arg));
    if (auto arg = call("complete")) return make_complete(std::stoi(*arg));
    if (auto arg = call("gnp")) {
      std::string s = *arg;
      std::replace(s.begin(), s.end(), ',', ' ');
      std::istringstream in(s);
      int n;
      double p;
      uint64_t seed;
      if (!(in >> n >> p >> seed))
        throw UsageError("gnp needs (n, p, seed)");
      return make_gnp(n, p, seed);
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("topology: ") + e.what());
  }
  if (text.rfind("n ", 0) == 0) return parse_topology(text);
  std::ifstream in(text);
  if (!in) throw UsageError("cannot open topology file '" + text + "'");
  return parse_topology(in);
}

// ---------------------------------------------------------------------------
// Instance construction and canonical serialization.

struct Instance {
  System system;
  ExperimentSpec spec;  // with topology and scripts resolved
};

inline Instance build_instance(const ExperimentSpec& spec) {
  Topology topo = resolve_topology(spec.topology);
  Alphabet sigma(spec.alphabet);
  std::vector<Word> scripts;
  for (int p = 0; p < topo.process_count(); ++p) {
    auto it = spec.script_overrides.find(p);
    scripts.push_back(word_from_string(
        sigma, it != spec.script_overrides.end() ? it->second : spec.script));
  }
  ExperimentSpec resolved = spec;
  {
    std::ostringstream out;
    write_topology(out, topo);
    std::string t = out.str();
    std::replace(t.begin(), t.end(), '\n', ' ');
    while (!t.empty() && t.back() == ' ') t.pop_back();
    resolved.topology = t;
  }
  resolved.script_overrides.clear();
  for (int p = 0; p < topo.process_count(); ++p)
    resolved.script_overrides[p] = word_to_string(sigma, scripts[p]);
  System system =
      spec.protocol == "naive-pairing"
          ? System::make_naive_pairing(std::move(topo), sigma, scripts)
          : System::make(protocol_from_name(spec.protocol), std::move(topo),
                         sigma, scripts);
  return Instance{std::move(system), std::move(resolved)};
}

inline std::vector<std::string> spec_lines(const ExperimentSpec& spec) {
  std::vector<std::string> lines;
  auto add = [&](const std::string& k, const std::string& v) {
    lines.push_back(k + " = " + v);
  };
  add("protocol", spec.protocol);
  add("topology", spec.topology);
  add("alphabet", spec.alphabet);
  if (spec.script_overrides.empty()) add("script", spec.script);
  for (auto& [p, s] : spec.script_overrides)
    add("script." + std::to_string(p), s);
  add("scheduler", spec.scheduler);
  if (spec.scheduler == "bounded-delay")
    add("delay-bound", std::to_string(spec.delay_bound));
  if (spec.scheduler == "scripted") {
    std::ostringstream out;
    for (size_t i = 0; i < spec.schedule.size(); ++i)
      out << (i ? " " : "") << spec.schedule[i];
    add("schedule", out.str());
  }
  add("sched-seed", std::to_string(spec.sched_seed));
  add("steps", std::to_string(spec.steps));
  {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", spec.corrupt_fraction);
    add("corrupt", buf);
  }
  add("corrupt-seed", std::to_string(spec.corrupt_seed));
  add("cap", std::to_string(spec.cap));
  return lines;
}

inline ExperimentSpec parse_spec_lines(const std::vector<std::string>& lines) {
  ExperimentSpec spec;
  spec.script_overrides.clear();
  for (const std::string& line : lines) {
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("spec line without '=': " + line);
    auto trim = [](std::string s) {
      while (!s.empty() && s.front() == ' ') s.erase(0, 1);
      while (!s.empty() && s.back() == ' ') s.pop_back();
      return s;
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "protocol") spec.protocol = value;
    else if (key == "topology") spec.topology = value;
    else if (key == "alphabet") spec.alphabet = value;
    else if (key == "script") spec.script = value;
    else if (key.rfind("script.", 0) == 0)
      spec.script_overrides[std::stoi(key.substr(7))] = value;
    else if (key == "scheduler") spec.scheduler = value;
    else if (key == "delay-bound") spec.delay_bound = std::stoi(value);
    else if (key == "schedule") {
      std::istringstream in(value);
      spec.schedule = parse_schedule(in);
    } else if (key == "sched-seed") spec.sched_seed = std::stoull(value);
    else if (key == "steps") spec.steps = std::stoull(value);
    else if (key == "corrupt") spec.corrupt_fraction = std::stod(value);
    else if (key == "corrupt-seed") spec.corrupt_seed = std::stoull(value);
    else if (key == "cap") spec.cap = std::stoull(value);
    else throw UsageError("unknown spec key '" + key + "'");
  }
  return spec;
}

inline std::string spec_hash(const std::vector<std::string>& lines) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const std::string& line : lines) {
    for (char c : line) {
      h ^= static_cast<uint8_t>(c);
      h *= 0x100000001b3ULL;
    }
    h ^= '\n';
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

inline SchedulerPolicy make_policy(const ExperimentSpec& spec) {
  if (spec.scheduler == "round-robin") return SchedulerPolicy::round_robin();
  if (spec.scheduler == "random-fair")
    return SchedulerPolicy::random_fair(spec.sched_seed);
  if (spec.scheduler == "bounded-delay")
    return SchedulerPolicy::bounded_delay(spec.delay_bound, spec.sched_seed);
  if (spec.scheduler == "scripted")
    return SchedulerPolicy::scripted(spec.schedule);
  throw UsageError("unknown scheduler '" + spec.scheduler + "'");
}

// ---------------------------------------------------------------------------
// Reports.

/// A run's verdict: stabilization with at least one full round of clean
/// suffix, plus per-process liveness.
struct RunVerdict {
  bool stabilized = false;
  bool live = false;
  bool clean() const { return stabilized && live; }
};

inline RunVerdict run_verdict(const System& sys, const Trace& trace,
                              const StabilizationReport& rep,
                              const std::vector<ProcessLiveness>& stats) {
  RunVerdict v;
  uint64_t margin =
      6ull * sys.topology().max_degree() * sys.process_count();
  v.stabilized = rep.global_step.has_value() &&
                 *rep.global_step + margin <= trace.events.size();
  v.live = true;
  for (const ProcessLiveness& pl : stats)
    v.live = v.live && pl.min_writes() >= 1 && pl.loop_exits >= 1;
  return v;
}

inline void write_violations_text(std::ostream& out,
                                  const std::vector<Violation>& violations) {
  for (const Violation& v : violations)
    out << property_name(v.property) << " step=" << v.step << " link="
        << v.writer << "->" << v.reader << " " << v.detail << "\n";
}

/// Structured dump: one JSON record per violation.
inline void write_violations_json(std::ostream& out,
                                  const std::vector<Violation>& violations) {
  for (const Violation& v : violations) {
    nlohmann::ordered_json record{{"property", property_name(v.property)},
                                  {"step", v.step},
                                  {"writer", v.writer},
                                  {"reader", v.reader},
                                  {"detail", v.detail}};
    out << record.dump() << "\n";
  }
}

inline void write_run_report_text(std::ostream& out, const System& sys,
                                  const std::string& hash, const Trace& trace,
                                  const StabilizationReport& rep,
                                  const std::vector<ProcessLiveness>& stats,
                                  const std::vector<Violation>& violations,
                                  const RunVerdict& verdict) {
  out << "spec-hash " << hash << "\n";
  out << "events " << trace.events.size() << "\n";
  out << "violations " << violations.size() << "\n";
  for (const LinkStabilization& ls : rep.links) {
    out << "link " << ls.writer << "->" << ls.reader << " stabilization ";
    if (ls.step)
      out << *ls.step;
    else
      out << "none";
    out << "\n";
  }
  out << "global-stabilization ";
  if (rep.global_step)
    out << *rep.global_step;
  else
    out << "none";
  out << "\n";
  out << "rounds-to-stabilize ";
  if (rep.rounds_to_stabilize)
    out << *rep.rounds_to_stabilize;
  else
    out << "none";
  out << "\n";
  out << "finite-trace-caveat " << (rep.finite_trace_caveat ? "yes" : "no")
      << "\n";
  for (size_t p = 0; p < stats.size(); ++p) {
    out << "process " << p << " steps " << stats[p].steps << " writes";
    for (uint64_t w : stats[p].writes_per_link) out << " " << w;
    out << " loop-exits " << stats[p].loop_exits << "\n";
  }
  out << "verdict " << (verdict.clean() ? "clean" : "dirty") << "\n";
  (void)sys;
}

// ---------------------------------------------------------------------------
// Subcommands (library form; the CLI wraps these).

struct RunResult {
  int exit_code = kOk;
  Trace trace;
  StabilizationReport report;
  std::vector<Violation> violations;
  std::vector<ProcessLiveness> liveness;
  RunVerdict verdict;
};

inline RunResult execute_run(const Instance& inst) {
  const System& sys = inst.system;
  Configuration start = canonical_initial(sys);
  if (inst.spec.corrupt_fraction > 0.0)
    start = corrupt(sys, std::move(start), inst.spec.corrupt_fraction,
                    inst.spec.corrupt_seed);
  RunResult result;
  result.trace =
      run(sys, std::move(start), make_policy(inst.spec), inst.spec.steps);
  result.violations = check_all(sys, result.trace);
  result.report = stabilization_report(sys, result.trace, result.violations);
  result.liveness = liveness_stats(sys, result.trace);
  result.verdict =
      run_verdict(sys, result.trace, result.report, result.liveness);
  result.exit_code = result.verdict.clean() ? kOk : kViolations;
  return result;
}

inline void write_run_artifacts(const Instance& inst, const RunResult& result,
                                const std::string& out_prefix) {
  std::vector<std::string> lines = spec_lines(inst.spec);
  std::string hash = spec_hash(lines);
  {
    std::ofstream out(out_prefix + ".spec");
    for (const std::string& line : lines) out << line << "\n";
  }
  {
    std::ofstream out(out_prefix + ".trace");
    write_trace(out, inst.system, lines, hash, result.trace);
  }
  {
    std::ofstream out(out_prefix + ".violations.txt");
    write_violations_text(out, result.violations);
  }
  {
    std::ofstream out(out_prefix + ".violations.jsonl");
    write_violations_json(out, result.violations);
  }
  {
    std::ofstream out(out_prefix + ".report.txt");
    write_run_report_text(out, inst.system, hash, result.trace, result.report,
                          result.liveness, result.violations, result.verdict);
  }
}

inline int cmd_run(const ExperimentSpec& spec, const std::string& out_prefix,
                   std::ostream& log) {
  Instance inst = build_instance(spec);
  RunResult result = execute_run(inst);
  if (!out_prefix.empty()) write_run_artifacts(inst, result, out_prefix);
  write_run_report_text(log, inst.system, spec_hash(spec_lines(inst.spec)),
                        result.trace, result.report, result.liveness,
                        result.violations, result.verdict);
  return result.exit_code;
}

/// Re-checks a trace artifact: rebuilds the instance from the embedded
/// spec, validates the strict replay invariant, and re-runs every
/// checker.
inline int cmd_check(const std::string& trace_path,
                     const std::string& out_prefix, std::ostream& log) {
  std::ifstream in(trace_path);
  if (!in) throw UsageError("cannot open trace file '" + trace_path + "'");
  ParsedTrace header = read_trace_header(in);
  ExperimentSpec spec = parse_spec_lines(header.spec_lines);
  Instance inst = build_instance(spec);
  std::vector<std::string> lines = spec_lines(inst.spec);
  if (spec_hash(lines) != header.spec_hash)
    throw UsageError("trace file: spec hash mismatch");

  std::ifstream in2(trace_path);
  Trace trace = read_trace_events(in2, inst.system);

  std::vector<Violation> violations = check_all(inst.system, trace);
  StabilizationReport rep = stabilization_report(inst.system, trace);
  std::vector<ProcessLiveness> stats = liveness_stats(inst.system, trace);
  RunVerdict verdict = run_verdict(inst.system, trace, rep, stats);
  if (!out_prefix.empty()) {
    std::ofstream vout(out_prefix + ".violations.txt");
    write_violations_text(vout, violations);
    std::ofstream rout(out_prefix + ".report.txt");
    write_run_report_text(rout, inst.system, header.spec_hash, trace, rep,
                          stats, violations, verdict);
  }
  write_run_report_text(log, inst.system, header.spec_hash, trace, rep, stats,
                        violations, verdict);
  return verdict.clean() ? kOk : kViolations;
}

inline int cmd_explore(const ExperimentSpec& spec,
                       const std::string& out_prefix, std::ostream& log) {
  Instance inst = build_instance(spec);
  const System& sys = inst.system;
  StateGraph graph(sys, spec.cap);  // SizeError -> kTooLarge at the CLI
  NodeSet legit = legitimate_set(graph);
  log << "nodes " << graph.node_count() << "\n";
  log << "legitimate " << legit.popcount() << "\n";
  if (legit.popcount() == 0) {
    log << "verdict no-legitimate-behavior\n";
    if (!out_prefix.empty()) {
      std::ofstream out(out_prefix + ".verdict.txt");
      out << "no-legitimate-behavior\n";
    }
    return kEmptyLegit;
  }
  VerifyResult res = verify_convergence(graph, legit);
  bool clean_in =
      legit.get(graph.space().encode(canonical_initial(sys)));
  log << "clean-initial-legitimate " << (clean_in ? "yes" : "no") << "\n";
  if (res.verified) {
    log << "verdict verified\n";
    if (!out_prefix.empty()) {
      std::ofstream out(out_prefix + ".verdict.txt");
      out << "verified\n";
      out << "nodes " << graph.node_count() << "\n";
      out << "legitimate " << legit.popcount() << "\n";
    }
    return kOk;
  }
  const Counterexample& cex = *res.cex;
  log << "verdict counterexample\n";
  log << "reason " << cex.reason << "\n";
  log << "cycle-length " << cex.schedule.size() << "\n";
  if (!out_prefix.empty()) {
    {
      std::ofstream out(out_prefix + ".verdict.txt");
      out << "counterexample\n";
      out << "reason " << cex.reason << "\n";
      out << "start-node " << cex.start << "\n";
      out << "cycle-length " << cex.schedule.size() << "\n";
    }
    {
      std::ofstream out(out_prefix + ".cex.sched");
      write_schedule(out, cex.schedule);
    }
    {
      std::ofstream out(out_prefix + ".cex.initial");
      write_configuration(out, sys, graph.space().decode(cex.start), "");
    }
  }
  return kViolations;
}

struct BenchRow {
  int n;
  uint64_t seeds;
  uint64_t max_rounds;
  double mean_rounds;
  uint64_t unstabilized;
};

/**
 * Stabilization-time measurement: for each system size, runs corrupted
 * starts under the spec's policy, growing the trace until the
 * stabilization point clears a full-round margin, and reports
 * rounds-to-stabilize. The topology is the spec's generator name
 * parameterized by n (ring by default).
 */
inline std::vector<BenchRow> execute_bench(const ExperimentSpec& spec,
                                           int n_min, int n_max,
                                           uint64_t seeds) {
  std::vector<BenchRow> rows;
  for (int n = n_min; n <= n_max; ++n) {
    ExperimentSpec cell = spec;
    std::string family = spec.topology.substr(0, spec.topology.find('('));
    if (family == "gnp") {
      std::string args = spec.topology.substr(spec.topology.find('(') + 1);
      args.pop_back();  // ')'
      auto comma = args.find(',');
      std::string p = args.substr(comma + 1);
      p = p.substr(0, p.find(','));
      cell.topology = "gnp(" + std::to_string(n) + "," + p + "," +
                      std::to_string(spec.corrupt_seed) + ")";
    } else {
      cell.topology = family + "(" + std::to_string(n) + ")";
    }
    BenchRow row{n, seeds, 0, 0.0, 0};
    double total = 0;
    for (uint64_t seed = 0; seed < seeds; ++seed) {
      cell.corrupt_seed = Rng::derive(spec.corrupt_seed, seed * 2 + 1);
      cell.sched_seed = Rng::derive(spec.sched_seed, seed * 2 + 2);
      Instance inst = build_instance(cell);
      uint64_t margin = 6ull * inst.system.topology().max_degree() *
                        inst.system.process_count();
      std::optional<uint64_t> rounds_taken;
      uint64_t len = std::max<uint64_t>(margin * 8, 4096);
      while (true) {
        ExperimentSpec attempt = cell;
        attempt.steps = std::min(len, spec.steps);
        Instance ai = build_instance(attempt);
        RunResult rr = execute_run(ai);
        if (rr.verdict.stabilized && rr.report.rounds_to_stabilize) {
          rounds_taken = *rr.report.rounds_to_stabilize;
          break;
        }
        if (attempt.steps >= spec.steps) break;
        len *= 4;
      }
      if (!rounds_taken) {
        ++row.unstabilized;
      } else {
        row.max_rounds = std::max(row.max_rounds, *rounds_taken);
        total += static_cast<double>(*rounds_taken);
      }
    }
    row.mean_rounds =
        seeds > row.unstabilized
            ? total / static_cast<double>(seeds - row.unstabilized)
            : 0.0;
    rows.push_back(row);
  }
  return rows;
}

inline void write_bench_table(std::ostream& out,
                              const std::vector<BenchRow>& rows, char sep) {
  out << "n" << sep << "seeds" << sep << "max_rounds" << sep << "mean_rounds"
      << sep << "unstabilized\n";
  for (const BenchRow& r : rows) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", r.mean_rounds);
    out << r.n << sep << r.seeds << sep << r.max_rounds << sep << buf << sep
        << r.unstabilized << "\n";
  }
}

inline int cmd_bench(const ExperimentSpec& spec, int n_min, int n_max,
                     uint64_t seeds, const std::string& out_prefix,
                     std::ostream& log) {
  std::vector<BenchRow> rows = execute_bench(spec, n_min, n_max, seeds);
  write_bench_table(log, rows, '\t');
  if (!out_prefix.empty()) {
    std::ofstream t(out_prefix + ".bench.txt");
    write_bench_table(t, rows, '\t');
    std::ofstream tsv(out_prefix + ".bench.tsv");
    write_bench_table(tsv, rows, '\t');
  }
  for (const BenchRow& r : rows)
    if (r.unstabilized > 0) return kViolations;
  return kOk;
}

}  // namespace selfstab

#endif  // SELFSTAB_EXPERIMENT_HPP_
