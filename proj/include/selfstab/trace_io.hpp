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

#ifndef SELFSTAB_TRACE_IO_HPP_
#define SELFSTAB_TRACE_IO_HPP_

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "selfstab/checker.hpp"
#include "selfstab/config.hpp"
#include "selfstab/scheduler.hpp"

namespace selfstab {

// Trace files are line oriented and self-contained: a comment header
// carries the canonical experiment spec (so a trace can be re-checked
// without any other artifact) and the initial configuration, followed
// by one event per line:
//
//   step process action kind owner peer value pc_before pc_after

inline void write_configuration(std::ostream& out, const System& sys,
                                const Configuration& cfg,
                                const std::string& prefix) {
  out << prefix << "regs";
  for (uint8_t v : cfg.regs) out << ' ' << int(v);
  out << '\n';
  for (size_t p = 0; p < cfg.procs.size(); ++p) {
    out << prefix << "proc " << p << ' ' << cfg.procs[p].pc;
    for (uint8_t v : cfg.procs[p].locals) out << ' ' << int(v);
    out << '\n';
  }
  out << prefix << "cursors";
  for (uint16_t v : cfg.cursors) out << ' ' << v;
  out << '\n';
  (void)sys;
}

inline void write_event(std::ostream& out, const System& sys,
                        const Event& ev) {
  out << ev.step_index << ' ' << ev.process << ' '
      << (ev.action == StepAction::Read ? "read" : "write") << ' '
      << register_kind_name(ev.reg.kind) << ' ' << ev.reg.owner << ' '
      << ev.reg.peer << ' ' << format_value(sys.alphabet(), ev.value) << ' '
      << ev.pc_before << ' ' << ev.pc_after << '\n';
}

inline void write_trace(std::ostream& out, const System& sys,
                        const std::vector<std::string>& spec_lines,
                        const std::string& spec_hash, const Trace& trace) {
  out << "# selfstab trace v1\n";
  out << "# spec-hash " << spec_hash << '\n';
  for (const std::string& line : spec_lines) out << "# spec " << line << '\n';
  write_configuration(out, sys, trace.initial, "# init ");
  out << "# events " << trace.events.size() << '\n';
  for (const Event& ev : trace.events) write_event(out, sys, ev);
}

struct ParsedTrace {
  std::vector<std::string> spec_lines;
  std::string spec_hash;
  Trace trace;  // final_config reconstructed by replay
};

namespace detail {

inline Configuration parse_configuration(const System& sys,
                                         const std::vector<std::string>& lines) {
  Configuration cfg = canonical_initial(sys);
  for (const std::string& line : lines) {
    std::istringstream in(line);
    std::string tag;
    in >> tag;
    if (tag == "regs") {
      for (auto& r : cfg.regs) {
        int v;
        if (!(in >> v)) throw UsageError("trace file: short register line");
        r = static_cast<uint8_t>(v);
      }
    } else if (tag == "proc") {
      size_t id;
      in >> id;
      if (id >= cfg.procs.size())
        throw UsageError("trace file: unknown process in init");
      in >> cfg.procs[id].pc;
      for (auto& l : cfg.procs[id].locals) {
        int v;
        if (!(in >> v)) throw UsageError("trace file: short locals line");
        l = static_cast<uint8_t>(v);
      }
      if (cfg.procs[id].pc >= sys.program(id).location_count())
        throw UsageError("trace file: pc out of range");
    } else if (tag == "cursors") {
      for (auto& c : cfg.cursors) {
        int v;
        if (!(in >> v)) throw UsageError("trace file: short cursor line");
        c = static_cast<uint16_t>(v);
      }
    } else {
      throw UsageError("trace file: unknown init tag '" + tag + "'");
    }
  }
  return cfg;
}

}  // namespace detail

/// First pass over a trace file: header lines only (the system must be
/// built from the spec lines before events can be interpreted).
inline ParsedTrace read_trace_header(std::istream& in) {
  ParsedTrace parsed;
  std::string line;
  while (in.peek() == '#') {
    std::getline(in, line);
    std::istringstream ls(line);
    std::string hash_tag, word;
    ls >> hash_tag >> word;  // "#" <tag>
    if (word == "spec-hash") {
      ls >> parsed.spec_hash;
    } else if (word == "spec") {
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest[0] == ' ') rest.erase(0, 1);
      parsed.spec_lines.push_back(rest);
    }
    // init and event-count lines are re-read by read_trace_events
  }
  return parsed;
}

/// Second pass: initial configuration and events, validated against
/// the system.
inline Trace read_trace_events(std::istream& in, const System& sys) {
  std::vector<std::string> init_lines;
  std::string line;
  uint64_t expected_events = 0;
  while (in.peek() == '#') {
    std::getline(in, line);
    if (line.rfind("# init ", 0) == 0)
      init_lines.push_back(line.substr(7));
    else if (line.rfind("# events ", 0) == 0)
      expected_events = std::stoull(line.substr(9));
  }
  Trace trace;
  trace.initial = detail::parse_configuration(sys, init_lines);

  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Event ev;
    std::string action, kind, value;
    if (!(ls >> ev.step_index >> ev.process >> action >> kind >> ev.reg.owner >>
          ev.reg.peer >> value >> ev.pc_before >> ev.pc_after))
      throw UsageError("trace file: malformed event line: " + line);
    if (action == "read")
      ev.action = StepAction::Read;
    else if (action == "write")
      ev.action = StepAction::Write;
    else
      throw UsageError("trace file: unknown action '" + action + "'");
    ev.reg.kind = register_kind_from_name(kind);
    if (value.size() != 1) throw UsageError("trace file: bad value token");
    if (register_domain(ev.reg.kind) == ValueTag::Message) {
      ev.value = Value::message(sys.alphabet().index_of(value[0]));
    } else {
      if (value != "0" && value != "1")
        throw UsageError("trace file: bad bit token '" + value + "'");
      ev.value = Value::bit(value == "1" ? 1 : 0);
    }
    trace.events.push_back(ev);
  }
  if (trace.events.size() != expected_events)
    throw UsageError("trace file: event count mismatch");

  // reconstruct the final configuration by replay
  Configuration cfg = trace.initial;
  for (const Event& ev : trace.events) {
    Event got = apply_step(sys, cfg, ev.process, ev.step_index);
    if (!(got == ev))
      throw UsageError("trace file: events do not replay from the initial "
                       "configuration (diverges at step " +
                       std::to_string(ev.step_index) + ")");
  }
  trace.final_config = std::move(cfg);
  return trace;
}

}  // namespace selfstab

#endif  // SELFSTAB_TRACE_IO_HPP_
